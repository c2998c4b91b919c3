#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "etl/context.hpp"
#include "etl/csv.hpp"
#include "etl/dates.hpp"
#include "etl/db.hpp"
#include "etl/error.hpp"
#include "etl/fetch.hpp"
#include "etl/sha256.hpp"
#include "etl/toml.hpp"
#include "etl/zip.hpp"

namespace etl {

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

struct SourceHooks {
  std::function<DownloadReport(EtlContext&, const std::optional<Selector>&)> extract;
  std::function<std::vector<fs::path>(EtlContext&, const std::optional<Selector>&)> transform;
  std::function<std::map<std::string, std::int64_t>(EtlContext&, const std::optional<Selector>&)> load;
};

/// A pluggable data source. Declarative fields come from a descriptor
/// file; compiled-in hooks are the escape hatch for sources the
/// declarative form cannot express.
struct SourceDescriptor {
  std::string name;
  std::optional<std::string> url_template;  // {year} / {month} / {month:02}
  std::vector<std::pair<std::string, std::string>> bundled_data;  // table name, CSV payload
  std::vector<std::string> bundled_files;  // as declared, relative to the descriptor
  std::optional<std::string> init_script;       // inline SQL
  std::optional<fs::path> init_script_path;     // resolved script file
  std::optional<std::string> filename_pattern;  // date-capture regex
  std::optional<std::string> cleanup_pattern;
  SourceHooks hooks;

  /// Declarative-field equality; hooks are not comparable.
  bool declarative_equals(const SourceDescriptor& other) const {
    return name == other.name && url_template == other.url_template &&
           bundled_data == other.bundled_data && bundled_files == other.bundled_files &&
           init_script == other.init_script && init_script_path == other.init_script_path &&
           filename_pattern == other.filename_pattern && cleanup_pattern == other.cleanup_pattern;
  }
};

inline bool template_has_placeholders(const std::string& url_template) {
  return url_template.find("{year}") != std::string::npos ||
         url_template.find("{month}") != std::string::npos ||
         url_template.find("{month:02}") != std::string::npos;
}

inline std::string expand_url_template(const std::string& url_template, const YearMonth& ym) {
  std::string out = url_template;
  auto replace_all = [&](const std::string& token, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  };
  char padded[8];
  std::snprintf(padded, sizeof padded, "%02d", ym.month);
  replace_all("{year}", std::to_string(ym.year));
  replace_all("{month:02}", padded);
  replace_all("{month}", std::to_string(ym.month));
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

class SourceRegistry {
 public:
  static SourceRegistry& instance() {
    static SourceRegistry registry;
    return registry;
  }

  void add(SourceDescriptor desc) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (sources_.count(desc.name))
      throw Error(ErrorCode::DuplicateSource, "source '" + desc.name + "' is already registered");
    std::string name = desc.name;
    sources_[name] = std::make_unique<SourceDescriptor>(std::move(desc));
  }

  const SourceDescriptor* find(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = sources_.find(name);
    return it == sources_.end() ? nullptr : it->second.get();
  }

  const SourceDescriptor& resolve(const std::string& name) const {
    const SourceDescriptor* desc = find(name);
    if (!desc)
      throw Error(ErrorCode::UnknownSource,
                  "unknown source '" + name + "'. Please make sure that the '" + name +
                      "' source is registered");
    return *desc;
  }

  bool contains(const std::string& name) const { return find(name) != nullptr; }

  std::vector<std::string> names() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, desc] : sources_) out.push_back(name);
    return out;
  }

  /// Tests re-register sources freely; pipelines hold descriptor
  /// pointers, so only clear between pipelines.
  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    sources_.clear();
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<SourceDescriptor>> sources_;
};

inline void register_source(SourceDescriptor desc) {
  if (desc.name.empty())
    throw Error(ErrorCode::DescriptorParse, "source descriptor has no name");
  if (desc.url_template) {
    std::string probe = expand_url_template(*desc.url_template, {2000, 1});
    if (probe.find("://") == std::string::npos)
      throw Error(ErrorCode::DescriptorParse,
                  "url_template '" + *desc.url_template + "' does not expand to a URL");
  }
  if (desc.filename_pattern) {
    std::regex re = compile_pattern(*desc.filename_pattern);
    if (re.mark_count() < 1)
      throw Error(ErrorCode::DescriptorParse,
                  "filename_pattern needs a capture group for the YYYYMM date");
  }
  if (desc.cleanup_pattern) compile_pattern(*desc.cleanup_pattern);
  SourceRegistry::instance().add(std::move(desc));
}

inline const SourceDescriptor& resolve_source(const std::string& name) {
  return SourceRegistry::instance().resolve(name);
}

// ---------------------------------------------------------------------------
// Default hooks
// ---------------------------------------------------------------------------

namespace detail {

/// Raw-dir files the selector picks out. With no selector or no
/// filename_pattern, everything matches.
inline std::vector<fs::path> select_files(const fs::path& dir,
                                          const std::optional<std::string>& filename_pattern,
                                          const std::optional<Selector>& sel) {
  std::vector<fs::path> files;
  if (fs::exists(dir))
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (!sel || !filename_pattern) return files;
  std::vector<std::string> as_strings;
  for (const auto& f : files) as_strings.push_back(f.string());
  std::vector<std::string> kept = match_files_by_year_months(as_strings, *filename_pattern, *sel);
  std::vector<fs::path> out;
  for (const auto& s : kept) out.emplace_back(s);
  return out;
}

}  // namespace detail

namespace detail {

/// An explicit selector that expands to nothing selects nothing.
inline bool selects_nothing(const std::optional<Selector>& sel) {
  return sel && expand_selector(*sel).empty();
}

}  // namespace detail

/// Writes bundled data into `raw/`, or expands the URL template over the
/// selector and hands the result to smart_download.
inline DownloadReport default_extract(EtlContext& ctx, const std::optional<Selector>& sel) {
  const SourceDescriptor& desc = *ctx.source;
  DownloadReport report;
  if (detail::selects_nothing(sel)) return report;
  if (!desc.bundled_data.empty()) {
    for (const auto& [table, payload] : desc.bundled_data) {
      std::string name = table + ".csv";
      fs::path target = ctx.raw_dir / name;
      std::string rel = (fs::path("raw") / name).generic_string();
      if (fs::exists(target) && fs::file_size(target) > 0) {
        report.skipped.push_back(rel);
        continue;
      }
      std::ofstream out(target, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + target.string());
      out << payload;
      out.close();
      FileRecord rec;
      rec.url = "bundled:" + table;
      rec.path = rel;
      rec.bytes = fs::file_size(target);
      rec.sha256 = sha256_hex(payload);
      rec.fetched_at = rfc3339_utc_now();
      ctx.manifest.append(rec);
      report.fetched.push_back(std::move(rec));
    }
    return report;
  }
  if (desc.url_template) {
    std::vector<std::string> urls;
    if (template_has_placeholders(*desc.url_template)) {
      if (!sel)
        throw Error(ErrorCode::NothingToExtract,
                    "source '" + desc.name + "' expands {year}/{month} placeholders; pass a selector");
      for (const auto& ym : expand_selector(*sel))
        urls.push_back(expand_url_template(*desc.url_template, ym));
    } else {
      urls.push_back(*desc.url_template);
    }
    urls.erase(std::unique(urls.begin(), urls.end()), urls.end());
    return smart_download(ctx, urls);
  }
  throw Error(ErrorCode::NothingToExtract,
              "source '" + desc.name + "' has neither bundled data nor a url_template");
}

/// Copies selected raw CSVs byte-for-byte into `load/` and pulls the CSV
/// members out of selected raw ZIP archives, flattened to basenames.
/// Anything else in `raw/` is ignored.
inline std::vector<fs::path> default_transform(EtlContext& ctx, const std::optional<Selector>& sel) {
  const SourceDescriptor& desc = *ctx.source;
  if (detail::selects_nothing(sel)) return {};
  std::vector<fs::path> selected = detail::select_files(ctx.raw_dir, desc.filename_pattern, sel);

  if (sel && desc.filename_pattern) {
    // every selected (year, month) must have at least one raw file
    std::set<YearMonth> present;
    for (const auto& f : selected) {
      auto ym = extract_date_from_filename(f.filename().string(), *desc.filename_pattern);
      if (ym) present.insert(*ym);
    }
    for (const auto& ym : expand_selector(*sel)) {
      if (!present.count(ym))
        throw Error(ErrorCode::MissingRawFile,
                    "no raw file for " + std::to_string(ym.year) + "-" +
                        std::to_string(ym.month) + " (pattern " + *desc.filename_pattern + ")");
    }
  }

  std::vector<fs::path> produced;
  for (const auto& file : selected) {
    std::string ext = file.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".csv") {
      fs::path dest = ctx.load_dir / file.filename();
      fs::copy_file(file, dest, fs::copy_options::overwrite_existing);
      produced.push_back(dest);
    } else if (ext == ".zip") {
      for (auto& dest : extract_csv_members(file, ctx.load_dir)) produced.push_back(std::move(dest));
    }
  }
  return produced;
}

/// Imports each selected load-dir CSV into the table named after its
/// stem, creating tables by schema inference when absent.
inline std::map<std::string, std::int64_t> default_load(EtlContext& ctx,
                                                        const std::optional<Selector>& sel) {
  const SourceDescriptor& desc = *ctx.source;
  if (detail::selects_nothing(sel)) return {};
  std::vector<fs::path> candidates = detail::select_files(ctx.load_dir, desc.filename_pattern, sel);
  std::vector<fs::path> csvs;
  for (const auto& f : candidates) {
    std::string ext = f.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".csv") csvs.push_back(f);
  }
  ctx.notice("Loading " + std::to_string(csvs.size()) + " file(s) into the database...");
  std::map<std::string, std::int64_t> loaded;
  for (const auto& f : csvs) loaded[f.stem().string()] += load_csv(*ctx.db, f.stem().string(), f);
  return loaded;
}

// ---------------------------------------------------------------------------
// Declarative descriptors
// ---------------------------------------------------------------------------

inline const std::set<std::string>& descriptor_keys() {
  static const std::set<std::string> keys = {"name",         "url_template", "filename_pattern",
                                             "cleanup_pattern", "init_script", "files"};
  return keys;
}

/// Parses a descriptor file without registering it.
inline SourceDescriptor parse_declarative_source(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  toml::Document doc = toml::parse(buf.str(), file.filename().string());

  for (const auto& [key, value] : doc.entries)
    if (!descriptor_keys().count(key))
      throw Error(ErrorCode::DescriptorParse,
                  file.filename().string() + ": unknown key '" + key + "'");

  SourceDescriptor desc;
  const std::string* name = doc.find_string("name");
  if (!name || name->empty())
    throw Error(ErrorCode::DescriptorParse,
                file.filename().string() + ": missing required field 'name'");
  desc.name = *name;

  if (const std::string* s = doc.find_string("url_template")) desc.url_template = *s;
  if (const std::string* s = doc.find_string("filename_pattern")) desc.filename_pattern = *s;
  if (const std::string* s = doc.find_string("cleanup_pattern")) desc.cleanup_pattern = *s;

  fs::path base = fs::absolute(file).parent_path();
  if (const std::string* s = doc.find_string("init_script")) {
    bool looks_like_path = s->find('\n') == std::string::npos && s->size() > 4 &&
                           s->compare(s->size() - 4, 4, ".sql") == 0;
    if (looks_like_path) {
      fs::path script = fs::path(*s).is_absolute() ? fs::path(*s) : base / *s;
      if (!fs::exists(script))
        throw Error(ErrorCode::DescriptorParse,
                    file.filename().string() + ": init_script '" + *s + "' not found");
      desc.init_script_path = script;
    } else {
      desc.init_script = *s;
    }
  }

  if (const auto* files = doc.find_array("files")) {
    for (const std::string& rel : *files) {
      fs::path data = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
      std::ifstream payload(data, std::ios::binary);
      if (!payload)
        throw Error(ErrorCode::DescriptorParse,
                    file.filename().string() + ": bundled file '" + rel + "' not found");
      std::ostringstream content;
      content << payload.rdbuf();
      desc.bundled_files.push_back(rel);
      desc.bundled_data.emplace_back(data.stem().string(), content.str());
    }
  }
  return desc;
}

/// Parses a descriptor file and registers the result.
inline SourceDescriptor load_declarative_source(const fs::path& file) {
  SourceDescriptor desc = parse_declarative_source(file);
  SourceDescriptor copy = desc;
  register_source(std::move(desc));
  return copy;
}

/// Writes the declarative fields back out as a descriptor document.
inline std::string serialize_source(const SourceDescriptor& desc) {
  std::ostringstream out;
  out << "name = " << toml::emit_string(desc.name) << "\n";
  if (desc.url_template) out << "url_template = " << toml::emit_string(*desc.url_template) << "\n";
  if (desc.filename_pattern)
    out << "filename_pattern = " << toml::emit_string(*desc.filename_pattern) << "\n";
  if (desc.cleanup_pattern)
    out << "cleanup_pattern = " << toml::emit_string(*desc.cleanup_pattern) << "\n";
  if (desc.init_script_path)
    out << "init_script = " << toml::emit_string(desc.init_script_path->string()) << "\n";
  else if (desc.init_script)
    out << "init_script = " << toml::emit_string(*desc.init_script) << "\n";
  if (!desc.bundled_files.empty()) {
    out << "files = [";
    for (std::size_t i = 0; i < desc.bundled_files.size(); ++i) {
      if (i) out << ", ";
      out << toml::emit_string(desc.bundled_files[i]);
    }
    out << "]\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Scaffolder
// ---------------------------------------------------------------------------

/// Generates a ready-to-edit source package: a descriptor whose extract
/// stub points at one example URL, plus a hook-stub file showing the
/// compiled escape hatch. The generated descriptor loads without edits.
inline std::vector<fs::path> scaffold_source(
    const std::string& name, const fs::path& out_dir,
    const std::string& sample_url = "https://example.com/data/sample.csv") {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
    throw Error(ErrorCode::DescriptorParse, "source name must start with a letter");
  for (unsigned char c : name)
    if (!std::isalnum(c) && c != '_' && c != '-')
      throw Error(ErrorCode::DescriptorParse, "source name has unsupported character '" +
                                                  std::string(1, c) + "'");

  fs::path pkg = out_dir / name;
  if (fs::exists(pkg) && !fs::is_empty(pkg))
    throw Error(ErrorCode::TargetExists, pkg.string() + " already exists and is not empty");
  fs::create_directories(pkg);

  fs::path descriptor_file = pkg / "source.toml";
  {
    std::ofstream out(descriptor_file, std::ios::binary | std::ios::trunc);
    out << "# Data source descriptor for '" << name << "'.\n"
        << "#\n"
        << "# Point url_template at the file(s) to download. {year}, {month} and\n"
        << "# {month:02} expand per selected (year, month) pair; a template with\n"
        << "# no placeholders downloads a single file.\n"
        << "name = " << toml::emit_string(name) << "\n"
        << "url_template = " << toml::emit_string(sample_url) << "\n"
        << "\n"
        << "# Uncomment to parse YYYYMM dates out of downloaded filenames so that\n"
        << "# --years/--months select files:\n"
        << "#filename_pattern = \"^(\\\\d{6})-\"\n"
        << "\n"
        << "# Uncomment to give the create verb a cleanup pattern:\n"
        << "#cleanup_pattern = \"\\\\.tmp$\"\n"
        << "\n"
        << "# Uncomment to run a schema script at init (inline SQL or a path):\n"
        << "#init_script = \"init.sql\"\n"
        << "\n"
        << "# Uncomment to bundle CSV payloads shipped next to this descriptor:\n"
        << "#files = [\"data/my_table.csv\"]\n";
  }

  fs::path hooks_file = pkg / "hooks.example.cpp";
  {
    std::ofstream out(hooks_file, std::ios::binary | std::ios::trunc);
    out << "// Compiled hook override for '" << name << "' — the escape hatch for\n"
        << "// sources the descriptor cannot express. Link this into your build and\n"
        << "// call register_" << name << "() before constructing the pipeline; the\n"
        << "// declarative descriptor stays the simpler path.\n"
        << "//\n"
        << "// #include <etl/etl.hpp>\n"
        << "//\n"
        << "// void register_" << name << "() {\n"
        << "//   etl::SourceDescriptor desc;\n"
        << "//   desc.name = \"" << name << "\";\n"
        << "//   desc.hooks.extract = [](etl::EtlContext& ctx,\n"
        << "//                           const std::optional<etl::Selector>&) {\n"
        << "//     std::vector<std::string> urls = {\n"
        << "//         \"" << sample_url << "\",\n"
        << "//     };\n"
        << "//     return etl::smart_download(ctx, urls);\n"
        << "//   };\n"
        << "//   etl::register_source(std::move(desc));\n"
        << "// }\n";
  }

  // self-check: the generated descriptor must parse cleanly
  parse_declarative_source(descriptor_file);
  return {descriptor_file, hooks_file};
}

// ---------------------------------------------------------------------------
// Built-in demo source
// ---------------------------------------------------------------------------

/// The canonical 32-row Motor Trend cars data set; small enough to embed
/// and stable enough to pin golden query results against.
inline const char* demo_cars_csv() {
  return
      "model,mpg,cyl,disp,hp,drat,wt,qsec,vs,am,gear,carb\n"
      "Mazda RX4,21,6,160,110,3.9,2.62,16.46,0,1,4,4\n"
      "Mazda RX4 Wag,21,6,160,110,3.9,2.875,17.02,0,1,4,4\n"
      "Datsun 710,22.8,4,108,93,3.85,2.32,18.61,1,1,4,1\n"
      "Hornet 4 Drive,21.4,6,258,110,3.08,3.215,19.44,1,0,3,1\n"
      "Hornet Sportabout,18.7,8,360,175,3.15,3.44,17.02,0,0,3,2\n"
      "Valiant,18.1,6,225,105,2.76,3.46,20.22,1,0,3,1\n"
      "Duster 360,14.3,8,360,245,3.21,3.57,15.84,0,0,3,4\n"
      "Merc 240D,24.4,4,146.7,62,3.69,3.19,20,1,0,4,2\n"
      "Merc 230,22.8,4,140.8,95,3.92,3.15,22.9,1,0,4,2\n"
      "Merc 280,19.2,6,167.6,123,3.92,3.44,18.3,1,0,4,4\n"
      "Merc 280C,17.8,6,167.6,123,3.92,3.44,18.9,1,0,4,4\n"
      "Merc 450SE,16.4,8,275.8,180,3.07,4.07,17.4,0,0,3,3\n"
      "Merc 450SL,17.3,8,275.8,180,3.07,3.73,17.6,0,0,3,3\n"
      "Merc 450SLC,15.2,8,275.8,180,3.07,3.78,18,0,0,3,3\n"
      "Cadillac Fleetwood,10.4,8,472,205,2.93,5.25,17.98,0,0,3,4\n"
      "Lincoln Continental,10.4,8,460,215,3,5.424,17.82,0,0,3,4\n"
      "Chrysler Imperial,14.7,8,440,230,3.23,5.345,17.42,0,0,3,4\n"
      "Fiat 128,32.4,4,78.7,66,4.08,2.2,19.47,1,1,4,1\n"
      "Honda Civic,30.4,4,75.7,52,4.93,1.615,18.52,1,1,4,2\n"
      "Toyota Corolla,33.9,4,71.1,65,4.22,1.835,19.9,1,1,4,1\n"
      "Toyota Corona,21.5,4,120.1,97,3.7,2.465,20.01,1,0,3,1\n"
      "Dodge Challenger,15.5,8,318,150,2.76,3.52,16.87,0,0,3,2\n"
      "AMC Javelin,15.2,8,304,150,3.15,3.435,17.3,0,0,3,2\n"
      "Camaro Z28,13.3,8,350,245,3.73,3.84,15.41,0,0,3,4\n"
      "Pontiac Firebird,19.2,8,400,175,3.08,3.845,17.05,0,0,3,2\n"
      "Fiat X1-9,27.3,4,79,66,4.08,1.935,18.9,1,1,4,1\n"
      "Porsche 914-2,26,4,120.3,91,4.43,2.14,16.7,0,1,5,2\n"
      "Lotus Europa,30.4,4,95.1,113,3.77,1.513,16.9,1,1,5,2\n"
      "Ford Pantera L,15.8,8,351,264,4.22,3.17,14.5,0,1,5,4\n"
      "Ferrari Dino,19.7,6,145,175,3.62,2.77,15.5,0,1,5,6\n"
      "Maserati Bora,15,8,301,335,3.54,3.57,14.6,0,1,5,8\n"
      "Volvo 142E,21.4,4,121,109,4.11,2.78,18.6,1,1,4,2\n";
}

inline const char* demo_cars_init_sql() {
  return
      "DROP TABLE IF EXISTS \"mtcars\";\n"
      "CREATE TABLE \"mtcars\" (\n"
      "  \"model\" TEXT,\n"
      "  \"mpg\" REAL,\n"
      "  \"cyl\" INTEGER,\n"
      "  \"disp\" REAL,\n"
      "  \"hp\" INTEGER,\n"
      "  \"drat\" REAL,\n"
      "  \"wt\" REAL,\n"
      "  \"qsec\" REAL,\n"
      "  \"vs\" INTEGER,\n"
      "  \"am\" INTEGER,\n"
      "  \"gear\" INTEGER,\n"
      "  \"carb\" INTEGER\n"
      ");\n";
}

/// Registers the built-in sources; a no-op when already present.
inline void ensure_builtin_sources() {
  if (SourceRegistry::instance().contains("demo-cars")) return;
  SourceDescriptor demo;
  demo.name = "demo-cars";
  demo.bundled_data.emplace_back("mtcars", demo_cars_csv());
  demo.init_script = demo_cars_init_sql();
  register_source(std::move(demo));
}

}  // namespace etl
