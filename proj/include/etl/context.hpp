#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "etl/dates.hpp"
#include "etl/db.hpp"
#include "etl/error.hpp"
#include "etl/manifest.hpp"

namespace etl {

struct SourceDescriptor;

/// One verb execution, as recorded in memory and in
/// `<dir>/phase_log.jsonl`.
struct PhaseLogEntry {
  std::string verb;
  std::string selector;
  std::string started_at;
  std::string finished_at;
  std::string outcome;  // "ok", "partial", "failed"
  std::vector<std::string> files;
  std::int64_t rows_loaded = 0;
};

inline nlohmann::json phase_log_entry_to_json(const PhaseLogEntry& e) {
  return nlohmann::json{{"verb", e.verb},         {"selector", e.selector},
                        {"started_at", e.started_at}, {"finished_at", e.finished_at},
                        {"outcome", e.outcome},   {"files", e.files},
                        {"rows_loaded", e.rows_loaded}};
}

struct FetchSettings {
  int jobs = 4;
  std::chrono::seconds timeout{60};
};

using NoticeSink = std::function<void(const std::string&)>;

/// Where notices go for newly constructed contexts. Defaults to stderr
/// with the "etl: " prefix; assign to redirect or silence globally.
inline NoticeSink& default_notice_sink() {
  static NoticeSink sink = [](const std::string& msg) { std::cerr << "etl: " << msg << "\n"; };
  return sink;
}

/// The pipeline "noun": one source, one working directory with `raw/`
/// and `load/` beneath it, one database connection, and a log of every
/// verb that ran. Verbs take a context by reference and hand the same
/// object back, so they chain.
class EtlContext {
 public:
  std::string source_name;
  fs::path dir;
  fs::path raw_dir;
  fs::path load_dir;
  ConnectionProfile db_profile;
  bool ephemeral_db = false;
  std::unique_ptr<Db> db;
  const SourceDescriptor* source = nullptr;
  std::vector<PhaseLogEntry> phase_log;
  FetchSettings fetch;
  ManifestWriter manifest;

  /// Single-line diagnostics; swap the sink to capture them.
  NoticeSink notice_sink = default_notice_sink();

  EtlContext() = default;
  EtlContext(const EtlContext&) = delete;
  EtlContext& operator=(const EtlContext&) = delete;
  EtlContext(EtlContext&&) = default;
  EtlContext& operator=(EtlContext&&) = default;

  void notice(const std::string& msg) const {
    if (notice_sink) notice_sink(msg);
  }

  fs::path manifest_file() const { return dir / "manifest.jsonl"; }
  fs::path phase_log_file() const { return dir / "phase_log.jsonl"; }

  void log_phase(PhaseLogEntry entry) {
    std::ofstream out(phase_log_file(), std::ios::binary | std::ios::app);
    if (out) out << phase_log_entry_to_json(entry).dump() << '\n';
    phase_log.push_back(std::move(entry));
  }
};

/// Creates a unique directory under the system temp area.
inline fs::path make_temp_dir(const std::string& prefix) {
  static std::mt19937_64 rng(std::random_device{}());
  for (int attempt = 0; attempt < 64; ++attempt) {
    char suffix[18];
    std::snprintf(suffix, sizeof suffix, "%016llx",
                  static_cast<unsigned long long>(rng()));
    fs::path candidate = fs::temp_directory_path() / (prefix + suffix);
    std::error_code ec;
    if (fs::create_directory(candidate, ec) && !ec) return candidate;
  }
  throw Error(ErrorCode::Io, "cannot create a temporary directory");
}

// ---------------------------------------------------------------------------
// Status
// ---------------------------------------------------------------------------

struct StatusReport {
  std::uint64_t file_count = 0;
  std::uint64_t bytes_on_disk = 0;
  std::string db_descriptor;
  std::vector<std::string> table_names;

  std::string render() const {
    char first[96];
    std::snprintf(first, sizeof first, "dir:  %llu files occupying %.3f GB",
                  static_cast<unsigned long long>(file_count),
                  static_cast<double>(bytes_on_disk) / 1e9);
    std::string tbls;
    for (std::size_t i = 0; i < table_names.size(); ++i) {
      if (i) tbls += ", ";
      tbls += table_names[i];
    }
    return std::string(first) + "\nsrc:  " + db_descriptor + "\ntbls: " + tbls + "\n";
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"file_count", file_count},
                          {"bytes_on_disk", bytes_on_disk},
                          {"db_descriptor", db_descriptor},
                          {"table_names", table_names}};
  }
};

/// Counts and sizes are computed fresh from disk and the database. The
/// context's own embedded database file (and its journal siblings) is
/// bookkeeping, not data, and is not counted.
inline StatusReport status(EtlContext& ctx) {
  StatusReport report;
  const std::string db_file =
      ctx.db_profile.engine == ConnectionProfile::Engine::EmbeddedFile
          ? ctx.db_profile.path.string()
          : std::string();
  for (const auto& entry : fs::recursive_directory_iterator(ctx.dir)) {
    if (!entry.is_regular_file()) continue;
    if (!db_file.empty() && entry.path().string().rfind(db_file, 0) == 0) continue;
    ++report.file_count;
    report.bytes_on_disk += entry.file_size();
  }
  report.db_descriptor = ctx.db ? ctx.db->describe() : ctx.db_profile.describe();
  if (ctx.db) report.table_names = ctx.db->list_tables();
  return report;
}

}  // namespace etl
