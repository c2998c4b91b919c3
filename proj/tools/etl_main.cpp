// etl — command-line front end for the pipeline library.
//
// usage:
//   etl <source> <command> [options]
//   etl scaffold <name> [--out DIR] [--url URL]
//   etl bench [--rows N] [--db DB]

#include <etl/etl.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace fs = std::filesystem;

namespace {

int usage(std::ostream& out, int code) {
  out << "usage: etl <source> <command> [options]\n"
         "       etl scaffold <name> [--out DIR] [--url URL]\n"
         "       etl bench [--rows N] [--db DB]\n"
         "\n"
         "commands:\n"
         "  init        run the source's SQL init script, or drop all tables\n"
         "  extract     download raw files into <dir>/raw\n"
         "  transform   produce loadable CSVs in <dir>/load\n"
         "  load        import load-dir CSVs into the database\n"
         "  update      extract + transform + load with the same selector\n"
         "  create      init + update + cleanup\n"
         "  cleanup     delete raw/load files matching --pattern\n"
         "  status      file counts, database, tables (--json for machines)\n"
         "  verify      re-checksum the download manifest\n"
         "\n"
         "options:\n"
         "  --dir DIR       working directory (default: $ETL_DIR, else a temp dir)\n"
         "  --db DB         database file path, or profiles.ini:GROUP\n"
         "  --years LIST    e.g. 1996:1997 or 2013,2015\n"
         "  --months LIST   e.g. 1:6,9 (default: all twelve)\n"
         "  --pattern RE    cleanup: basename pattern to delete\n"
         "  --target T      cleanup: raw|load|both (default both)\n"
         "  --script S      init: path to a SQL script, or inline SQL\n"
         "  --jobs N        parallel download workers (default 4)\n"
         "  --timeout SECS  per-file download timeout (default 60)\n"
         "  --json          status: print one JSON object\n"
         "  --quiet         suppress notices\n";
  return code;
}

[[noreturn]] void usage_error(const std::string& message) {
  std::cerr << "etl: " << message << "\n";
  usage(std::cerr, 2);
  std::exit(2);
}

struct Options {
  std::optional<std::string> dir;
  std::optional<std::string> db;
  std::optional<std::string> years;
  std::optional<std::string> months;
  std::optional<std::string> pattern;
  std::string target = "both";
  std::optional<std::string> script;
  std::string out = ".";
  std::string url = "https://example.com/data/sample.csv";
  long long rows = 100000;
  int jobs = 4;
  int timeout_secs = 60;
  bool json = false;
  bool quiet = false;
};

Options parse_options(const std::vector<std::string>& args, std::size_t start) {
  Options opt;
  auto need_value = [&](std::size_t& i, const std::string& flag) -> std::string {
    if (i + 1 >= args.size()) usage_error(flag + " needs a value");
    return args[++i];
  };
  for (std::size_t i = start; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--dir") opt.dir = need_value(i, a);
    else if (a == "--db") opt.db = need_value(i, a);
    else if (a == "--years") opt.years = need_value(i, a);
    else if (a == "--months") opt.months = need_value(i, a);
    else if (a == "--pattern") opt.pattern = need_value(i, a);
    else if (a == "--target") opt.target = need_value(i, a);
    else if (a == "--script") opt.script = need_value(i, a);
    else if (a == "--out") opt.out = need_value(i, a);
    else if (a == "--url") opt.url = need_value(i, a);
    else if (a == "--rows") {
      try {
        opt.rows = std::stoll(need_value(i, a));
      } catch (const std::exception&) {
        usage_error("--rows needs an integer");
      }
      if (opt.rows < 0) usage_error("--rows must be non-negative");
    } else if (a == "--jobs") {
      try {
        opt.jobs = std::stoi(need_value(i, a));
      } catch (const std::exception&) {
        usage_error("--jobs needs an integer");
      }
      if (opt.jobs < 1) usage_error("--jobs must be at least 1");
    } else if (a == "--timeout") {
      try {
        opt.timeout_secs = std::stoi(need_value(i, a));
      } catch (const std::exception&) {
        usage_error("--timeout needs an integer");
      }
      if (opt.timeout_secs < 1) usage_error("--timeout must be at least 1");
    } else if (a == "--json") {
      opt.json = true;
    } else if (a == "--quiet") {
      opt.quiet = true;
    } else {
      usage_error("unknown flag '" + a + "'");
    }
  }
  return opt;
}

std::optional<etl::Selector> build_selector(const Options& opt) {
  if (!opt.years && !opt.months) return std::nullopt;
  etl::Selector sel;
  try {
    if (opt.years) sel.years = etl::parse_range_list(*opt.years);
    if (opt.months) sel.months = etl::parse_range_list(*opt.months);
  } catch (const etl::Error& e) {
    usage_error(e.what());
  }
  for (int y : sel.years)
    if (y < etl::kMinYear || y > etl::kMaxYear)
      usage_error("year " + std::to_string(y) + " is out of range (" +
                  std::to_string(etl::kMinYear) + ".." + std::to_string(etl::kMaxYear) + ")");
  for (int m : sel.months)
    if (m < 1 || m > 12) usage_error("month " + std::to_string(m) + " is out of range (1..12)");
  if (opt.months && !opt.years) usage_error("--months needs --years");
  return sel;
}

/// "profiles.ini:GROUP" selects a group from an INI profile file;
/// anything else is the path of an embedded database file.
etl::ConnectionProfile parse_db_ref(const std::string& ref) {
  auto colon = ref.rfind(':');
  if (colon != std::string::npos && colon > 0) {
    std::string left = ref.substr(0, colon);
    if (left.size() > 4 &&
        (left.compare(left.size() - 4, 4, ".ini") == 0 ||
         left.compare(left.size() - 4, 4, ".cnf") == 0))
      return etl::profile_from_config(left, ref.substr(colon + 1));
  }
  return etl::ConnectionProfile::embedded(ref);
}

/// A source argument is a registered name, a descriptor file, or a
/// directory holding source.toml.
std::string resolve_cli_source(const std::string& arg) {
  etl::ensure_builtin_sources();
  auto& registry = etl::SourceRegistry::instance();
  if (registry.contains(arg)) return arg;
  std::vector<fs::path> candidates;
  if (arg.size() > 5 && arg.compare(arg.size() - 5, 5, ".toml") == 0) candidates.emplace_back(arg);
  candidates.emplace_back(fs::path(arg) / "source.toml");
  candidates.emplace_back(arg + ".toml");
  for (const auto& candidate : candidates) {
    if (fs::exists(candidate)) return etl::load_declarative_source(candidate).name;
  }
  throw etl::Error(etl::ErrorCode::UnknownSource,
                   "unknown source '" + arg + "'. Please make sure that the '" + arg +
                       "' source is registered or that " + arg + "/source.toml exists");
}

etl::EtlContext make_context(const std::string& source, const Options& opt) {
  if (opt.quiet) etl::default_notice_sink() = nullptr;
  std::optional<etl::ConnectionProfile> profile;
  if (opt.db) profile = parse_db_ref(*opt.db);
  std::optional<fs::path> dir;
  if (opt.dir) {
    dir = fs::path(*opt.dir);
  } else if (const char* env = std::getenv("ETL_DIR"); env && *env) {
    dir = fs::path(env);
  }
  etl::EtlContext ctx = etl::new_pipeline(source, std::move(profile), dir);
  ctx.fetch.jobs = opt.jobs;
  ctx.fetch.timeout = std::chrono::seconds(opt.timeout_secs);
  return ctx;
}

int run_scaffold(const std::vector<std::string>& args) {
  if (args.size() < 2) usage_error("scaffold needs a source name");
  std::string name = args[1];
  Options opt = parse_options(args, 2);
  auto created = etl::scaffold_source(name, opt.out, opt.url);
  for (const auto& path : created) std::cout << path.string() << "\n";
  return 0;
}

// The same station/day/hour aggregation run twice: pushed down into the
// engine as a single statement, then computed client-side after streaming
// every row out. The result multisets must agree; the wall times are the
// point of the exercise.
int run_bench(const Options& opt) {
  fs::path work = etl::make_temp_dir("etl-bench-");
  etl::ConnectionProfile profile =
      opt.db ? parse_db_ref(*opt.db) : etl::ConnectionProfile::embedded(work / "bench.sqlite3");
  auto db = etl::connect(profile);

  fs::path csv = work / "trips.csv";
  {
    std::ofstream out(csv, std::ios::binary);
    out << "start_station_id,start_time\n";
    std::mt19937_64 rng(20130901);
    std::uniform_int_distribution<int> station(1, 400);
    std::uniform_int_distribution<int> day(1, 30);
    std::uniform_int_distribution<int> hour(0, 23);
    std::uniform_int_distribution<int> minsec(0, 59);
    char line[64];
    for (long long i = 0; i < opt.rows; ++i) {
      std::snprintf(line, sizeof line, "%d,2013-09-%02d %02d:%02d:%02d\n", station(rng), day(rng),
                    hour(rng), minsec(rng), minsec(rng));
      out << line;
    }
  }
  db->exec("DROP TABLE IF EXISTS \"trips\"");
  std::int64_t loaded = etl::load_csv(*db, "trips", csv);
  if (!opt.quiet)
    std::cerr << "etl: benchmarking against " << loaded << " row(s) in " << profile.describe()
              << "\n";

  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;

  auto t0 = std::chrono::steady_clock::now();
  etl::QueryResult pushed = db->query(
      "SELECT start_station_id, CAST(strftime('%d', start_time) AS INTEGER) AS d, "
      "CAST(strftime('%H', start_time) AS INTEGER) AS h, COUNT(*) AS n "
      "FROM \"trips\" GROUP BY start_station_id, d, h");
  auto t1 = std::chrono::steady_clock::now();

  std::map<Key, std::int64_t> pushed_groups;
  for (const auto& row : pushed.rows)
    pushed_groups[{std::get<std::int64_t>(row[0]), std::get<std::int64_t>(row[1]),
                   std::get<std::int64_t>(row[2])}] = std::get<std::int64_t>(row[3]);

  auto t2 = std::chrono::steady_clock::now();
  etl::QueryResult all = db->query("SELECT start_station_id, start_time FROM \"trips\"");
  std::map<Key, std::int64_t> client_groups;
  for (const auto& row : all.rows) {
    const std::string& ts = std::get<std::string>(row[1]);  // "YYYY-MM-DD HH:MM:SS"
    std::int64_t d = std::stoll(ts.substr(8, 2));
    std::int64_t h = std::stoll(ts.substr(11, 2));
    ++client_groups[{std::get<std::int64_t>(row[0]), d, h}];
  }
  auto t3 = std::chrono::steady_clock::now();

  auto secs = [](auto a, auto b) {
    return std::chrono::duration_cast<std::chrono::duration<double>>(b - a).count();
  };
  char buf[128];
  std::snprintf(buf, sizeof buf, "pushdown:    %zu group(s) in %.3f s", pushed_groups.size(),
                secs(t0, t1));
  std::cout << buf << "\n";
  std::snprintf(buf, sizeof buf, "client-side: %zu group(s) in %.3f s", client_groups.size(),
                secs(t2, t3));
  std::cout << buf << "\n";

  if (pushed_groups != client_groups)
    throw etl::Error(etl::ErrorCode::Mismatch,
                     "pushed-down and client-side aggregations disagree");
  std::cout << "results identical\n";
  return 0;
}

int run_verb(const std::string& source_arg, const std::string& command, const Options& opt) {
  static const std::set<std::string> known = {"init",   "extract", "transform", "load",
                                              "update", "create",  "cleanup",   "status",
                                              "verify"};
  if (!known.count(command)) usage_error("unknown command '" + command + "'");

  std::optional<etl::Selector> sel = build_selector(opt);
  if (command == "cleanup" && !opt.pattern) usage_error("cleanup needs --pattern");
  etl::CleanupTarget target = etl::CleanupTarget::Both;
  if (opt.target == "raw") target = etl::CleanupTarget::Raw;
  else if (opt.target == "load") target = etl::CleanupTarget::Load;
  else if (opt.target != "both") usage_error("--target must be raw, load, or both");

  std::string source = resolve_cli_source(source_arg);
  etl::EtlContext ctx = make_context(source, opt);

  if (command == "status") {
    etl::StatusReport report = etl::status(ctx);
    if (opt.json) std::cout << report.to_json().dump() << "\n";
    else std::cout << report.render();
    return 0;
  }
  if (command == "verify") {
    auto entries = etl::verify_manifest(ctx);
    bool bad = false;
    for (const auto& entry : entries) {
      std::cout << etl::verify_status_name(entry.status) << "\t" << entry.path << "\n";
      if (entry.status != etl::VerifyStatus::Ok) bad = true;
    }
    return bad ? 1 : 0;
  }

  if (command == "init") etl::etl_init(ctx, opt.script);
  else if (command == "extract") etl::etl_extract(ctx, sel);
  else if (command == "transform") etl::etl_transform(ctx, sel);
  else if (command == "load") etl::etl_load(ctx, sel);
  else if (command == "update") etl::etl_update(ctx, sel);
  else if (command == "create") etl::etl_create(ctx, sel);
  else if (command == "cleanup") etl::etl_cleanup(ctx, *opt.pattern, target);

  for (const auto& entry : ctx.phase_log)
    if (entry.outcome != "ok") return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) return usage(std::cerr, 2);
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") return usage(std::cout, 0);

  try {
    if (args[0] == "scaffold") return run_scaffold(args);
    if (args[0] == "bench") return run_bench(parse_options(args, 1));
    if (args.size() < 2) usage_error("missing command after source '" + args[0] + "'");
    return run_verb(args[0], args[1], parse_options(args, 2));
  } catch (const etl::Error& e) {
    std::cerr << "etl error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "etl error: " << e.what() << "\n";
    return 1;
  }
}
