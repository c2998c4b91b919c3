#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "etl/context.hpp"
#include "etl/dates.hpp"
#include "etl/db.hpp"
#include "etl/error.hpp"
#include "etl/fetch.hpp"
#include "etl/source.hpp"

namespace etl {

// ---------------------------------------------------------------------------
// Pipeline construction
// ---------------------------------------------------------------------------

/// Builds the pipeline context for a registered source. Without `dir` a
/// fresh temporary directory is used; without `db` an ephemeral embedded
/// database is created inside the directory (and announced, since the
/// caller will want to find it later).
inline EtlContext new_pipeline(const std::string& source_name,
                               std::optional<ConnectionProfile> db = std::nullopt,
                               std::optional<fs::path> dir = std::nullopt) {
  ensure_builtin_sources();
  EtlContext ctx;
  ctx.source = &resolve_source(source_name);
  ctx.source_name = source_name;
  ctx.dir = dir ? fs::absolute(*dir) : make_temp_dir("etl-");
  ctx.raw_dir = ctx.dir / "raw";
  ctx.load_dir = ctx.dir / "load";
  fs::create_directories(ctx.raw_dir);
  fs::create_directories(ctx.load_dir);
  ctx.manifest = ManifestWriter(ctx.manifest_file());
  bool db_existed = false;
  if (db) {
    ctx.db_profile = std::move(*db);
  } else {
    ctx.db_profile = ConnectionProfile::embedded(ctx.dir / "etl.sqlite3");
    ctx.ephemeral_db = true;
    db_existed = fs::exists(ctx.db_profile.path);
  }
  ctx.db = connect(ctx.db_profile);
  if (ctx.ephemeral_db && !db_existed)
    ctx.notice("No database was specified so I created one for you at: " +
               ctx.db_profile.path.string());
  return ctx;
}

// ---------------------------------------------------------------------------
// Verbs
// ---------------------------------------------------------------------------

enum class CleanupTarget { Raw, Load, Both };

namespace detail {

class PhaseScope {
 public:
  PhaseScope(EtlContext& ctx, std::string verb, const std::optional<Selector>& sel)
      : ctx_(ctx) {
    entry_.verb = std::move(verb);
    entry_.selector = selector_to_string(sel);
    entry_.started_at = rfc3339_utc_now();
  }

  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

  PhaseLogEntry& entry() { return entry_; }

  void finish(const std::string& outcome) {
    entry_.finished_at = rfc3339_utc_now();
    entry_.outcome = outcome;
    ctx_.log_phase(std::move(entry_));
    done_ = true;
  }

  ~PhaseScope() {
    if (!done_) finish("failed");
  }

 private:
  EtlContext& ctx_;
  PhaseLogEntry entry_;
  bool done_ = false;
};

/// A script argument is either inline SQL or a path to a script file.
/// Paths get the engine-flavor convention applied: `init.sqlite.sql`
/// is preferred over `init.sql` when both exist.
inline std::string resolve_script_text(const EtlContext& ctx, const std::string& path_or_text) {
  bool looks_like_path = path_or_text.find('\n') == std::string::npos &&
                         path_or_text.size() > 4 &&
                         path_or_text.compare(path_or_text.size() - 4, 4, ".sql") == 0;
  if (!looks_like_path) return path_or_text;
  fs::path script(path_or_text);
  fs::path flavored = script;
  flavored.replace_extension("." + ctx.db->engine_key() + ".sql");
  if (fs::exists(flavored)) script = flavored;
  if (!fs::exists(script))
    throw Error(ErrorCode::Io, "script file " + script.string() + " not found");
  std::ifstream in(script, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string script_display_name(const std::string& path_or_text) {
  bool looks_like_path = path_or_text.find('\n') == std::string::npos &&
                         path_or_text.size() > 4 &&
                         path_or_text.compare(path_or_text.size() - 4, 4, ".sql") == 0;
  return looks_like_path ? fs::path(path_or_text).filename().string() : "(inline)";
}

}  // namespace detail

/// Prepares the database: runs the given script (or the source's bundled
/// one) inside a transaction, or drops every table when no script exists.
inline EtlContext& etl_init(EtlContext& ctx,
                            const std::optional<std::string>& script = std::nullopt) {
  detail::PhaseScope phase(ctx, "init", std::nullopt);
  std::optional<std::string> text;
  std::string display;
  if (script) {
    text = detail::resolve_script_text(ctx, *script);
    display = detail::script_display_name(*script);
  } else if (ctx.source && ctx.source->init_script_path) {
    text = detail::resolve_script_text(ctx, ctx.source->init_script_path->string());
    display = ctx.source->init_script_path->filename().string();
  } else if (ctx.source && ctx.source->init_script) {
    text = *ctx.source->init_script;
    display = "(bundled)";
  }
  if (text) {
    ctx.notice("Initializing DB using SQL script " + display);
    std::size_t n = run_script(*ctx.db, *text);
    phase.entry().rows_loaded = 0;
    phase.entry().files = {display + " [" + std::to_string(n) + " statement(s)]"};
  } else {
    ctx.notice("Initializing DB by deleting all tables");
    wipe(*ctx.db);
  }
  phase.finish("ok");
  return ctx;
}

/// Downloads (or materializes) raw files. Per-file failures are
/// collected: the verb only throws when every requested file failed.
inline EtlContext& etl_extract(EtlContext& ctx,
                               const std::optional<Selector>& sel = std::nullopt) {
  detail::PhaseScope phase(ctx, "extract", sel);
  ctx.notice("Extracting raw data...");
  const auto& hook = ctx.source->hooks.extract;
  DownloadReport report = hook ? hook(ctx, sel) : default_extract(ctx, sel);
  for (const auto& rec : report.fetched) phase.entry().files.push_back(rec.path);
  if (report.all_failed()) {
    std::string detail = report.failed.front().second;
    if (report.failed.size() > 1)
      detail += " (and " + std::to_string(report.failed.size() - 1) + " more)";
    throw Error(ErrorCode::Fetch, "every requested file failed: " + detail);
  }
  phase.finish(report.any_failed() ? "partial" : "ok");
  return ctx;
}

/// Turns raw files into loadable CSVs under `load/`.
inline EtlContext& etl_transform(EtlContext& ctx,
                                 const std::optional<Selector>& sel = std::nullopt) {
  detail::PhaseScope phase(ctx, "transform", sel);
  ctx.notice("Transforming raw data...");
  const auto& hook = ctx.source->hooks.transform;
  std::vector<fs::path> produced = hook ? hook(ctx, sel) : default_transform(ctx, sel);
  for (const auto& p : produced)
    phase.entry().files.push_back((fs::path("load") / p.filename()).generic_string());
  phase.finish("ok");
  return ctx;
}

/// Imports load-dir CSVs into the database.
inline EtlContext& etl_load(EtlContext& ctx,
                            const std::optional<Selector>& sel = std::nullopt) {
  detail::PhaseScope phase(ctx, "load", sel);
  const auto& hook = ctx.source->hooks.load;
  std::map<std::string, std::int64_t> loaded = hook ? hook(ctx, sel) : default_load(ctx, sel);
  for (const auto& [table, rows] : loaded) {
    phase.entry().files.push_back(table);
    phase.entry().rows_loaded += rows;
  }
  phase.finish("ok");
  return ctx;
}

namespace detail {

inline EtlContext& cleanup_impl(EtlContext& ctx, const std::optional<std::string>& pattern,
                                CleanupTarget target) {
  PhaseScope phase(ctx, "cleanup", std::nullopt);
  phase.entry().selector = pattern ? *pattern : "(nothing)";
  if (pattern) {
    std::regex re = compile_pattern(*pattern);
    std::vector<fs::path> dirs;
    if (target == CleanupTarget::Raw || target == CleanupTarget::Both) dirs.push_back(ctx.raw_dir);
    if (target == CleanupTarget::Load || target == CleanupTarget::Both) dirs.push_back(ctx.load_dir);
    for (const auto& dir : dirs) {
      std::vector<fs::path> doomed;
      for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && std::regex_search(entry.path().filename().string(), re))
          doomed.push_back(entry.path());
      std::sort(doomed.begin(), doomed.end());
      for (const auto& path : doomed) {
        fs::remove(path);
        phase.entry().files.push_back(fs::relative(path, ctx.dir).generic_string());
      }
    }
  }
  phase.finish("ok");
  return ctx;
}

}  // namespace detail

/// Deletes files whose basename matches the pattern from the raw and/or
/// load directories.
inline EtlContext& etl_cleanup(EtlContext& ctx, const std::string& pattern,
                               CleanupTarget target = CleanupTarget::Both) {
  return detail::cleanup_impl(ctx, pattern, target);
}

/// extract → transform → load, with the identical selector. The first
/// failing phase aborts the chain.
inline EtlContext& etl_update(EtlContext& ctx,
                              const std::optional<Selector>& sel = std::nullopt) {
  detail::PhaseScope phase(ctx, "update", sel);
  etl_extract(ctx, sel);
  etl_transform(ctx, sel);
  etl_load(ctx, sel);
  phase.finish("ok");
  return ctx;
}

/// init → update → cleanup. Cleanup deletes nothing unless the source
/// declares a cleanup pattern, so a re-run can reuse the cache.
inline EtlContext& etl_create(EtlContext& ctx,
                              const std::optional<Selector>& sel = std::nullopt) {
  detail::PhaseScope phase(ctx, "create", sel);
  etl_init(ctx);
  etl_update(ctx, sel);
  detail::cleanup_impl(ctx, ctx.source ? ctx.source->cleanup_pattern : std::nullopt,
                       CleanupTarget::Both);
  phase.finish("ok");
  return ctx;
}

// ---------------------------------------------------------------------------
// Pipe syntax
// ---------------------------------------------------------------------------

/// `ctx | init() | extract(sel) | transform(sel) | load(sel)` — the
/// pipelined spelling of the verbs.
namespace pipes {

struct Stage {
  std::function<EtlContext&(EtlContext&)> apply;
};

inline EtlContext& operator|(EtlContext& ctx, const Stage& stage) { return stage.apply(ctx); }

inline Stage init(std::optional<std::string> script = std::nullopt) {
  return {[script = std::move(script)](EtlContext& ctx) -> EtlContext& {
    return etl_init(ctx, script);
  }};
}
inline Stage extract(std::optional<Selector> sel = std::nullopt) {
  return {[sel = std::move(sel)](EtlContext& ctx) -> EtlContext& { return etl_extract(ctx, sel); }};
}
inline Stage transform(std::optional<Selector> sel = std::nullopt) {
  return {[sel = std::move(sel)](EtlContext& ctx) -> EtlContext& { return etl_transform(ctx, sel); }};
}
inline Stage load(std::optional<Selector> sel = std::nullopt) {
  return {[sel = std::move(sel)](EtlContext& ctx) -> EtlContext& { return etl_load(ctx, sel); }};
}
inline Stage cleanup(std::string pattern, CleanupTarget target = CleanupTarget::Both) {
  return {[pattern = std::move(pattern), target](EtlContext& ctx) -> EtlContext& {
    return etl_cleanup(ctx, pattern, target);
  }};
}
inline Stage update(std::optional<Selector> sel = std::nullopt) {
  return {[sel = std::move(sel)](EtlContext& ctx) -> EtlContext& { return etl_update(ctx, sel); }};
}
inline Stage create(std::optional<Selector> sel = std::nullopt) {
  return {[sel = std::move(sel)](EtlContext& ctx) -> EtlContext& { return etl_create(ctx, sel); }};
}

}  // namespace pipes

}  // namespace etl
