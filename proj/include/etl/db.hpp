#pragma once

#include <sqlite3.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "etl/csv.hpp"
#include "etl/error.hpp"
#include "etl/ini.hpp"
#include "etl/sql_script.hpp"

namespace etl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Connection profiles
// ---------------------------------------------------------------------------

/// Where a pipeline's tables live: an embedded single-file engine (the
/// default) or a remote server engine.
struct ConnectionProfile {
  enum class Engine { EmbeddedFile, Server };

  Engine engine = Engine::EmbeddedFile;
  fs::path path;  // embedded-file engines
  std::string host;
  int port = 0;
  std::string database;
  std::string user;
  std::string secret;
  std::map<std::string, std::string> options;

  static ConnectionProfile embedded(fs::path file) {
    ConnectionProfile p;
    p.engine = Engine::EmbeddedFile;
    p.path = std::move(file);
    return p;
  }

  std::string describe() const {
    if (engine == Engine::EmbeddedFile)
      return std::string("sqlite ") + sqlite3_libversion() + " [" + path.string() + "]";
    std::string where = user.empty() ? host : user + "@" + host;
    if (port) where += ":" + std::to_string(port);
    return "server [" + where + "/" + database + "]";
  }
};

/// Reads a connection profile from an INI file. Keys in the named group
/// override keys from the default `[client]` section.
inline ConnectionProfile profile_from_config(const fs::path& file, const std::string& group) {
  IniDocument doc = parse_ini_file(file);
  if (!doc.has_section(group))
    throw Error(ErrorCode::MissingGroup, "no [" + group + "] group in " + file.string());

  std::map<std::string, std::string> merged;
  if (doc.has_section("client")) merged = doc.sections.at("client");
  for (const auto& [k, v] : doc.sections.at(group)) merged[k] = v;

  ConnectionProfile p;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = merged.find(key);
    if (it == merged.end()) return std::nullopt;
    std::string v = it->second;
    merged.erase(it);
    return v;
  };

  auto engine = take("engine");
  auto path = take("path");
  auto host = take("host");
  auto port = take("port");
  auto user = take("user");
  auto password = take("password");
  auto database = take("database");
  p.options = std::move(merged);

  bool embedded;
  if (engine) {
    std::string e = *engine;
    std::transform(e.begin(), e.end(), e.begin(), ::tolower);
    if (e == "sqlite" || e == "embedded" || e == "file") embedded = true;
    else if (e == "server" || e == "mysql" || e == "mariadb" || e == "postgres") embedded = false;
    else throw Error(ErrorCode::MalformedConfig, "unknown engine '" + *engine + "'");
  } else {
    embedded = path.has_value() || !host.has_value();
  }

  if (embedded) {
    if (!path)
      throw Error(ErrorCode::MalformedConfig,
                  "group [" + group + "] describes an embedded-file engine but has no path");
    p.engine = ConnectionProfile::Engine::EmbeddedFile;
    fs::path pp(*path);
    p.path = pp.is_absolute() ? pp : file.parent_path() / pp;
  } else {
    if (!host || !database)
      throw Error(ErrorCode::MalformedConfig,
                  "group [" + group + "] describes a server engine but lacks host or database");
    p.engine = ConnectionProfile::Engine::Server;
    p.host = *host;
    p.database = *database;
    if (user) p.user = *user;
    if (password) p.secret = *password;
    if (port) {
      char* end = nullptr;
      long v = std::strtol(port->c_str(), &end, 10);
      if (!end || *end != '\0' || v <= 0 || v > 65535)
        throw Error(ErrorCode::MalformedConfig, "bad port '" + *port + "'");
      p.port = static_cast<int>(v);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Values, schemas, identifiers
// ---------------------------------------------------------------------------

using Value = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Value>;

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

enum class SqlType { Boolean, Integer, Real, Text };

inline const char* sql_type_name(SqlType t) {
  switch (t) {
    case SqlType::Boolean: return "BOOLEAN";
    case SqlType::Integer: return "INTEGER";
    case SqlType::Real:    return "REAL";
    case SqlType::Text:    return "TEXT";
  }
  return "TEXT";
}

struct ColumnSpec {
  std::string name;
  SqlType type = SqlType::Text;

  bool operator==(const ColumnSpec&) const = default;
};

struct TableSchema {
  std::string table;
  std::vector<ColumnSpec> columns;
};

/// Double-quotes an identifier, doubling interior quotes.
inline std::string quote_identifier(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

/// Makes a CSV header cell usable as a column identifier:
/// non-alphanumerics become "_", a leading digit gains a "_" prefix.
inline std::string sanitize_identifier(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (unsigned char c : raw) out.push_back(std::isalnum(c) ? static_cast<char>(c) : '_');
  if (out.empty()) out = "_";
  if (std::isdigit(static_cast<unsigned char>(out[0]))) out.insert(out.begin(), '_');
  return out;
}

inline std::vector<std::string> sanitize_header(const std::vector<std::string>& header) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& cell : header) {
    std::string name = sanitize_identifier(cell);
    std::string candidate = name;
    int suffix = 2;
    while (!seen.insert(candidate).second) candidate = name + "_" + std::to_string(suffix++);
    out.push_back(candidate);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value parsing (shared by schema inference and loading)
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_int64(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;  // from_chars rejects leading '+'
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return false;
  return std::isfinite(out);
}

inline bool is_bool_token(const std::string& s) {
  return s == "true" || s == "false" || s == "TRUE" || s == "FALSE" || s == "0" || s == "1";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Engine interface
// ---------------------------------------------------------------------------

/// Appends rows into one table, batching transactions internally.
class BulkInserter {
 public:
  virtual ~BulkInserter() = default;
  virtual void add_row(const std::vector<std::string>& fields) = 0;
  virtual std::int64_t finish() = 0;
};

class Db {
 public:
  virtual ~Db() = default;

  virtual void exec(const std::string& sql) = 0;
  virtual QueryResult query(const std::string& sql) = 0;
  virtual std::vector<std::string> list_tables() = 0;
  virtual bool table_exists(const std::string& table) = 0;
  virtual std::vector<ColumnSpec> table_columns(const std::string& table) = 0;
  virtual std::unique_ptr<BulkInserter> bulk_inserter(const std::string& table,
                                                      const std::vector<ColumnSpec>& columns) = 0;
  virtual std::string describe() const = 0;
  virtual std::string engine_key() const = 0;
};

// ---------------------------------------------------------------------------
// SQLite implementation
// ---------------------------------------------------------------------------

class SqliteDb final : public Db {
 public:
  explicit SqliteDb(const fs::path& path) : path_(path) {
    if (path.has_parent_path() && !fs::exists(path.parent_path()))
      throw Error(ErrorCode::DbUnreachable, "directory " + path.parent_path().string() + " does not exist");
    int rc = sqlite3_open_v2(path.string().c_str(), &db_,
                             SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
    if (rc != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
      if (db_) sqlite3_close(db_);
      db_ = nullptr;
      throw Error(ErrorCode::DbUnreachable, path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
  }

  SqliteDb(const SqliteDb&) = delete;
  SqliteDb& operator=(const SqliteDb&) = delete;

  ~SqliteDb() override {
    if (db_) sqlite3_close(db_);
  }

  void exec(const std::string& sql) override {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : sqlite3_errmsg(db_);
      sqlite3_free(err);
      throw Error(ErrorCode::Sql, msg);
    }
  }

  QueryResult query(const std::string& sql) override {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK)
      throw Error(ErrorCode::Sql, sqlite3_errmsg(db_));
    QueryResult result;
    int ncol = sqlite3_column_count(stmt);
    for (int i = 0; i < ncol; ++i) result.columns.emplace_back(sqlite3_column_name(stmt, i));
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
      Row row;
      row.reserve(ncol);
      for (int i = 0; i < ncol; ++i) {
        switch (sqlite3_column_type(stmt, i)) {
          case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt, i))); break;
          case SQLITE_FLOAT:   row.emplace_back(sqlite3_column_double(stmt, i)); break;
          case SQLITE_NULL:    row.emplace_back(std::monostate{}); break;
          default:
            row.emplace_back(std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, i)),
                                         static_cast<std::size_t>(sqlite3_column_bytes(stmt, i))));
        }
      }
      result.rows.push_back(std::move(row));
    }
    std::string err = (rc == SQLITE_DONE) ? "" : sqlite3_errmsg(db_);
    sqlite3_finalize(stmt);
    if (!err.empty()) throw Error(ErrorCode::Sql, err);
    return result;
  }

  std::vector<std::string> list_tables() override {
    QueryResult r = query(
        "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' "
        "ORDER BY name");
    std::vector<std::string> names;
    for (const auto& row : r.rows) names.push_back(std::get<std::string>(row[0]));
    return names;
  }

  bool table_exists(const std::string& table) override {
    sqlite3_stmt* stmt = nullptr;
    sqlite3_prepare_v2(db_, "SELECT 1 FROM sqlite_master WHERE type='table' AND name=?", -1,
                       &stmt, nullptr);
    sqlite3_bind_text(stmt, 1, table.c_str(), -1, SQLITE_TRANSIENT);
    bool exists = sqlite3_step(stmt) == SQLITE_ROW;
    sqlite3_finalize(stmt);
    return exists;
  }

  std::vector<ColumnSpec> table_columns(const std::string& table) override {
    QueryResult r = query("PRAGMA table_info(" + quote_identifier(table) + ")");
    std::vector<ColumnSpec> cols;
    for (const auto& row : r.rows) {
      ColumnSpec col;
      col.name = std::get<std::string>(row[1]);
      std::string declared =
          std::holds_alternative<std::string>(row[2]) ? std::get<std::string>(row[2]) : "";
      std::transform(declared.begin(), declared.end(), declared.begin(), ::toupper);
      if (declared.find("INT") != std::string::npos) col.type = SqlType::Integer;
      else if (declared.find("BOOL") != std::string::npos) col.type = SqlType::Boolean;
      else if (declared.find("REAL") != std::string::npos ||
               declared.find("FLOA") != std::string::npos ||
               declared.find("DOUB") != std::string::npos) col.type = SqlType::Real;
      else col.type = SqlType::Text;
      cols.push_back(std::move(col));
    }
    return cols;
  }

  std::unique_ptr<BulkInserter> bulk_inserter(const std::string& table,
                                              const std::vector<ColumnSpec>& columns) override;

  std::string describe() const override {
    return std::string("sqlite ") + sqlite3_libversion() + " [" + path_.string() + "]";
  }

  std::string engine_key() const override { return "sqlite"; }

  sqlite3* raw() { return db_; }

 private:
  fs::path path_;
  sqlite3* db_ = nullptr;
};

/// Rows per transaction during bulk loads.
inline constexpr std::size_t kInsertBatchRows = 5000;

class SqliteBulkInserter final : public BulkInserter {
 public:
  SqliteBulkInserter(SqliteDb& db, const std::string& table, std::vector<ColumnSpec> columns)
      : db_(db), columns_(std::move(columns)) {
    std::string sql = "INSERT INTO " + quote_identifier(table) + " (";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) sql += ", ";
      sql += quote_identifier(columns_[i].name);
    }
    sql += ") VALUES (";
    for (std::size_t i = 0; i < columns_.size(); ++i) sql += i ? ",?" : "?";
    sql += ")";
    if (sqlite3_prepare_v2(db_.raw(), sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
      throw Error(ErrorCode::Sql, sqlite3_errmsg(db_.raw()));
  }

  ~SqliteBulkInserter() override {
    if (stmt_) sqlite3_finalize(stmt_);
    if (in_txn_) sqlite3_exec(db_.raw(), "ROLLBACK", nullptr, nullptr, nullptr);
  }

  void add_row(const std::vector<std::string>& fields) override {
    if (!in_txn_) {
      db_.exec("BEGIN");
      in_txn_ = true;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      int idx = static_cast<int>(i) + 1;
      const std::string& v = fields[i];
      if (v.empty()) {
        sqlite3_bind_null(stmt_, idx);
        continue;
      }
      switch (columns_[i].type) {
        case SqlType::Integer: {
          std::int64_t iv;
          if (detail::parse_int64(v, iv)) sqlite3_bind_int64(stmt_, idx, iv);
          else sqlite3_bind_text(stmt_, idx, v.c_str(), -1, SQLITE_TRANSIENT);
          break;
        }
        case SqlType::Real: {
          double dv;
          if (detail::parse_double(v, dv)) sqlite3_bind_double(stmt_, idx, dv);
          else sqlite3_bind_text(stmt_, idx, v.c_str(), -1, SQLITE_TRANSIENT);
          break;
        }
        case SqlType::Boolean: {
          if (v == "true" || v == "TRUE" || v == "1") sqlite3_bind_int(stmt_, idx, 1);
          else if (v == "false" || v == "FALSE" || v == "0") sqlite3_bind_int(stmt_, idx, 0);
          else sqlite3_bind_text(stmt_, idx, v.c_str(), -1, SQLITE_TRANSIENT);
          break;
        }
        case SqlType::Text:
          sqlite3_bind_text(stmt_, idx, v.c_str(), -1, SQLITE_TRANSIENT);
          break;
      }
    }
    if (sqlite3_step(stmt_) != SQLITE_DONE) {
      std::string msg = sqlite3_errmsg(db_.raw());
      sqlite3_reset(stmt_);
      throw Error(ErrorCode::Sql, msg);
    }
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
    ++count_;
    if (count_ % kInsertBatchRows == 0) {
      db_.exec("COMMIT");
      in_txn_ = false;
    }
  }

  std::int64_t finish() override {
    if (in_txn_) {
      db_.exec("COMMIT");
      in_txn_ = false;
    }
    return count_;
  }

 private:
  SqliteDb& db_;
  std::vector<ColumnSpec> columns_;
  sqlite3_stmt* stmt_ = nullptr;
  bool in_txn_ = false;
  std::int64_t count_ = 0;
};

inline std::unique_ptr<BulkInserter> SqliteDb::bulk_inserter(
    const std::string& table, const std::vector<ColumnSpec>& columns) {
  return std::make_unique<SqliteBulkInserter>(*this, table, columns);
}

/// Opens a database handle for the profile. The embedded single-file
/// engine is built in; server profiles require an engine plugin this
/// build does not carry.
inline std::unique_ptr<Db> connect(const ConnectionProfile& profile) {
  if (profile.engine == ConnectionProfile::Engine::EmbeddedFile)
    return std::make_unique<SqliteDb>(profile.path);
  throw Error(ErrorCode::DbUnreachable,
              "cannot reach server engine at '" + profile.host +
                  "': no server driver in this build");
}

// ---------------------------------------------------------------------------
// Script runner / wipe
// ---------------------------------------------------------------------------

/// Executes every statement of the script inside one transaction.
/// On failure everything rolls back and a ScriptError carries the
/// 1-based index of the offending statement.
inline std::size_t run_script(Db& db, const std::string& script) {
  std::vector<std::string> statements = split_statements(script);
  if (statements.empty()) return 0;
  db.exec("BEGIN");
  for (std::size_t i = 0; i < statements.size(); ++i) {
    try {
      db.exec(statements[i]);
    } catch (const Error& e) {
      try {
        db.exec("ROLLBACK");
      } catch (const Error&) {
        // rollback failure leaves the engine's own error in place
      }
      throw ScriptError(i + 1, e.what());
    }
  }
  db.exec("COMMIT");
  return statements.size();
}

/// Drops every table. Returns how many were dropped.
inline std::size_t wipe(Db& db) {
  std::vector<std::string> tables = db.list_tables();
  for (const auto& t : tables) db.exec("DROP TABLE " + quote_identifier(t));
  return tables.size();
}

// ---------------------------------------------------------------------------
// Schema inference ("column type interpolation")
// ---------------------------------------------------------------------------

/// Infers a table schema from CSV content. Per column, over the sampled
/// rows: all-integer wins INTEGER, else all-real wins REAL, else all
/// boolean tokens win BOOLEAN, else TEXT. Empty strings are nulls and
/// constrain nothing.
inline TableSchema infer_schema(const fs::path& csv, std::size_t sample_rows = 1000) {
  CsvFileReader reader(csv);
  std::vector<std::string> header;
  if (!reader.next(header))
    throw Error(ErrorCode::EmptyCsv, csv.string() + " has no header row");

  TableSchema schema;
  schema.table = csv.stem().string();
  std::vector<std::string> names = sanitize_header(header);

  struct ColumnEvidence {
    bool all_int = true;
    bool all_real = true;
    bool all_bool = true;
  };
  std::vector<ColumnEvidence> evidence(header.size());

  std::vector<std::string> row;
  std::size_t sampled = 0;
  while (sampled < sample_rows && reader.next(row)) {
    if (row.size() != header.size()) throw RaggedRowsError(csv.filename().string(), reader.row_line());
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string& v = row[i];
      if (v.empty()) continue;
      auto& ev = evidence[i];
      if (ev.all_int) {
        std::int64_t iv;
        ev.all_int = detail::parse_int64(v, iv);
      }
      if (ev.all_real) {
        double dv;
        ev.all_real = detail::parse_double(v, dv);
      }
      if (ev.all_bool) ev.all_bool = detail::is_bool_token(v);
    }
    ++sampled;
  }

  for (std::size_t i = 0; i < header.size(); ++i) {
    SqlType type = SqlType::Text;
    if (evidence[i].all_int) type = SqlType::Integer;
    else if (evidence[i].all_real) type = SqlType::Real;
    else if (evidence[i].all_bool) type = SqlType::Boolean;
    schema.columns.push_back({names[i], type});
  }
  if (schema.columns.empty())
    throw Error(ErrorCode::EmptyCsv, csv.string() + " header has no columns");
  return schema;
}

inline std::string create_table_sql(const TableSchema& schema) {
  std::string sql = "CREATE TABLE " + quote_identifier(schema.table) + " (";
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) sql += ", ";
    sql += quote_identifier(schema.columns[i].name) + " " + sql_type_name(schema.columns[i].type);
  }
  sql += ")";
  return sql;
}

// ---------------------------------------------------------------------------
// Bulk CSV load
// ---------------------------------------------------------------------------

/// Appends every data row of `csv` into `table`, creating the table by
/// schema inference when it does not exist. When the table exists, the
/// sanitized CSV header must equal the leading table columns, same names
/// in the same order; otherwise TypeMismatch and nothing is inserted.
inline std::int64_t load_csv(Db& db, const std::string& table, const fs::path& csv,
                             bool create_if_missing = true) {
  TableSchema inferred = infer_schema(csv);
  inferred.table = table;

  std::vector<ColumnSpec> target_columns;
  if (db.table_exists(table)) {
    std::vector<ColumnSpec> existing = db.table_columns(table);
    if (inferred.columns.size() > existing.size())
      throw Error(ErrorCode::TypeMismatch,
                  table + ": CSV has " + std::to_string(inferred.columns.size()) +
                      " columns but the table has " + std::to_string(existing.size()));
    for (std::size_t i = 0; i < inferred.columns.size(); ++i) {
      if (existing[i].name != inferred.columns[i].name)
        throw Error(ErrorCode::TypeMismatch,
                    table + ": column " + std::to_string(i + 1) + " is '" + existing[i].name +
                        "' in the table but '" + inferred.columns[i].name + "' in the CSV");
      target_columns.push_back(existing[i]);
    }
  } else {
    if (!create_if_missing)
      throw Error(ErrorCode::TypeMismatch, "table '" + table + "' does not exist");
    db.exec(create_table_sql(inferred));
    target_columns = inferred.columns;
  }

  CsvFileReader reader(csv);
  std::vector<std::string> row;
  reader.next(row);  // header, already validated
  const std::size_t width = row.size();
  auto inserter = db.bulk_inserter(table, target_columns);
  while (reader.next(row)) {
    if (row.size() != width) throw RaggedRowsError(csv.filename().string(), reader.row_line());
    inserter->add_row(row);
  }
  return inserter->finish();
}

// ---------------------------------------------------------------------------
// Stable CSV export (tests, porting checks)
// ---------------------------------------------------------------------------

inline std::string format_value(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return "";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, ptr);
  }
  return std::get<std::string>(v);
}

/// Exports `SELECT *` of a table as CSV text with a header row.
inline std::string dump_table_csv(Db& db, const std::string& table) {
  QueryResult r = db.query("SELECT * FROM " + quote_identifier(table));
  std::ostringstream out;
  write_csv_row(out, r.columns);
  std::vector<std::string> fields;
  for (const auto& row : r.rows) {
    fields.clear();
    for (const auto& v : row) fields.push_back(format_value(v));
    write_csv_row(out, fields);
  }
  return out.str();
}

/// Exports every table; the practical "is this database identical" probe.
inline std::map<std::string, std::string> dump_all_tables(Db& db) {
  std::map<std::string, std::string> dumps;
  for (const auto& t : db.list_tables()) dumps[t] = dump_table_csv(db, t);
  return dumps;
}

}  // namespace etl
