#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "etl/error.hpp"

namespace etl {

/// Streaming RFC 4180 reader. Handles quoted fields with "" escapes,
/// embedded newlines inside quotes, and both LF and CRLF records.
/// Completely empty lines are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, std::string name = "<csv>")
      : in_(in), name_(std::move(name)) {}

  /// Reads the next record into `row`. Returns false at end of input.
  bool next(std::vector<std::string>& row) {
    row.clear();
    int c = in_.get();
    while (c == '\n' || c == '\r') {  // skip blank lines
      if (c == '\n') ++line_;
      c = in_.get();
    }
    if (c == EOF) return false;
    row_line_ = line_;
    std::string field;
    bool in_quotes = false;
    bool quoted_field = false;
    while (true) {
      if (c == EOF) {
        if (in_quotes) throw ParseError(name_, row_line_, "unterminated quoted field");
        row.push_back(std::move(field));
        return true;
      }
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          int peek = in_.get();
          if (peek == '"') {
            field.push_back('"');
          } else {
            in_quotes = false;
            c = peek;
            continue;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (ch == '"') {
        if (!field.empty() || quoted_field)
          throw ParseError(name_, line_, "quote inside unquoted field");
        in_quotes = true;
        quoted_field = true;
      } else if (ch == ',') {
        row.push_back(std::move(field));
        field.clear();
        quoted_field = false;
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r') {
          int peek = in_.get();
          if (peek != '\n' && peek != EOF) in_.unget();
        }
        ++line_;
        row.push_back(std::move(field));
        return true;
      } else {
        if (quoted_field) throw ParseError(name_, line_, "data after closing quote");
        field.push_back(ch);
      }
      c = in_.get();
    }
  }

  /// 1-based line on which the most recent record started.
  std::size_t row_line() const { return row_line_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_ = 1;
  std::size_t row_line_ = 1;
};

/// CsvReader that owns its file stream.
class CsvFileReader {
 public:
  explicit CsvFileReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), reader_(in_, path.filename().string()) {
    if (!in_) throw Error(ErrorCode::Io, "cannot open " + path.string());
  }

  bool next(std::vector<std::string>& row) { return reader_.next(row); }
  std::size_t row_line() const { return reader_.row_line(); }

 private:
  std::ifstream in_;
  CsvReader reader_;
};

inline std::string csv_quote(const std::string& field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(row[i]);
  }
  out << '\n';
}

/// Loads an entire CSV file; first record is the header.
/// Throws EmptyCsv when there is no header row at all.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  CsvFileReader reader(path);
  CsvTable table;
  if (!reader.next(table.header))
    throw Error(ErrorCode::EmptyCsv, path.string() + " has no header row");
  std::vector<std::string> row;
  while (reader.next(row)) table.rows.push_back(row);
  return table;
}

}  // namespace etl
