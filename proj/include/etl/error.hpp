#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace etl {

enum class ErrorCode {
  UnknownSource,
  DuplicateSource,
  NothingToExtract,
  TargetExists,
  DescriptorParse,
  InvalidPattern,
  InvalidDate,
  MissingRawFile,
  CsvParse,
  EmptyCsv,
  RaggedRows,
  Fetch,
  DbUnreachable,
  Sql,
  Script,
  TypeMismatch,
  MissingGroup,
  MalformedConfig,
  Mismatch,
  BadArchive,
  Io,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSource:    return "UnknownSource";
    case ErrorCode::DuplicateSource:  return "DuplicateSource";
    case ErrorCode::NothingToExtract: return "NothingToExtract";
    case ErrorCode::TargetExists:     return "TargetExists";
    case ErrorCode::DescriptorParse:  return "DescriptorParseError";
    case ErrorCode::InvalidPattern:   return "InvalidPattern";
    case ErrorCode::InvalidDate:      return "InvalidDate";
    case ErrorCode::MissingRawFile:   return "MissingRawFile";
    case ErrorCode::CsvParse:         return "ParseError";
    case ErrorCode::EmptyCsv:         return "EmptyCsv";
    case ErrorCode::RaggedRows:       return "RaggedRows";
    case ErrorCode::Fetch:            return "FetchError";
    case ErrorCode::DbUnreachable:    return "DbUnreachable";
    case ErrorCode::Sql:              return "SqlError";
    case ErrorCode::Script:           return "ScriptError";
    case ErrorCode::TypeMismatch:     return "TypeMismatch";
    case ErrorCode::MissingGroup:     return "MissingGroup";
    case ErrorCode::MalformedConfig:  return "MalformedConfig";
    case ErrorCode::Mismatch:         return "MismatchError";
    case ErrorCode::BadArchive:       return "BadArchive";
    case ErrorCode::Io:               return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Failure of one statement inside a SQL script. The index is 1-based.
class ScriptError : public Error {
 public:
  ScriptError(std::size_t statement_index, const std::string& engine_message)
      : Error(ErrorCode::Script,
              "statement " + std::to_string(statement_index) + ": " + engine_message),
        statement_index_(statement_index) {}

  std::size_t statement_index() const { return statement_index_; }

 private:
  std::size_t statement_index_;
};

/// Row whose field count disagrees with the header. The line is 1-based.
class RaggedRowsError : public Error {
 public:
  RaggedRowsError(const std::string& file, std::size_t line)
      : Error(ErrorCode::RaggedRows,
              file + ":" + std::to_string(line) + ": row width differs from header"),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorCode::CsvParse, file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace etl
