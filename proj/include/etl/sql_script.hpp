#pragma once

#include <string>
#include <vector>

namespace etl {

namespace detail {

/// Strips SQL comments and whitespace; used to drop statements with no
/// semantic content (e.g. a trailing "-- done" after the last semicolon).
inline bool sql_effectively_empty(const std::string& text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
    } else if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      while (i < n && text[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      i += 2;
      while (i + 1 < n && !(text[i] == '*' && text[i + 1] == '/')) ++i;
      i = (i + 1 < n) ? i + 2 : n;
    } else {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// Splits a SQL script on top-level semicolons. Semicolons inside
/// single-quoted literals, double-quoted identifiers, `--` line comments
/// and `/* */` block comments do not split. Statements that carry no
/// content beyond comments and whitespace are dropped.
inline std::vector<std::string> split_statements(const std::string& script) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  const std::size_t n = script.size();

  auto flush = [&]() {
    if (!detail::sql_effectively_empty(current)) {
      // trim outer whitespace, keep interior intact
      std::size_t b = current.find_first_not_of(" \t\r\n");
      std::size_t e = current.find_last_not_of(" \t\r\n");
      out.push_back(current.substr(b, e - b + 1));
    }
    current.clear();
  };

  while (i < n) {
    char c = script[i];
    if (c == '\'' || c == '"') {
      char quote = c;
      current.push_back(c);
      ++i;
      while (i < n) {
        current.push_back(script[i]);
        if (script[i] == quote) {
          if (i + 1 < n && script[i + 1] == quote) {  // doubled-quote escape
            current.push_back(script[i + 1]);
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ++i;
      }
    } else if (c == '-' && i + 1 < n && script[i + 1] == '-') {
      while (i < n && script[i] != '\n') current.push_back(script[i++]);
    } else if (c == '/' && i + 1 < n && script[i + 1] == '*') {
      current += "/*";
      i += 2;
      while (i < n) {
        if (script[i] == '*' && i + 1 < n && script[i + 1] == '/') {
          current += "*/";
          i += 2;
          break;
        }
        current.push_back(script[i++]);
      }
    } else if (c == ';') {
      flush();
      ++i;
    } else {
      current.push_back(c);
      ++i;
    }
  }
  flush();
  return out;
}

}  // namespace etl
