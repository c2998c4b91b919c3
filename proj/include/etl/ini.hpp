#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "etl/error.hpp"

namespace etl {

/// Parsed INI document: `[section]` headers, `key=value` lines, `#`/`;`
/// comment lines. Later keys override earlier ones within a section.
struct IniDocument {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has_section(const std::string& name) const { return sections.count(name) > 0; }
};

namespace detail {
inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace detail

inline IniDocument parse_ini(const std::string& text, const std::string& origin = "<ini>") {
  IniDocument doc;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw Error(ErrorCode::MalformedConfig,
                    origin + ":" + std::to_string(line_no) + ": bad section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      doc.sections[section];  // sections may be empty
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::MalformedConfig,
                  origin + ":" + std::to_string(line_no) + ": expected key=value");
    if (section.empty())
      throw Error(ErrorCode::MalformedConfig,
                  origin + ":" + std::to_string(line_no) + ": key outside any section");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::MalformedConfig,
                  origin + ":" + std::to_string(line_no) + ": empty key");
    doc.sections[section][key] = value;
  }
  if (doc.sections.empty())
    throw Error(ErrorCode::MalformedConfig, origin + ": no sections found");
  return doc;
}

inline IniDocument parse_ini_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ini(buf.str(), path.filename().string());
}

}  // namespace etl
