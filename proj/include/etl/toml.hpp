#pragma once

#include <cctype>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "etl/error.hpp"

namespace etl::toml {

/// The slice of TOML that source descriptors use: top-level `key = value`
/// pairs where a value is a string (basic, literal, or their multi-line
/// forms) or an array of strings. Comments and blank lines throughout.
using Value = std::variant<std::string, std::vector<std::string>>;

struct Document {
  std::vector<std::pair<std::string, Value>> entries;

  const Value* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  const std::string* find_string(const std::string& key) const {
    const Value* v = find(key);
    return v ? std::get_if<std::string>(v) : nullptr;
  }

  const std::vector<std::string>* find_array(const std::string& key) const {
    const Value* v = find(key);
    return v ? std::get_if<std::vector<std::string>>(v) : nullptr;
  }
};

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, const std::string& origin) : text_(text), origin_(origin) {}

  Document parse() {
    Document doc;
    for (;;) {
      skip_trivia();
      if (at_end()) break;
      std::string key = parse_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      Value value = parse_value();
      if (doc.find(key)) fail("duplicate key '" + key + "'");
      doc.entries.emplace_back(std::move(key), std::move(value));
      skip_spaces();
      if (!at_end() && peek() == '#') skip_comment();
      if (!at_end() && peek() != '\n') fail("unexpected text after value");
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::DescriptorParse,
                origin_ + ":" + std::to_string(line_) + ": " + what);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }

  void skip_comment() {
    while (!at_end() && peek() != '\n') advance();
  }

  /// Whitespace, newlines, comments.
  void skip_trivia() {
    for (;;) {
      skip_spaces();
      if (at_end()) return;
      if (peek() == '#') {
        skip_comment();
        continue;
      }
      if (peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }

  std::string parse_key() {
    if (peek() == '[') fail("tables are not supported in descriptor files");
    std::string key;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key.push_back(advance());
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  Value parse_value() {
    if (at_end()) fail("expected a value");
    char c = peek();
    if (c == '[') return parse_array();
    if (c == '"' || c == '\'') return parse_string();
    fail("only strings and arrays of strings are supported");
  }

  std::vector<std::string> parse_array() {
    expect('[');
    std::vector<std::string> items;
    for (;;) {
      skip_trivia();
      if (at_end()) fail("unterminated array");
      if (peek() == ']') {
        advance();
        break;
      }
      items.push_back(parse_string());
      skip_trivia();
      if (at_end()) fail("unterminated array");
      if (peek() == ',') {
        advance();
        continue;
      }
      if (peek() == ']') {
        advance();
        break;
      }
      fail("expected ',' or ']' in array");
    }
    return items;
  }

  bool lookahead_triple(char quote) const {
    return pos_ + 2 < text_.size() && text_[pos_] == quote && text_[pos_ + 1] == quote &&
           text_[pos_ + 2] == quote;
  }

  std::string parse_string() {
    char quote = peek();
    if (quote != '"' && quote != '\'') fail("expected a string");
    bool triple = lookahead_triple(quote);
    if (triple) {
      advance(); advance(); advance();
      // a newline right after the opening delimiter is trimmed
      if (!at_end() && peek() == '\r') advance();
      if (!at_end() && peek() == '\n') advance();
    } else {
      advance();
    }

    std::string out;
    for (;;) {
      if (at_end()) fail("unterminated string");
      if (triple ? lookahead_triple(quote) : peek() == quote) {
        if (triple) { advance(); advance(); advance(); }
        else advance();
        return out;
      }
      char c = advance();
      if (!triple && c == '\n') fail("newline in single-line string");
      if (quote == '"' && c == '\\') {
        if (at_end()) fail("dangling escape");
        char e = advance();
        switch (e) {
          case '"':  out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n':  out.push_back('\n'); break;
          case 't':  out.push_back('\t'); break;
          case 'r':  out.push_back('\r'); break;
          case 'b':  out.push_back('\b'); break;
          case 'f':  out.push_back('\f'); break;
          case 'u': {
            unsigned code = 0;
            for (int i = 0; i < 4; ++i) {
              if (at_end()) fail("truncated \\u escape");
              char h = advance();
              code <<= 4;
              if (h >= '0' && h <= '9') code += h - '0';
              else if (h >= 'a' && h <= 'f') code += 10 + h - 'a';
              else if (h >= 'A' && h <= 'F') code += 10 + h - 'A';
              else fail("bad \\u escape");
            }
            if (code < 0x80) {
              out.push_back(static_cast<char>(code));
            } else if (code < 0x800) {
              out.push_back(static_cast<char>(0xC0 | (code >> 6)));
              out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            } else {
              out.push_back(static_cast<char>(0xE0 | (code >> 12)));
              out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
              out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
            }
            break;
          }
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else {
        out.push_back(c);
      }
    }
  }

  const std::string& text_;
  std::string origin_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace detail

inline Document parse(const std::string& text, const std::string& origin = "<toml>") {
  return detail::Parser(text, origin).parse();
}

/// Emits a TOML string value, choosing a multi-line basic string when the
/// content has newlines.
inline std::string emit_string(const std::string& value) {
  bool multiline = value.find('\n') != std::string::npos;
  std::string out = multiline ? "\"\"\"\n" : "\"";
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"':  out += "\\\""; break;
      case '\n':
        if (multiline) out.push_back('\n');
        else out += "\\n";
        break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out += multiline ? "\"\"\"" : "\"";
  return out;
}

}  // namespace etl::toml
