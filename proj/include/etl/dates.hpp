#pragma once

#include <algorithm>
#include <compare>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "etl/error.hpp"

namespace etl {

/// A calendar (year, month) pair. Ordering is by year, then month.
struct YearMonth {
  int year = 0;
  int month = 0;

  auto operator<=>(const YearMonth&) const = default;
};

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;

inline bool valid_year_month(int year, int month) {
  return year >= kMinYear && year <= kMaxYear && month >= 1 && month <= 12;
}

/// Which date-partitioned files a verb touches: the cross product of
/// `years` and `months` (months default to 1..12 when empty), or an
/// explicit list of pairs when one is given.
struct Selector {
  std::set<int> years;
  std::set<int> months;
  std::optional<std::vector<YearMonth>> explicit_pairs;

  static Selector of(std::set<int> years, std::set<int> months = {}) {
    Selector sel;
    sel.years = std::move(years);
    sel.months = std::move(months);
    return sel;
  }

  static Selector pairs(std::vector<YearMonth> pairs) {
    Selector sel;
    sel.explicit_pairs = std::move(pairs);
    return sel;
  }
};

inline std::vector<YearMonth> expand_selector(const Selector& sel) {
  std::vector<YearMonth> out;
  if (sel.explicit_pairs) {
    out = *sel.explicit_pairs;
  } else {
    const std::set<int>* months = &sel.months;
    static const std::set<int> all_months = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    if (months->empty()) months = &all_months;
    for (int y : sel.years)
      for (int m : *months) out.push_back({y, m});
  }
  std::erase_if(out, [](const YearMonth& ym) { return !valid_year_month(ym.year, ym.month); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::string selector_to_string(const std::optional<Selector>& sel) {
  if (!sel) return "all";
  std::string out;
  auto join = [](const std::set<int>& xs) {
    std::string s;
    for (int x : xs) {
      if (!s.empty()) s += ",";
      s += std::to_string(x);
    }
    return s;
  };
  if (sel->explicit_pairs) {
    for (const auto& ym : *sel->explicit_pairs) {
      if (!out.empty()) out += ",";
      out += std::to_string(ym.year) + "-" + std::to_string(ym.month);
    }
    return out.empty() ? "none" : out;
  }
  out = "years=" + join(sel->years);
  if (!sel->months.empty()) out += " months=" + join(sel->months);
  return out;
}

inline std::regex compile_pattern(const std::string& pattern) {
  try {
    return std::regex(pattern);
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::InvalidPattern, "'" + pattern + "': " + e.what());
  }
}

/// Pulls a YearMonth out of a filename. The pattern's first capture group
/// must match the YYYYMM digits, e.g. "^(\d{6})-" against
/// "201307-citibike-tripdata.zip". Unmatched names return nullopt; a name
/// that matches but carries an impossible date is an error.
inline std::optional<YearMonth> extract_date_from_filename(const std::string& name,
                                                           const std::string& pattern) {
  std::regex re = compile_pattern(pattern);
  if (re.mark_count() < 1)
    throw Error(ErrorCode::InvalidPattern, "'" + pattern + "' has no capture group for the date");
  std::string base = std::filesystem::path(name).filename().string();
  std::smatch m;
  if (!std::regex_search(base, m, re) || !m[1].matched) return std::nullopt;
  const std::string cap = m[1].str();
  if (cap.size() != 6 || !std::all_of(cap.begin(), cap.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw Error(ErrorCode::InvalidDate, "'" + base + "': captured '" + cap + "' is not YYYYMM");
  int year = std::stoi(cap.substr(0, 4));
  int month = std::stoi(cap.substr(4, 2));
  if (!valid_year_month(year, month))
    throw Error(ErrorCode::InvalidDate,
                "'" + base + "': " + std::to_string(year) + "-" + std::to_string(month) +
                    " is out of range");
  return YearMonth{year, month};
}

/// Keeps exactly the paths whose filename date falls inside the selector,
/// preserving input order. Names without a date are skipped silently.
inline std::vector<std::string> match_files_by_year_months(const std::vector<std::string>& paths,
                                                           const std::string& pattern,
                                                           const Selector& sel) {
  const auto expanded = expand_selector(sel);
  const std::set<YearMonth> wanted(expanded.begin(), expanded.end());
  std::vector<std::string> out;
  for (const auto& p : paths) {
    auto ym = extract_date_from_filename(p, pattern);
    if (ym && wanted.count(*ym)) out.push_back(p);
  }
  return out;
}

/// Parses "1996:1997" / "1:6,9" range lists (the shape the verbs take on
/// the command line). Throws InvalidPattern on malformed input; bounds
/// checking is the caller's concern.
inline std::set<int> parse_range_list(const std::string& text) {
  std::set<int> out;
  std::size_t pos = 0;
  auto parse_int = [&](std::size_t& i) {
    std::size_t start = i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start || (i == start + 1 && !std::isdigit(static_cast<unsigned char>(text[start]))))
      throw Error(ErrorCode::InvalidPattern, "bad integer in range list '" + text + "'");
    return std::stoi(text.substr(start, i - start));
  };
  while (pos < text.size()) {
    int a = parse_int(pos);
    int b = a;
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      b = parse_int(pos);
    }
    if (b < a) throw Error(ErrorCode::InvalidPattern, "descending range in '" + text + "'");
    for (int v = a; v <= b; ++v) out.insert(v);
    if (pos < text.size()) {
      if (text[pos] != ',')
        throw Error(ErrorCode::InvalidPattern, "unexpected '" + std::string(1, text[pos]) + "' in range list");
      ++pos;
      if (pos == text.size())
        throw Error(ErrorCode::InvalidPattern, "trailing ',' in range list '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidPattern, "empty range list");
  return out;
}

}  // namespace etl
