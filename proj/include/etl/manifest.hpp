#pragma once

#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "etl/error.hpp"

namespace etl {

namespace fs = std::filesystem;

/// Provenance of one fetched file. `path` is relative to the pipeline
/// directory, POSIX separators.
struct FileRecord {
  std::string url;
  std::string path;
  std::uint64_t bytes = 0;
  std::string sha256;
  std::string fetched_at;  // RFC 3339 UTC

  bool operator==(const FileRecord&) const = default;
};

inline std::string rfc3339_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

inline nlohmann::json file_record_to_json(const FileRecord& rec) {
  return nlohmann::json{{"url", rec.url},
                        {"path", rec.path},
                        {"bytes", rec.bytes},
                        {"sha256", rec.sha256},
                        {"fetched_at", rec.fetched_at}};
}

inline FileRecord file_record_from_json(const nlohmann::json& j) {
  FileRecord rec;
  rec.url = j.at("url").get<std::string>();
  rec.path = j.at("path").get<std::string>();
  rec.bytes = j.at("bytes").get<std::uint64_t>();
  rec.sha256 = j.at("sha256").get<std::string>();
  rec.fetched_at = j.at("fetched_at").get<std::string>();
  return rec;
}

/// The append-only provenance log, one JSON object per line.
class Manifest {
 public:
  static std::vector<FileRecord> load(const fs::path& file) {
    std::vector<FileRecord> records;
    std::ifstream in(file, std::ios::binary);
    if (!in) return records;  // no manifest yet: empty provenance
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        records.push_back(file_record_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Io,
                    file.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return records;
  }

  /// Collapses history: the last record for each path wins.
  static std::map<std::string, FileRecord> latest(const std::vector<FileRecord>& records) {
    std::map<std::string, FileRecord> live;
    for (const auto& rec : records) live[rec.path] = rec;
    return live;
  }
};

/// Serialized appender; safe for concurrent per-file appends within one
/// process.
class ManifestWriter {
 public:
  ManifestWriter() : mutex_(std::make_unique<std::mutex>()) {}
  explicit ManifestWriter(fs::path file)
      : file_(std::move(file)), mutex_(std::make_unique<std::mutex>()) {}

  ManifestWriter(ManifestWriter&&) = default;
  ManifestWriter& operator=(ManifestWriter&&) = default;

  const fs::path& file() const { return file_; }

  void append(const FileRecord& rec) {
    std::lock_guard<std::mutex> lock(*mutex_);
    std::ofstream out(file_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + file_.string());
    out << file_record_to_json(rec).dump() << '\n';
  }

 private:
  fs::path file_;
  std::unique_ptr<std::mutex> mutex_;
};

}  // namespace etl
