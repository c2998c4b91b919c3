#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "etl/context.hpp"
#include "etl/dates.hpp"
#include "etl/error.hpp"
#include "etl/manifest.hpp"
#include "etl/sha256.hpp"

namespace etl {

struct DownloadReport {
  std::vector<FileRecord> fetched;
  std::vector<std::string> skipped;                        // paths relative to dir
  std::vector<std::pair<std::string, std::string>> failed;  // url, reason

  bool any_failed() const { return !failed.empty(); }
  bool all_failed() const { return !failed.empty() && fetched.empty() && skipped.empty(); }
};

struct UploadReport {
  std::vector<fs::path> copied;
  std::vector<fs::path> skipped;
};

namespace detail {

struct ParsedUrl {
  std::string scheme;
  std::string origin;  // scheme://host[:port]
  std::string target;  // path + query
};

inline ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::Fetch, "unsupported URL '" + url + "'");
  ParsedUrl out;
  out.scheme = url.substr(0, scheme_end);
  std::size_t host_begin = scheme_end + 3;
  std::size_t path_begin = url.find('/', host_begin);
  if (path_begin == std::string::npos) {
    out.origin = url;
    out.target = "/";
  } else {
    out.origin = url.substr(0, path_begin);
    out.target = url.substr(path_begin);
  }
  return out;
}

inline std::string url_basename(const std::string& url) {
  std::string path = url;
  auto query = path.find_first_of("?#");
  if (query != std::string::npos) path.resize(query);
  auto slash = path.find_last_of('/');
  std::string base = (slash == std::string::npos) ? path : path.substr(slash + 1);
  if (base.empty()) throw Error(ErrorCode::Fetch, "cannot derive a filename from '" + url + "'");
  return base;
}

/// Streams the URL body into `dest`. http(s) via the bundled client;
/// file:// by plain copy (tests and local corpora).
inline void fetch_url_to_file(const std::string& url, const fs::path& dest,
                              std::chrono::seconds timeout) {
  ParsedUrl parsed = parse_url(url);
  if (parsed.scheme == "file") {
    fs::path src(parsed.target);
    if (!fs::exists(src)) throw Error(ErrorCode::Fetch, url + ": no such file");
    fs::copy_file(src, dest, fs::copy_options::overwrite_existing);
    return;
  }
  if (parsed.scheme != "http" && parsed.scheme != "https")
    throw Error(ErrorCode::Fetch, "unsupported URL scheme '" + parsed.scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (parsed.scheme == "https")
    throw Error(ErrorCode::Fetch, "this build has no TLS support for '" + url + "'");
#endif

  httplib::Client client(parsed.origin);
  client.set_connection_timeout(timeout.count(), 0);
  client.set_read_timeout(timeout.count(), 0);
  client.set_follow_location(true);

  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + dest.string());
  bool write_failed = false;
  auto result = client.Get(parsed.target, [&](const char* data, std::size_t len) {
    out.write(data, static_cast<std::streamsize>(len));
    write_failed = !out.good();
    return !write_failed;
  });
  out.close();
  if (write_failed) throw Error(ErrorCode::Io, "short write to " + dest.string());
  if (!result)
    throw Error(ErrorCode::Fetch, url + ": " + httplib::to_string(result.error()));
  if (result->status != 200)
    throw Error(ErrorCode::Fetch, url + ": HTTP " + std::to_string(result->status));
}

}  // namespace detail

/// Fetches only the files whose final name is not already present in
/// `raw/` with nonzero size. Fetches go to a temporary name first and
/// are renamed into place after the checksum is taken, so an interrupted
/// transfer never leaves a partial file under its final name. Every
/// fetched file is appended to the manifest.
inline DownloadReport smart_download(EtlContext& ctx, const std::vector<std::string>& urls,
                                     const std::optional<std::vector<std::string>>& new_filenames =
                                         std::nullopt) {
  if (new_filenames && new_filenames->size() != urls.size())
    throw Error(ErrorCode::Fetch, "new_filenames must match urls one to one");

  DownloadReport report;
  std::mutex report_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < urls.size(); i = next.fetch_add(1)) {
      const std::string& url = urls[i];
      std::string name;
      try {
        name = new_filenames ? (*new_filenames)[i] : detail::url_basename(url);
        fs::path target = ctx.raw_dir / name;
        std::string rel = (fs::path("raw") / name).generic_string();
        if (fs::exists(target) && fs::file_size(target) > 0) {
          std::lock_guard<std::mutex> lock(report_mutex);
          report.skipped.push_back(rel);
          continue;
        }
        fs::path tmp = ctx.raw_dir /
                       (name + ".part-" + std::to_string(::getpid()) + "-" + std::to_string(i));
        try {
          detail::fetch_url_to_file(url, tmp, ctx.fetch.timeout);
          FileRecord rec;
          rec.url = url;
          rec.path = rel;
          rec.bytes = fs::file_size(tmp);
          rec.sha256 = sha256_hex_of_file(tmp);
          rec.fetched_at = rfc3339_utc_now();
          fs::rename(tmp, target);
          ctx.manifest.append(rec);
          std::lock_guard<std::mutex> lock(report_mutex);
          report.fetched.push_back(std::move(rec));
        } catch (...) {
          std::error_code ec;
          fs::remove(tmp, ec);
          throw;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(report_mutex);
        report.failed.emplace_back(url, e.what());
      }
    }
  };

  int jobs = std::max(1, ctx.fetch.jobs);
  if (jobs == 1 || urls.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

/// Copies load-dir files into a target directory, skipping names the
/// target already has. An optional pattern narrows which basenames go.
inline UploadReport smart_upload(EtlContext& ctx, const fs::path& target_dir,
                                 const std::optional<std::string>& pattern = std::nullopt) {
  std::optional<std::regex> re;
  if (pattern) re = compile_pattern(*pattern);
  fs::create_directories(target_dir);
  UploadReport report;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ctx.load_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::string base = file.filename().string();
    if (re && !std::regex_search(base, *re)) continue;
    fs::path dest = target_dir / base;
    if (fs::exists(dest)) {
      report.skipped.push_back(dest);
      continue;
    }
    fs::copy_file(file, dest);
    report.copied.push_back(dest);
  }
  return report;
}

/// Upload target given as a connection profile: embedded-file engines
/// resolve to the directory holding the database file.
inline UploadReport smart_upload(EtlContext& ctx, const ConnectionProfile& target,
                                 const std::optional<std::string>& pattern = std::nullopt) {
  if (target.engine != ConnectionProfile::Engine::EmbeddedFile)
    throw Error(ErrorCode::Fetch, "server upload targets need a server driver this build lacks");
  return smart_upload(ctx, target.path.parent_path(), pattern);
}

enum class VerifyStatus { Ok, Missing, Modified };

inline const char* verify_status_name(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Ok:       return "ok";
    case VerifyStatus::Missing:  return "missing";
    case VerifyStatus::Modified: return "modified";
  }
  return "ok";
}

struct VerifyEntry {
  std::string path;  // relative to dir
  VerifyStatus status = VerifyStatus::Ok;
};

/// Re-checksums every live manifest record against the cache.
inline std::vector<VerifyEntry> verify_manifest(EtlContext& ctx) {
  auto live = Manifest::latest(Manifest::load(ctx.manifest_file()));
  std::vector<VerifyEntry> out;
  for (const auto& [rel, rec] : live) {
    VerifyEntry entry;
    entry.path = rel;
    fs::path full = ctx.dir / fs::path(rel);
    if (!fs::exists(full)) entry.status = VerifyStatus::Missing;
    else if (sha256_hex_of_file(full) != rec.sha256) entry.status = VerifyStatus::Modified;
    else entry.status = VerifyStatus::Ok;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace etl
