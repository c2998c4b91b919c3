#pragma once

#include <zlib.h>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace testsupport {

// ---------------------------------------------------------------------------
// Deterministic ZIP writer (fixtures only). Fixed DOS timestamps and a
// fixed deflate level keep the archive bytes identical run to run.
// ---------------------------------------------------------------------------

struct ZipMember {
  std::string name;
  std::string content;
};

namespace zipdetail {

inline void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::string raw_deflate(const std::string& data) {
  z_stream zs{};
  deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY);
  std::string out;
  out.resize(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

}  // namespace zipdetail

inline std::string make_zip(const std::vector<ZipMember>& members) {
  // fixed DOS date: 2013-01-01, midnight
  const std::uint16_t dos_time = 0;
  const std::uint16_t dos_date = static_cast<std::uint16_t>(((2013 - 1980) << 9) | (1 << 5) | 1);

  std::string out;
  std::string central;
  for (const auto& member : members) {
    std::uint32_t crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(member.content.data()),
                  static_cast<uInt>(member.content.size()));
    std::string packed = zipdetail::raw_deflate(member.content);
    std::uint16_t method = 8;
    if (packed.size() >= member.content.size()) {  // stored wins for tiny payloads
      packed = member.content;
      method = 0;
    }
    std::uint32_t offset = static_cast<std::uint32_t>(out.size());

    zipdetail::put32(out, 0x04034b50);
    zipdetail::put16(out, 20);      // version needed
    zipdetail::put16(out, 0);       // flags
    zipdetail::put16(out, method);
    zipdetail::put16(out, dos_time);
    zipdetail::put16(out, dos_date);
    zipdetail::put32(out, crc);
    zipdetail::put32(out, static_cast<std::uint32_t>(packed.size()));
    zipdetail::put32(out, static_cast<std::uint32_t>(member.content.size()));
    zipdetail::put16(out, static_cast<std::uint16_t>(member.name.size()));
    zipdetail::put16(out, 0);  // extra len
    out += member.name;
    out += packed;

    zipdetail::put32(central, 0x02014b50);
    zipdetail::put16(central, 20);  // version made by
    zipdetail::put16(central, 20);  // version needed
    zipdetail::put16(central, 0);
    zipdetail::put16(central, method);
    zipdetail::put16(central, dos_time);
    zipdetail::put16(central, dos_date);
    zipdetail::put32(central, crc);
    zipdetail::put32(central, static_cast<std::uint32_t>(packed.size()));
    zipdetail::put32(central, static_cast<std::uint32_t>(member.content.size()));
    zipdetail::put16(central, static_cast<std::uint16_t>(member.name.size()));
    zipdetail::put16(central, 0);  // extra
    zipdetail::put16(central, 0);  // comment
    zipdetail::put16(central, 0);  // disk
    zipdetail::put16(central, 0);  // internal attrs
    zipdetail::put32(central, 0);  // external attrs
    zipdetail::put32(central, offset);
    central += member.name;
  }

  std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  zipdetail::put32(out, 0x06054b50);
  zipdetail::put16(out, 0);
  zipdetail::put16(out, 0);
  zipdetail::put16(out, static_cast<std::uint16_t>(members.size()));
  zipdetail::put16(out, static_cast<std::uint16_t>(members.size()));
  zipdetail::put32(out, static_cast<std::uint32_t>(central.size()));
  zipdetail::put32(out, cd_offset);
  zipdetail::put16(out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Fixture corpus
// ---------------------------------------------------------------------------

/// Deterministic monthly trips CSV; row count varies with the month so
/// tables are distinguishable.
inline std::string monthly_trips_csv(int year, int month) {
  char buf[96];
  std::string out = "ride_id,start_station_id,duration_min\n";
  int rows = 8 + month;
  for (int i = 0; i < rows; ++i) {
    int station = 100 + ((year + month * 7 + i * 13) % 40);
    int duration = 3 + ((i * 17 + month) % 55);
    std::snprintf(buf, sizeof buf, "%04d%02d%04d,%d,%d\n", year, month, i, station, duration);
    out += buf;
  }
  return out;
}

inline std::string monthly_zip_name(int year, int month) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02d-trips", year, month);
  return std::string(buf) + ".zip";
}

inline std::string houston_chronicle_csv() {
  return
      "district,enrollment,attendance_rate,charter\n"
      "Aldine,67122,95.1,false\n"
      "Alief,45928,94.8,false\n"
      "Cypress-Fairbanks,115288,95.9,false\n"
      "Houston,215408,94.2,false\n"
      "KIPP Houston,13247,96.4,true\n"
      "Spring Branch,35298,95.3,false\n";
}

// ---------------------------------------------------------------------------
// Fixture HTTP server
// ---------------------------------------------------------------------------

/// Serves the monthly zip corpus (2013-01 .. 2014-12), a plain CSV, and
/// a route that aborts mid-body. Counts every request it sees.
class FixtureServer {
 public:
  FixtureServer() {
    server_.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response&) {
      std::lock_guard<std::mutex> lock(mutex_);
      ++total_requests_;
      ++per_path_[req.path];
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server_.Get(R"(/trips/(\d{4})(\d{2})-trips\.zip)",
                [](const httplib::Request& req, httplib::Response& res) {
                  int year = std::stoi(req.matches[1]);
                  int month = std::stoi(req.matches[2]);
                  if (year < 2013 || year > 2014) {
                    res.status = 404;
                    return;
                  }
                  std::string member_name = monthly_zip_name(year, month);
                  member_name.replace(member_name.size() - 4, 4, ".csv");
                  res.set_content(make_zip({{member_name, monthly_trips_csv(year, month)}}),
                                  "application/zip");
                });

    server_.Get(R"(/csv/(\d{4})(\d{2})-data\.csv)",
                [](const httplib::Request& req, httplib::Response& res) {
                  int year = std::stoi(req.matches[1]);
                  int month = std::stoi(req.matches[2]);
                  res.set_content(monthly_trips_csv(year, month), "text/csv");
                });

    server_.Get("/HoustonChronicle.csv", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(houston_chronicle_csv(), "text/csv");
    });

    // announces a megabyte, sends 100 bytes, then drops the connection
    server_.Get("/broken/truncated.bin", [](const httplib::Request&, httplib::Response& res) {
      res.set_content_provider(
          1 << 20, "application/octet-stream",
          [](std::size_t offset, std::size_t, httplib::DataSink& sink) {
            if (offset > 0) return false;
            std::string chunk(100, 'x');
            sink.write(chunk.data(), chunk.size());
            return false;
          });
    });

    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FixtureServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::string trips_template() const {
    return base_url() + "/trips/{year}{month:02}-trips.zip";
  }

  int total_requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return total_requests_;
  }

  int requests_for(const std::string& path) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = per_path_.find(path);
    return it == per_path_.end() ? 0 : it->second;
  }

  void reset_counters() {
    std::lock_guard<std::mutex> lock(mutex_);
    total_requests_ = 0;
    per_path_.clear();
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  int total_requests_ = 0;
  std::map<std::string, int> per_path_;
};

}  // namespace testsupport
