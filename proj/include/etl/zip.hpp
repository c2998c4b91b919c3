#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "etl/error.hpp"

namespace etl {

namespace fs = std::filesystem;

/// One member of a ZIP archive, as recorded in the central directory.
struct ZipEntry {
  std::string name;
  std::uint16_t method = 0;  // 0 = stored, 8 = deflate
  std::uint32_t crc32 = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::uint64_t local_header_offset = 0;

  bool is_directory() const { return !name.empty() && name.back() == '/'; }
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0] | (p[1] << 8) | (p[2] << 16) |
                                    (static_cast<std::uint32_t>(p[3]) << 24));
}

}  // namespace detail

/// Reads the central directory. Supports stored and deflated members;
/// no ZIP64, no encryption.
inline std::vector<ZipEntry> list_zip(const fs::path& archive) {
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + archive.string());
  in.seekg(0, std::ios::end);
  std::int64_t file_size = in.tellg();
  if (file_size < 22) throw Error(ErrorCode::BadArchive, archive.string() + ": too small for a zip");

  // End-of-central-directory record: scan the tail for its signature.
  std::int64_t tail_len = std::min<std::int64_t>(file_size, 22 + 65535);
  std::vector<unsigned char> tail(static_cast<std::size_t>(tail_len));
  in.seekg(file_size - tail_len);
  in.read(reinterpret_cast<char*>(tail.data()), tail_len);
  std::int64_t eocd = -1;
  for (std::int64_t i = tail_len - 22; i >= 0; --i) {
    if (tail[i] == 0x50 && tail[i + 1] == 0x4b && tail[i + 2] == 0x05 && tail[i + 3] == 0x06) {
      eocd = i;
      break;
    }
  }
  if (eocd < 0) throw Error(ErrorCode::BadArchive, archive.string() + ": no end-of-central-directory");
  const unsigned char* e = tail.data() + eocd;
  std::uint16_t entry_count = detail::le16(e + 10);
  std::uint32_t cd_size = detail::le32(e + 12);
  std::uint32_t cd_offset = detail::le32(e + 16);

  std::vector<unsigned char> cd(cd_size);
  in.seekg(cd_offset);
  in.read(reinterpret_cast<char*>(cd.data()), cd_size);
  if (!in) throw Error(ErrorCode::BadArchive, archive.string() + ": truncated central directory");

  std::vector<ZipEntry> entries;
  std::size_t pos = 0;
  for (std::uint16_t n = 0; n < entry_count; ++n) {
    if (pos + 46 > cd.size() || detail::le32(cd.data() + pos) != 0x02014b50)
      throw Error(ErrorCode::BadArchive, archive.string() + ": bad central directory entry");
    const unsigned char* h = cd.data() + pos;
    ZipEntry entry;
    entry.method = detail::le16(h + 10);
    entry.crc32 = detail::le32(h + 16);
    entry.compressed_size = detail::le32(h + 20);
    entry.uncompressed_size = detail::le32(h + 24);
    std::uint16_t name_len = detail::le16(h + 28);
    std::uint16_t extra_len = detail::le16(h + 30);
    std::uint16_t comment_len = detail::le16(h + 32);
    entry.local_header_offset = detail::le32(h + 42);
    if (pos + 46 + name_len > cd.size())
      throw Error(ErrorCode::BadArchive, archive.string() + ": truncated entry name");
    entry.name.assign(reinterpret_cast<const char*>(h + 46), name_len);
    entries.push_back(std::move(entry));
    pos += 46u + name_len + extra_len + comment_len;
  }
  return entries;
}

/// Extracts one member to `dest`, verifying its CRC.
inline void extract_zip_entry(const fs::path& archive, const ZipEntry& entry, const fs::path& dest) {
  if (entry.method != 0 && entry.method != 8)
    throw Error(ErrorCode::BadArchive,
                entry.name + ": unsupported compression method " + std::to_string(entry.method));
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + archive.string());
  in.seekg(static_cast<std::streamoff>(entry.local_header_offset));
  unsigned char lh[30];
  in.read(reinterpret_cast<char*>(lh), 30);
  if (!in || detail::le32(lh) != 0x04034b50)
    throw Error(ErrorCode::BadArchive, archive.string() + ": bad local header for " + entry.name);
  std::uint16_t name_len = detail::le16(lh + 26);
  std::uint16_t extra_len = detail::le16(lh + 28);
  in.seekg(static_cast<std::streamoff>(entry.local_header_offset) + 30 + name_len + extra_len);

  std::vector<unsigned char> compressed(static_cast<std::size_t>(entry.compressed_size));
  in.read(reinterpret_cast<char*>(compressed.data()),
          static_cast<std::streamsize>(compressed.size()));
  if (!in) throw Error(ErrorCode::BadArchive, archive.string() + ": truncated member " + entry.name);

  std::vector<unsigned char> output;
  if (entry.method == 0) {
    output = std::move(compressed);
  } else {
    output.resize(static_cast<std::size_t>(entry.uncompressed_size));
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw Error(ErrorCode::BadArchive, "inflateInit failed");
    zs.next_in = compressed.data();
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = output.data();
    zs.avail_out = static_cast<uInt>(output.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != entry.uncompressed_size)
      throw Error(ErrorCode::BadArchive, entry.name + ": corrupt deflate stream");
  }

  std::uint32_t crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, output.data(), static_cast<uInt>(output.size()));
  if (crc != entry.crc32)
    throw Error(ErrorCode::BadArchive, entry.name + ": CRC mismatch");

  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + dest.string());
  out.write(reinterpret_cast<const char*>(output.data()),
            static_cast<std::streamsize>(output.size()));
}

/// Extracts every `*.csv` member into `dest_dir`, flattened to its
/// basename. Returns the files written.
inline std::vector<fs::path> extract_csv_members(const fs::path& archive, const fs::path& dest_dir) {
  std::vector<fs::path> written;
  for (const auto& entry : list_zip(archive)) {
    if (entry.is_directory()) continue;
    std::string lower = entry.name;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (lower.size() < 4 || lower.compare(lower.size() - 4, 4, ".csv") != 0) continue;
    fs::path dest = dest_dir / fs::path(entry.name).filename();
    extract_zip_entry(archive, entry, dest);
    written.push_back(dest);
  }
  return written;
}

}  // namespace etl
