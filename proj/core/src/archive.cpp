#include "vfxopt/archive.hpp"

#include "vfxopt/error.hpp"

#include <zlib.h>

#include <cstdint>
#include <limits>

namespace vfxopt {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;
constexpr std::uint16_t kDosDate = 0x21; // 1980-01-01
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;

[[noreturn]] void corrupt(const std::string &what) {
  throw Error(ErrorCategory::format, "zip: " + what);
}

void put16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint32_t get(std::string_view in, std::size_t offset, int width) {
  if (offset + static_cast<std::size_t>(width) > in.size()) {
    corrupt("record runs past end of archive");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef *>(data.data()),
            static_cast<uInt>(data.size())));
}

std::string inflate_raw(std::string_view in, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    corrupt("inflate init failed");
  }
  zs.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef *>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) {
    corrupt("deflated member is damaged");
  }
  return out;
}

} // namespace

std::string write_zip(std::span<const ArchiveEntry> entries) {
  std::string out;
  std::string central;
  for (const auto &e : entries) {
    if (e.data.size() > std::numeric_limits<std::uint32_t>::max() ||
        e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCategory::validation, "zip member too large: " + e.name);
    }
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto crc = crc_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto name_len = static_cast<std::uint16_t>(e.name.size());

    put32(out, kLocalSig);
    put16(out, kVersion);
    put16(out, 0);
    put16(out, kStored);
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, kCentralSig);
    put16(central, kVersion);
    put16(central, kVersion);
    put16(central, 0);
    put16(central, kStored);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put32(central, 0);
    put32(central, offset);
    central += e.name;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

std::vector<ArchiveEntry> read_zip(std::string_view bytes) {
  if (bytes.size() < 22) {
    corrupt("archive too short");
  }
  std::size_t end = std::string_view::npos;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > 0;) {
    if (get(bytes, i, 4) == kEndSig) {
      end = i;
      break;
    }
  }
  if (end == std::string_view::npos) {
    corrupt("end-of-central-directory record not found");
  }
  const auto count = get(bytes, end + 10, 2);
  std::size_t cursor = get(bytes, end + 16, 4);

  std::vector<ArchiveEntry> entries;
  entries.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    if (get(bytes, cursor, 4) != kCentralSig) {
      corrupt("bad central directory signature");
    }
    const auto method = get(bytes, cursor + 10, 2);
    const auto crc = get(bytes, cursor + 16, 4);
    const auto csize = get(bytes, cursor + 20, 4);
    const auto usize = get(bytes, cursor + 24, 4);
    const auto name_len = get(bytes, cursor + 28, 2);
    const auto extra_len = get(bytes, cursor + 30, 2);
    const auto comment_len = get(bytes, cursor + 32, 2);
    const auto local = get(bytes, cursor + 42, 4);
    if (cursor + 46 + name_len > bytes.size()) {
      corrupt("central directory truncated");
    }
    ArchiveEntry entry;
    entry.name = std::string(bytes.substr(cursor + 46, name_len));
    cursor += 46 + name_len + extra_len + comment_len;

    if (get(bytes, local, 4) != kLocalSig) {
      corrupt("bad local header for " + entry.name);
    }
    const std::size_t data_at =
        local + 30 + get(bytes, local + 26, 2) + get(bytes, local + 28, 2);
    if (data_at + csize > bytes.size()) {
      corrupt("member data truncated: " + entry.name);
    }
    const auto raw = bytes.substr(data_at, csize);
    if (method == kStored) {
      entry.data = std::string(raw);
    } else if (method == kDeflated) {
      entry.data = inflate_raw(raw, usize);
    } else {
      corrupt("unsupported compression method for " + entry.name);
    }
    if (crc_of(entry.data) != crc) {
      corrupt("CRC mismatch for " + entry.name);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

} // namespace vfxopt
