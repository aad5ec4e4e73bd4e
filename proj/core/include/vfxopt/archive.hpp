#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfxopt {

struct ArchiveEntry {
  std::string name;
  std::string data;

  friend bool operator==(const ArchiveEntry &, const ArchiveEntry &) = default;
};

/// Writes a zip archive with stored (uncompressed) members and fixed
/// timestamps, so equal inputs produce equal bytes.
std::string write_zip(std::span<const ArchiveEntry> entries);

/// Reads stored or deflated members. No zip64, no encryption.
std::vector<ArchiveEntry> read_zip(std::string_view bytes);

} // namespace vfxopt
