#pragma once

#include <string>
#include <string_view>

#include "voterbias/events.hpp"

namespace voterbias::cache {

inline constexpr std::uint32_t kStoreFormatVersion = 1;

/// Canonical columnar encoding of a store:
///
///   "VBSTORE\0" | u32 version | site name | posts | votes | badges | comments | u64 checksum
///
/// Every integer is little-endian; each section is a row count followed by
/// one contiguous column per field. Optional fields carry a u8 presence
/// column. The checksum is FNV-1a 64 over all preceding bytes.
std::string serialize_store(const EventStore& store);

/// Throws DataError on a bad magic, unsupported version, truncation or
/// checksum mismatch.
EventStore deserialize_store(std::string_view bytes);

void write_store_file(const std::string& path, const EventStore& store);
EventStore read_store_file(const std::string& path);

/// Writes to `path + ".tmp"` and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace voterbias::cache
