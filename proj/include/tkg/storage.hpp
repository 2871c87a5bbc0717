#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tkg/graph.hpp"

namespace tkg {

/// Store file layout: the magic "TKG1", a u32 format version, then records.
/// Each record is a u32 payload length, the payload (first byte is the record
/// type) and a u32 CRC-32 of the payload. Integers are little-endian, floats
/// are stored as their IEEE-754 bit patterns. Records between two Commit
/// markers form one transaction; a trailing group without a Commit is ignored.
namespace storage {

inline constexpr char kMagic[4] = {'T', 'K', 'G', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class RecordType : std::uint8_t {
  Config = 1,
  Episode = 2,
  Entity = 3,
  Edge = 4,
  EpisodicEdge = 5,
  Community = 6,
  CommunityRemoved = 7,
  Meta = 8,
  Commit = 9,
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Serializes one committed transaction (or a full snapshot when `mutations`
/// is null) as a record group terminated by a Commit record.
std::vector<std::uint8_t> encode_commit(const GraphState& state, const std::vector<Mutation>* mutations,
                                        bool include_config);

std::vector<std::uint8_t> file_header();

}  // namespace storage

/// Append-only writer for a store file.
class Journal {
 public:
  explicit Journal(const std::filesystem::path& path);
  ~Journal();
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  void append(std::span<const std::uint8_t> bytes);

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

}  // namespace tkg

namespace tkg::storage {

/// Replays a store file. Throws Io, VersionMismatch or CorruptStore. A torn
/// tail (an incomplete record group left by a crash) is skipped; its offset is
/// reported through `valid_bytes` so writers can cut it off before appending.
std::shared_ptr<GraphState> read_store(const std::filesystem::path& path, std::uintmax_t* valid_bytes = nullptr);

}  // namespace tkg::storage
