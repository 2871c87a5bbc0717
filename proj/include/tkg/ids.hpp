#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tkg {

/// 128-bit identifier rendered in the usual 8-4-4-4-12 hex layout.
struct Uuid {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const Uuid&) const = default;
  bool is_nil() const noexcept { return hi == 0 && lo == 0; }
  std::string str() const;
  static std::optional<Uuid> parse(std::string_view text);
};

template <class Tag>
struct StrongId {
  Uuid value;

  auto operator<=>(const StrongId&) const = default;
  bool is_nil() const noexcept { return value.is_nil(); }
  std::string str() const { return value.str(); }
  static std::optional<StrongId> parse(std::string_view text) {
    if (auto u = Uuid::parse(text)) return StrongId{*u};
    return std::nullopt;
  }
};

using NodeId = StrongId<struct NodeTag>;
using EdgeId = StrongId<struct EdgeTag>;
using EpisodeId = StrongId<struct EpisodeTag>;
using CommunityId = StrongId<struct CommunityTag>;
using FactGroupId = StrongId<struct FactGroupTag>;

struct UuidHash {
  std::size_t operator()(const Uuid& u) const noexcept {
    return static_cast<std::size_t>(u.hi ^ (u.lo * 0x9e3779b97f4a7c15ULL));
  }
  template <class Tag>
  std::size_t operator()(const StrongId<Tag>& id) const noexcept {
    return (*this)(id.value);
  }
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Deterministic id source: the same (seed, counter) sequence always yields
/// the same ids, which keeps replays of one transcript isomorphic.
class IdGenerator {
 public:
  IdGenerator() = default;
  explicit IdGenerator(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  Uuid next() noexcept;
  template <class Id>
  Id next_as() noexcept {
    return Id{next()};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

/// Stable id derived from another id and a salt (used for community ids that
/// must be reproducible from a detection run).
Uuid derive_uuid(const Uuid& base, std::string_view salt) noexcept;

std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace tkg

template <class Tag>
struct std::hash<tkg::StrongId<Tag>> {
  std::size_t operator()(const tkg::StrongId<Tag>& id) const noexcept { return tkg::UuidHash{}(id); }
};
