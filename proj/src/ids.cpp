#include "tkg/ids.hpp"

#include <cstdio>


namespace tkg {

std::string Uuid::str() const {
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

std::optional<Uuid> Uuid::parse(std::string_view text) {
  if (text.size() != 36) return std::nullopt;
  Uuid out;
  int nibbles = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return std::nullopt;
      continue;
    }
    unsigned v;
    if (c >= '0' && c <= '9')
      v = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f')
      v = static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      v = static_cast<unsigned>(c - 'A' + 10);
    else
      return std::nullopt;
    if (nibbles < 16)
      out.hi = (out.hi << 4) | v;
    else
      out.lo = (out.lo << 4) | v;
    ++nibbles;
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Uuid stamp_v4(Uuid u) {
  u.hi = (u.hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
  u.lo = (u.lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
  return u;
}

}  // namespace

Uuid IdGenerator::next() noexcept {
  std::uint64_t state = seed_ ^ (++counter_ * 0xd1b54a32d192ed03ULL);
  Uuid u;
  u.hi = splitmix64(state);
  u.lo = splitmix64(state);
  return stamp_v4(u);
}

Uuid derive_uuid(const Uuid& base, std::string_view salt) noexcept {
  std::uint64_t state = base.hi ^ fnv1a64(salt);
  Uuid u;
  u.hi = splitmix64(state);
  state ^= base.lo;
  u.lo = splitmix64(state);
  return stamp_v4(u);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tkg
