#include "ipgp/hash.hpp"

#include <bit>
#include <cstdio>

namespace ipgp {

namespace {
constexpr std::uint64_t kPrime = 0x100000001b3ULL;
}

void Fnv1a::update(std::span<const std::byte> bytes) {
  for (std::byte b : bytes) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= kPrime;
  }
}

void Fnv1a::update(std::string_view text) {
  update(std::as_bytes(std::span(text.data(), text.size())));
}

void Fnv1a::update(double value) { update(std::bit_cast<std::uint64_t>(value)); }

void Fnv1a::update(std::uint64_t value) {
  // little-endian byte order regardless of host
  for (int i = 0; i < 8; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffU;
    state_ *= kPrime;
  }
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(state_));
  return buf;
}

std::string fnv1a_hex(std::string_view text) {
  Fnv1a h;
  h.update(text);
  return h.hex();
}

}  // namespace ipgp
