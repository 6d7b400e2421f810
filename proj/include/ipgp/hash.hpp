#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ipgp {

/// Incremental FNV-1a (64 bit). Used for content fingerprints, not security.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  void update(double value);
  void update(std::uint64_t value);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a_hex(std::string_view text);

}  // namespace ipgp
