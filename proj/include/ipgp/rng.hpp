#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ipgp {

/// Seeded generator with its own uniform/normal transforms so that draws are
/// identical across standard library implementations.
///
/// Streams are addressed by (seed, name, index): every trajectory, trial or
/// probe gets an independent generator whose state depends only on that
/// triple, never on scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::uint64_t index = 0);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ipgp
