#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hgconv {

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a root seed, a purpose tag and up to
/// three indices (layer, epoch, site, ...). Pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

/// Portable generator: mt19937_64 raw output with hand-written conversions, so
/// streams are identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hgconv
