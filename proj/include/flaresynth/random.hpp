#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flaresynth {

// Mixes a root seed with stream coordinates (image index, flare index, ...)
// into an independent 64-bit seed. Order of the parts matters.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// Seeded generator whose draws are bit-identical on every platform: the
// distribution code is ours, only the mt19937_64 engine comes from <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi); returns lo exactly when lo == hi.
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flaresynth
