#pragma once

#include <cmath>
#include <cstdint>

namespace afem {

// Deterministic, platform-independent generator (splitmix64 + Box-Muller).
// std::normal_distribution is implementation-defined, which would make seeded
// diagnostics differ between standard libraries; sampled quantities end up in
// reports that are compared byte-for-byte, so we roll the few lines ourselves.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0,1]; never returns 0 so it is safe under log().
  double next_uniform_pos() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Uniform in [0,1).
  double next_uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform_pos();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace afem
