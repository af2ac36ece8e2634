#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tracephase {

// Deterministic random source: mt19937_64 has a standard-mandated sequence,
// and the mappings below avoid the implementation-defined std distributions.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // 0..n-1
    return int(gen_() % std::uint64_t(n));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return m * std::cos(2.0 * M_PI * u2);
  }

  // Uniform in the closed unit ball of dimension d.
  std::vector<double> ball(int d) {
    std::vector<double> v(d);
    double n2 = 0.0;
    for (double& x : v) {
      x = normal();
      n2 += x * x;
    }
    double r = std::pow(uniform(), 1.0 / d);
    double scale = n2 > 0 ? r / std::sqrt(n2) : 0.0;
    for (double& x : v) x *= scale;
    return v;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable substream derivation for shard s of a top-level seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step on a mix of the two
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tracephase
