#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic random-number plumbing. Every stochastic quantity in the
// library is derived from a 64-bit master seed through the functions below,
// so results are reproducible bit-for-bit across runs, worker counts and
// compilers:
//   - stream mixing: SplitMix64 finalizer,
//   - uniform bits: std::mt19937_64 (algorithm fixed by the standard),
//   - normal deviates: Box-Muller on 53-bit uniforms (std::normal_distribution
//     is implementation-defined and deliberately avoided).
namespace qdeco {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-stream seed for a given master seed and stream index (e.g. trajectory
// number). Independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform in [0, 1) with 53-bit resolution
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; second deviate cached
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // map u1 into (0,1] so the log is finite
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}
