#pragma once

#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "qdeco/errors.hpp"
#include "qdeco/rng.hpp"

// Classical dephasing-noise models and realization generators.
namespace qdeco {

// Static Gaussian field: b ~ Normal(0, sigma_b^2), constant per trajectory.
struct StaticGaussian {
  double sigma_b = 0.0; // rad/us

  void validate() const {
    if (!(sigma_b > 0.0)) throw InvalidParam("StaticGaussian: sigma_b must be > 0");
  }
};

// Ornstein-Uhlenbeck process with correlation <b(0)b(t)> = l^2 exp(-R|t|).
struct OrnsteinUhlenbeck {
  double l = 0.0; // coupling strength, rad/us
  double R = 0.0; // relaxation rate, 1/us (R = 1/tau_c)

  void validate() const {
    if (!(l > 0.0)) throw InvalidParam("OrnsteinUhlenbeck: l must be > 0");
    if (!(R > 0.0)) throw InvalidParam("OrnsteinUhlenbeck: R must be > 0");
  }

  // one-sided Lorentzian spectral density C(omega) = l^2 2R/(R^2 + omega^2)
  double spectral_density(double omega) const {
    return l * l * 2.0 * R / (R * R + omega * omega);
  }

  double correlation(double t) const {
    return l * l * std::exp(-R * std::abs(t));
  }
};

struct NoNoise {};

using NoiseModel = std::variant<NoNoise, StaticGaussian, OrnsteinUhlenbeck>;

inline double spectral_density(const OrnsteinUhlenbeck& m, double omega) {
  return m.spectral_density(omega);
}

struct NoisePath {
  std::vector<double> times;  // us, strictly increasing
  std::vector<double> values; // rad/us
  std::uint64_t seed = 0;
};

inline double sample_static(const StaticGaussian& m, std::uint64_t seed) {
  m.validate();
  Rng rng(seed);
  return m.sigma_b * rng.normal();
}

// Stateful OU stepper: exact stationary discretization
//   b_0 ~ Normal(0, l^2)
//   b_{k+1} = b_k e^{-R d} + l sqrt(1 - e^{-2 R d}) xi_k
// The update is exact for any step d, so noise-model error never mixes with
// Trotter error.
class OuStepper {
public:
  OuStepper(const OrnsteinUhlenbeck& m, Rng& rng) : m_(m), rng_(rng) {
    m.validate();
    b_ = m.l * rng.normal();
  }

  double value() const { return b_; }

  double advance(double dt) {
    if (dt < 0.0) throw InvalidParam("OuStepper: negative step");
    if (dt > 0.0) {
      double a = std::exp(-m_.R * dt);
      b_ = b_ * a + m_.l * std::sqrt(1.0 - a * a) * rng_.normal();
    }
    return b_;
  }

private:
  OrnsteinUhlenbeck m_;
  Rng& rng_;
  double b_;
};

inline NoisePath sample_ou_path(const OrnsteinUhlenbeck& m, double t0,
                                double dt, int n_samples, std::uint64_t seed) {
  m.validate();
  if (!(dt > 0.0)) throw InvalidParam("sample_ou_path: step must be > 0");
  if (n_samples < 1) throw InvalidParam("sample_ou_path: need >= 1 sample");
  NoisePath path;
  path.seed = seed;
  path.times.reserve(n_samples);
  path.values.reserve(n_samples);
  Rng rng(seed);
  OuStepper stepper(m, rng);
  path.times.push_back(t0);
  path.values.push_back(stepper.value());
  for (int k = 1; k < n_samples; ++k) {
    path.times.push_back(t0 + k * dt);
    path.values.push_back(stepper.advance(dt));
  }
  return path;
}

}
