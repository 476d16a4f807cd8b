#include <catch2/catch_amalgamated.hpp>

#include <qdeco/noise.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

using namespace qdeco;
using Catch::Approx;

TEST_CASE("static Gaussian sampling moments") {
  StaticGaussian m{3.5216};
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    double b = sample_static(m, derive_seed(123, k));
    sum += b;
    sum2 += b * b;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 * m.sigma_b / 1e3);
  CHECK(var == Approx(m.sigma_b * m.sigma_b).epsilon(0.01));
}

TEST_CASE("static sampling is deterministic in the seed") {
  StaticGaussian m{1.0};
  CHECK(sample_static(m, 42) == sample_static(m, 42));
  CHECK(sample_static(m, 42) != sample_static(m, 43));
}

TEST_CASE("OU path determinism is bit-exact") {
  OrnsteinUhlenbeck m{2.0, 0.5};
  auto a = sample_ou_path(m, 0.0, 0.05, 64, 777);
  auto b = sample_ou_path(m, 0.0, 0.05, 64, 777);
  REQUIRE(a.values.size() == b.values.size());
  for (size_t k = 0; k < a.values.size(); ++k)
    CHECK(a.values[k] == b.values[k]);
}

TEST_CASE("OU stationarity and lag covariance") {
  OrnsteinUhlenbeck m{1.3, 2.0};
  const double dt = 0.25; // R dt = 0.5
  const int n_paths = 100000;
  const int n_samp = 9;
  std::vector<double> sum_sq(n_samp, 0.0);
  std::vector<double> sum_lag(n_samp, 0.0); // lag-k products against sample 0
  for (int p = 0; p < n_paths; ++p) {
    auto path = sample_ou_path(m, 0.0, dt, n_samp, derive_seed(9001, p));
    for (int k = 0; k < n_samp; ++k) {
      sum_sq[k] += path.values[k] * path.values[k];
      sum_lag[k] += path.values[0] * path.values[k];
    }
  }
  const double l2 = m.l * m.l;
  for (int k = 0; k < n_samp; ++k) {
    double var = sum_sq[k] / n_paths;
    CHECK(var == Approx(l2).epsilon(0.02));
    double expected = l2 * std::exp(-m.R * k * dt);
    if (m.R * k * dt <= 2.0)
      CHECK(sum_lag[k] / n_paths == Approx(expected).epsilon(0.02).margin(0.02 * l2));
  }
}

TEST_CASE("white-noise limit decorrelates adjacent samples") {
  OrnsteinUhlenbeck m{1.0, 2000.0};
  const double dt = 0.1; // R dt = 200
  const int n_paths = 50000;
  double c01 = 0.0, v0 = 0.0, v1 = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    auto path = sample_ou_path(m, 0.0, dt, 2, derive_seed(17, p));
    c01 += path.values[0] * path.values[1];
    v0 += path.values[0] * path.values[0];
    v1 += path.values[1] * path.values[1];
  }
  CHECK(v0 / n_paths == Approx(1.0).epsilon(0.03));
  CHECK(v1 / n_paths == Approx(1.0).epsilon(0.03));
  CHECK(std::abs(c01 / n_paths) < 0.02);
}

TEST_CASE("static limit freezes the path") {
  OrnsteinUhlenbeck m{1.0, 1e-9};
  auto path = sample_ou_path(m, 0.0, 0.01, 32, 5);
  for (double v : path.values)
    CHECK(v == Approx(path.values[0]).margin(1e-3));
}

TEST_CASE("spectral density values") {
  OrnsteinUhlenbeck m{1.7, 0.8};
  const double l2 = m.l * m.l;
  CHECK(spectral_density(m, 0.0) == Approx(2.0 * l2 / m.R));
  CHECK(spectral_density(m, m.R) == Approx(l2 / m.R));
}

TEST_CASE("spectral density integrates to the variance") {
  OrnsteinUhlenbeck m{1.7, 0.8};
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  // full-line integral of C(omega)/2pi equals C(t=0) = l^2
  auto f = [&](double w) { return spectral_density(m, w) / (2.0 * M_PI); };
  double integral = 2.0 * gk::integrate(f, 0.0, 4000.0 * m.R, 12, 1e-12);
  double tail = 2.0 * m.l * m.l / M_PI / 4000.0; // asymptotic 1/w^2 remainder
  CHECK(integral + tail == Approx(m.l * m.l).epsilon(1e-4));
}

TEST_CASE("Wiener-Khinchin consistency against the correlation function") {
  OrnsteinUhlenbeck m{1.0, 1.0};
  using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    auto f = [&](double w) {
      return spectral_density(m, w) * std::cos(w * t) / (2.0 * M_PI);
    };
    // integrate in oscillation-scale panels out to a large cutoff
    double cutoff = 20000.0;
    double panel = M_PI / std::max(t, 0.05);
    double acc = 0.0;
    for (double lo = 0.0; lo < cutoff; lo += panel)
      acc += gk::integrate(f, lo, std::min(lo + panel, cutoff), 4, 1e-14);
    double expected = 0.5 * m.correlation(t); // half-line integral
    CHECK(acc == Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS(sample_static(StaticGaussian{0.0}, 1), InvalidParam);
  CHECK_THROWS_AS(sample_ou_path(OrnsteinUhlenbeck{1.0, 0.0}, 0, 0.1, 4, 1),
                  InvalidParam);
  CHECK_THROWS_AS(sample_ou_path(OrnsteinUhlenbeck{1.0, 1.0}, 0, -0.1, 4, 1),
                  InvalidParam);
}
