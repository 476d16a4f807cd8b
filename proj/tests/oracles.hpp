#pragma once

#include <qdeco/qmat.hpp>
#include <qdeco/rng.hpp>
#include <qdeco/schedule.hpp>

#include <vector>

// Test-only reference implementations, independent of the library's
// computational paths.
namespace oracles {

using qdeco::ComplexMatrix;
using qdeco::complexd;

// exp(-i H t) by 64-term scaled-and-squared Taylor series.
inline ComplexMatrix expm_taylor(const ComplexMatrix& h, double t) {
  const int d = static_cast<int>(h.rows());
  ComplexMatrix a = complexd(0.0, -t) * h;
  int squarings = 0;
  double nrm = a.cwiseAbs().sum();
  while (nrm > 0.5 && squarings < 60) {
    a /= 2.0;
    nrm /= 2.0;
    ++squarings;
  }
  ComplexMatrix result = ComplexMatrix::Identity(d, d);
  ComplexMatrix term = ComplexMatrix::Identity(d, d);
  for (int k = 1; k < 64; ++k) {
    term = term * a / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

inline ComplexMatrix random_hermitian(int d, qdeco::Rng& rng, double scale = 1.0) {
  ComplexMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      a(i, j) = complexd(rng.normal(), rng.normal());
  return scale * 0.5 * (a + ComplexMatrix(a.adjoint()));
}

inline qdeco::ComplexVector random_state(int d, qdeco::Rng& rng) {
  qdeco::ComplexVector v(d);
  for (int i = 0; i < d; ++i) v[i] = complexd(rng.normal(), rng.normal());
  v.normalize();
  return v;
}

// Brute-force per-level phase extraction: compile the cycle unitary at a
// small fixed b with H_S = 0; the result must be diagonal with phases
// -b * w_m * dt, from which the pair coefficients follow.
inline std::vector<double> phase_weights_brute_force(
    const qdeco::PulseSchedule& s, const std::vector<double>& weights,
    double b = 1.0 / 128.0) {
  qdeco::QuditModel model;
  model.dim = s.dim;
  model.eps.assign(s.dim, 0.0);
  model.J = Eigen::MatrixXd::Zero(s.dim, s.dim);
  model.dephase_weights = weights;
  qdeco::PulseSchedule one = s;
  one.repeats = 1;
  ComplexMatrix u = qdeco::compile_unitary(one, model, b).m;
  std::vector<double> w(s.dim);
  for (int m = 0; m < s.dim; ++m)
    w[m] = -std::arg(u(m, m)) / (b * s.dt);
  return w;
}

}
