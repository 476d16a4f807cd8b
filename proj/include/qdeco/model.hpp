#pragma once

#include <cmath>
#include <vector>

#include "qdeco/qmat.hpp"

// NV-center model construction.
//
// Unit convention, used everywhere in the library:
//   time               microseconds (us)
//   angular frequency  rad/us
//   magnetic field     Gauss
//   gyromagnetic ratio rad/(us*Gauss), default 2*pi*2.8025 (electron, g ~ 2)
// Laboratory-unit inputs (GHz, MHz, Gauss) are converted exactly once, at
// config load.
//
// Basis ordering is fixed as (m = +1, m = 0, m = -1) throughout.
namespace qdeco {

inline constexpr double two_pi = 6.283185307179586476925286766559;

inline double ghz_to_rad_per_us(double f) { return two_pi * 1e3 * f; }
inline double mhz_to_rad_per_us(double f) { return two_pi * f; }

// default electron gyromagnetic ratio, rad/(us*Gauss)
inline constexpr double gamma_e = two_pi * 2.8025;

struct NVParams {
  double D = ghz_to_rad_per_us(2.87); // zero-field splitting, rad/us
  double Bz = 0.0;                    // static field, Gauss
  double gamma = gamma_e;             // rad/(us*Gauss)
  double B1 = 0.0;                    // drive amplitudes, Gauss
  double B2 = 0.0;
  double omega1 = 0.0;                // drive angular frequencies, rad/us
  double omega2 = 0.0;

  void validate() const {
    if (!(D > 0.0)) throw InvalidParam("NVParams: D must be > 0");
    if (!(gamma > 0.0)) throw InvalidParam("NVParams: gamma must be > 0");
    if (Bz < 0.0 || B1 < 0.0 || B2 < 0.0)
      throw InvalidParam("NVParams: fields must be >= 0");
  }
};

// spin-1 operators in the (+1, 0, -1) basis
inline ComplexMatrix spin1_sz() {
  ComplexMatrix s = ComplexMatrix::Zero(3, 3);
  s(0, 0) = 1.0;
  s(2, 2) = -1.0;
  return s;
}

inline ComplexMatrix spin1_sx() {
  const double r = 1.0 / std::sqrt(2.0);
  ComplexMatrix s = ComplexMatrix::Zero(3, 3);
  s(0, 1) = s(1, 0) = s(1, 2) = s(2, 1) = r;
  return s;
}

// H_NV = D Sz^2 + gamma Bz Sz = diag(D + gamma Bz, 0, D - gamma Bz)
inline ComplexMatrix nv_hamiltonian(const NVParams& p) {
  p.validate();
  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  h(0, 0) = p.D + p.gamma * p.Bz;
  h(2, 2) = p.D - p.gamma * p.Bz;
  return h;
}

// Lab-frame Hamiltonian with both microwave drives at time t.
inline ComplexMatrix driven_hamiltonian(const NVParams& p, double t) {
  ComplexMatrix h = nv_hamiltonian(p);
  double a = p.gamma * (p.B1 * std::cos(p.omega1 * t) +
                        p.B2 * std::cos(p.omega2 * t));
  if (a != 0.0) h += a * spin1_sx();
  return h;
}

// Generator in the frame rotating with U(t) = exp(-i A t): U^dag H U - A.
// Time-independent only after the rotating-wave approximation.
inline ComplexMatrix rotating_frame(const ComplexMatrix& h,
                                    const ComplexMatrix& a, double t) {
  if (h.rows() != a.rows() || h.cols() != a.cols())
    throw DimensionMismatch("rotating_frame: dimensions differ");
  UnitaryMatrix u = expm_hermitian(a, t);
  return conjugate(u, h) - a;
}

// Effective qudit Hamiltonian data: diagonal energies, couplings, and the
// diagonal dephasing-noise coupling operator.
struct QuditModel {
  int dim = 0;
  std::vector<double> eps;            // rad/us
  Eigen::MatrixXd J;                  // real symmetric couplings, rad/us
  std::vector<double> dephase_weights; // diagonal of the noise coupling

  void validate() const {
    if (dim < 2) throw InvalidParam("QuditModel: dim must be >= 2");
    if (static_cast<int>(eps.size()) != dim)
      throw InvalidParam("QuditModel: eps length != dim");
    if (J.rows() != dim || J.cols() != dim)
      throw DimensionMismatch("QuditModel: J must be dim x dim");
    if ((J - J.transpose()).cwiseAbs().maxCoeff() > tol::herm)
      throw NonHermitianInput("QuditModel: J not symmetric");
    if (static_cast<int>(dephase_weights.size()) != dim)
      throw InvalidParam("QuditModel: dephase_weights length != dim");
  }

  ComplexMatrix hamiltonian() const {
    validate();
    ComplexMatrix h = J.cast<complexd>();
    for (int m = 0; m < dim; ++m) h(m, m) = eps[m];
    return h;
  }

  ComplexMatrix dephase_op() const {
    ComplexMatrix s = ComplexMatrix::Zero(dim, dim);
    for (int m = 0; m < dim; ++m) s(m, m) = dephase_weights[m];
    return s;
  }

  bool hamiltonian_is_diagonal() const {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        if (i != j && J(i, j) != 0.0) return false;
    return true;
  }
};

// Rotating-frame three-level model for frame A = w1|+1><+1| + w2|-1><-1|:
//   eps = (D + gamma Bz - w1, 0, D - gamma Bz - w2)
//   J12 = gamma B1 / (2 sqrt 2), J23 = gamma B2 / (2 sqrt 2), J13 = 0
inline QuditModel effective_qudit_model(const NVParams& p) {
  p.validate();
  QuditModel m;
  m.dim = 3;
  m.eps = {p.D + p.gamma * p.Bz - p.omega1, 0.0,
           p.D - p.gamma * p.Bz - p.omega2};
  m.J = Eigen::MatrixXd::Zero(3, 3);
  const double c = 1.0 / (2.0 * std::sqrt(2.0));
  m.J(0, 1) = m.J(1, 0) = p.gamma * p.B1 * c;
  m.J(1, 2) = m.J(2, 1) = p.gamma * p.B2 * c;
  m.dephase_weights = {1.0, 0.0, -1.0};
  return m;
}

// Two-level restriction of the qudit model. Encodings:
//   pm1: levels {+1, -1}, dephase weights (1, -1)  [phase rate 2b]
//   p10: levels {+1, 0},  dephase weights (1, 0)
inline QuditModel two_level_model(const std::string& encoding,
                                  double eps0 = 0.0, double eps1 = 0.0,
                                  double j = 0.0) {
  QuditModel m;
  m.dim = 2;
  m.eps = {eps0, eps1};
  m.J = Eigen::MatrixXd::Zero(2, 2);
  m.J(0, 1) = m.J(1, 0) = j;
  if (encoding == "pm1")
    m.dephase_weights = {1.0, -1.0};
  else if (encoding == "p10")
    m.dephase_weights = {1.0, 0.0};
  else
    throw InvalidParam("two_level_model: unknown encoding '" + encoding + "'");
  return m;
}

// H_SB at a fixed field value: b * dephase_op
inline ComplexMatrix coupling_operator(const QuditModel& m, double b) {
  if (!std::isfinite(b)) throw InvalidParam("coupling_operator: b not finite");
  return b * m.dephase_op();
}

}
