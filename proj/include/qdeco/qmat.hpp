#pragma once

#include <Eigen/Dense>
#include <complex>
#include <sstream>
#include <string>

#include "qdeco/errors.hpp"
#include "qdeco/tolerances.hpp"

// Small dense complex-matrix numerics for qudit dimensions 2..8.
namespace qdeco {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using complexd = std::complex<double>;

inline double hermiticity_defect(const ComplexMatrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline double unitarity_defect(const ComplexMatrix& u) {
  ComplexMatrix g = u.adjoint() * u;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

// Unitary operator; produced by expm_hermitian and gate constructors, which
// guarantee unitarity up to rounding.
struct UnitaryMatrix {
  ComplexMatrix m;

  int dim() const { return static_cast<int>(m.rows()); }
  double defect() const { return unitarity_defect(m); }
  UnitaryMatrix dagger() const { return {m.adjoint()}; }
};

// U = exp(-i H t) for Hermitian H, via eigendecomposition. t may be negative.
inline UnitaryMatrix expm_hermitian(const ComplexMatrix& h, double t) {
  if (h.rows() != h.cols())
    throw DimensionMismatch("expm_hermitian: matrix is " +
                            std::to_string(h.rows()) + "x" +
                            std::to_string(h.cols()));
  if (!h.allFinite() || !std::isfinite(t))
    throw InvalidParam("expm_hermitian: non-finite input");
  double defect = hermiticity_defect(h);
  if (defect > tol::herm) {
    std::ostringstream os;
    os << "expm_hermitian: hermiticity defect " << defect;
    throw NonHermitianInput(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const auto& lam = es.eigenvalues();
  const ComplexMatrix& v = es.eigenvectors();
  ComplexVector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    phases[k] = std::polar(1.0, -lam[k] * t);
  return {v * phases.asDiagonal() * v.adjoint()};
}

// U^dag A U. Preserves Hermiticity of A up to rounding.
inline ComplexMatrix conjugate(const UnitaryMatrix& u, const ComplexMatrix& a) {
  if (u.m.rows() != a.rows() || u.m.cols() != a.cols())
    throw DimensionMismatch("conjugate: operand dimensions differ");
  return u.m.adjoint() * a * u.m;
}

// Level-swap unitary u_ij = I + |i><j| + |j><i| - |i><i| - |j><j|.
inline UnitaryMatrix swap_gate_matrix(int dim, int i, int j) {
  if (i < 0 || j < 0 || i >= dim || j >= dim || i == j)
    throw InvalidParam("swap_gate_matrix: bad level pair (" +
                       std::to_string(i) + "," + std::to_string(j) + ")");
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  u(i, i) = u(j, j) = 0.0;
  u(i, j) = u(j, i) = 1.0;
  return {u};
}

// Validated density matrix: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
public:
  static DensityMatrix from_state(const ComplexVector& psi) {
    if (std::abs(psi.norm() - 1.0) > tol::norm)
      throw InvalidParam("from_state: state not normalized");
    ComplexMatrix rho = psi * psi.adjoint();
    return DensityMatrix(rho);
  }

  const ComplexMatrix& matrix() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }
  double purity() const { return (mat_ * mat_).trace().real(); }
  complexd coherence(int i, int j) const { return mat_(i, j); }
  double population(int m) const { return mat_(m, m).real(); }

private:
  friend DensityMatrix validate_density(const ComplexMatrix&);
  explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {}
  ComplexMatrix mat_;
};

inline DensityMatrix validate_density(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols())
    throw DimensionMismatch("validate_density: matrix not square");
  double dh = hermiticity_defect(rho);
  if (dh > tol::herm) {
    std::ostringstream os;
    os << "NotHermitian: residual " << dh;
    throw NotHermitian(os.str());
  }
  double dt = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
  if (dt > tol::trace) {
    std::ostringstream os;
    os << "TraceNotOne: residual " << dt;
    throw TraceNotOne(os.str());
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
  double lam_min = es.eigenvalues().minCoeff();
  if (lam_min < -tol::psd) {
    std::ostringstream os;
    os << "NotPSD: smallest eigenvalue " << lam_min;
    throw NotPSD(os.str());
  }
  return DensityMatrix((rho + rho.adjoint()) / 2.0);
}

}
