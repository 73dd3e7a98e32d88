#pragma once

// Dense kernels: symmetric eigendecomposition (the exact oracle), shifted
// complex solves (one per pole) and spectral matrix functions.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"

namespace fermipole {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

/// Real symmetric matrix. Construction checks symmetry to 1e-14 relative.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() < 1) throw std::invalid_argument("SymMatrix: must be square, n >= 1");
    const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
    if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-14 * scale)
      throw std::invalid_argument("SymMatrix: matrix is not symmetric");
  }

  Eigen::Index n() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }
  double max_abs() const { return a_.cwiseAbs().maxCoeff(); }

 private:
  Matrix a_;
};

struct EigDecomposition {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors;  // columns orthonormal
};

/// Full spectral decomposition (Householder tridiagonalization followed by
/// implicit-shift QR on the tridiagonal form).
inline EigDecomposition sym_eig(const SymMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: tridiagonal QR did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// LU factorization of xi I - H for one complex shift, reused across
/// right-hand-side blocks.
class ShiftedLU {
 public:
  ShiftedLU(const SymMatrix& h, std::complex<double> xi) {
    if (xi.imag() == 0.0) throw std::domain_error("solve_shifted: shift must be off the real axis");
    CMatrix a = -h.matrix().cast<std::complex<double>>();
    a.diagonal().array() += xi;
    lu_.compute(a);
    // the smallest pivot of xi - H is bounded below by |Im xi| in exact arithmetic
    const double min_pivot = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 0.0) || !std::isfinite(min_pivot)) throw NumericalError("solve_shifted: singular pivot");
  }

  Eigen::Index n() const { return lu_.rows(); }

  template <class Rhs>
  CMatrix solve(const Rhs& rhs) const {
    if (rhs.rows() != n()) throw std::invalid_argument("solve_shifted: dimension mismatch");
    return lu_.solve(rhs);
  }

 private:
  Eigen::PartialPivLU<CMatrix> lu_;
};

/// Solve (xi I - H) X = rhs for complex shift xi with Im xi != 0.
inline CMatrix solve_shifted(const SymMatrix& h, std::complex<double> xi, const CMatrix& rhs) {
  if (xi.imag() == 0.0) throw std::domain_error("solve_shifted: shift must be off the real axis");
  if (rhs.rows() != h.n()) throw std::invalid_argument("solve_shifted: dimension mismatch");
  return ShiftedLU(h, xi).solve(rhs);
}

/// V f(Lambda) V^T.
inline Matrix matrix_function(const EigDecomposition& eig, const std::function<double(double)>& f) {
  Vector fl(eig.eigenvalues.size());
  for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = f(eig.eigenvalues(i));
  return eig.eigenvectors * fl.asDiagonal() * eig.eigenvectors.transpose();
}

/// diag(V f(Lambda) V^T) in O(n^2).
inline Vector matrix_function_diagonal(const EigDecomposition& eig, const std::function<double(double)>& f) {
  Vector fl(eig.eigenvalues.size());
  for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = f(eig.eigenvalues(i));
  return eig.eigenvectors.array().square().matrix() * fl;
}

}  // namespace fermipole
