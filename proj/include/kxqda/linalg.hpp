#ifndef KXQDA_LINALG_HPP
#define KXQDA_LINALG_HPP

// Dense symmetric eigen-machinery shared by every metric learner: the
// symmetric eigendecomposition, the projection onto the PSD cone and the
// Cholesky-reduced generalized eigensolver behind the Rayleigh quotients.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "kxqda/error.hpp"

namespace kxqda {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square real matrix that is symmetric by construction: every input is
/// replaced by (A + A^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& a) {
    require(a.rows() == a.cols(), ErrorKind::ShapeError,
            "SymMatrix needs a square matrix, got " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()));
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(m_ + o.m_); }
  SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(m_ - o.m_); }
  SymMatrix operator*(double s) const { return SymMatrix(m_ * s); }

 private:
  Matrix m_;
};

/// Eigenpairs with values sorted descending; column k of `vectors` belongs
/// to values[k].
struct EigPairs {
  Vector values;
  Matrix vectors;
};

namespace detail {

inline void require_finite(const Matrix& a, const char* what) {
  require(a.allFinite(), ErrorKind::InvalidMatrix, std::string(what) + " has non-finite entries");
}

inline EigPairs descending(const Vector& ascending_values, const Matrix& ascending_vectors) {
  return {ascending_values.reverse(), ascending_vectors.rowwise().reverse()};
}

}  // namespace detail

inline EigPairs sym_eig(const SymMatrix& a) {
  detail::require_finite(a.matrix(), "sym_eig input");
  if (a.dim() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  require(solver.info() == Eigen::Success, ErrorKind::InvalidMatrix, "eigensolver did not converge");
  return detail::descending(solver.eigenvalues(), solver.eigenvectors());
}

/// Nearest PSD matrix in Frobenius norm: strictly negative eigenvalues are
/// set to zero, everything else is kept.
inline SymMatrix psd_project(const SymMatrix& a) {
  const EigPairs eig = sym_eig(a);
  const Vector clipped = eig.values.cwiseMax(0.0);
  return SymMatrix(eig.vectors * clipped.asDiagonal() * eig.vectors.transpose());
}

/// Factor L (dim x rank) with psd_project(a) = L L^T. Only non-negative
/// eigen-directions are kept, so ||L^T v||^2 is never negative.
inline Matrix psd_factor(const SymMatrix& a) {
  const EigPairs eig = sym_eig(a);
  const Index keep = (eig.values.array() > 0.0).count();
  return eig.vectors.leftCols(keep) * eig.values.head(keep).cwiseSqrt().asDiagonal();
}

/// Maximizes the Rayleigh ratio  t^T num t / t^T (den + ridge I) t.
///
/// The denominator is factored as L L^T and the problem reduced to the
/// standard symmetric eigenproblem of L^-1 num L^-T; eigenvectors are mapped
/// back with L^-T, which leaves them (den + ridge I)-orthonormal.
inline EigPairs gen_eig_ratio(const SymMatrix& num, const SymMatrix& den, double ridge) {
  require(num.dim() == den.dim(), ErrorKind::ShapeError, "gen_eig_ratio: dimension mismatch");
  require(ridge >= 0.0, ErrorKind::ConfigError, "gen_eig_ratio: ridge must be non-negative");
  detail::require_finite(num.matrix(), "gen_eig_ratio numerator");
  detail::require_finite(den.matrix(), "gen_eig_ratio denominator");

  Matrix ridged = den.matrix();
  ridged.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(ridged);
  require(llt.info() == Eigen::Success, ErrorKind::SingularDenominator,
          "denominator is not positive definite after ridge " + std::to_string(ridge));

  const auto lower = llt.matrixL();
  Matrix reduced = lower.solve(num.matrix());
  reduced = lower.solve(reduced.transpose()).eval();
  EigPairs eig = sym_eig(SymMatrix(reduced));
  eig.vectors = llt.matrixU().solve(eig.vectors);
  return eig;
}

/// Inverse of a symmetric positive definite matrix with a relative diagonal
/// guard of guard * trace(a).
inline SymMatrix spd_inverse(const SymMatrix& a, double guard = 1e-12) {
  Matrix guarded = a.matrix();
  guarded.diagonal().array() += guard * std::abs(a.trace());
  Eigen::LLT<Matrix> llt(guarded);
  require(llt.info() == Eigen::Success, ErrorKind::SingularDenominator,
          "matrix is not positive definite");
  return SymMatrix(llt.solve(Matrix::Identity(a.dim(), a.dim())));
}

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace kxqda

#endif  // KXQDA_LINALG_HPP
