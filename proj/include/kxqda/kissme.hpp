#ifndef KXQDA_KISSME_HPP
#define KXQDA_KISSME_HPP

// KISSME: Gaussian models of similar and dissimilar pair differences and the
// log-likelihood-ratio metric M = (Sigma_S^-1 - Sigma_D^-1)_+.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"
#include "kxqda/linalg.hpp"

namespace kxqda {

struct PairSet {
  std::vector<std::pair<Index, Index>> similar;
  std::vector<std::pair<Index, Index>> dissimilar;
};

/// All cross-view pairs (i over X, j over Z), split by identity.
inline PairSet cross_view_pairs(const CrossViewDataset& ds) {
  PairSet p;
  for (Index i = 0; i < ds.n(); ++i)
    for (Index j = 0; j < ds.m(); ++j)
      (ds.labels_x()[i] == ds.labels_z()[j] ? p.similar : p.dissimilar).emplace_back(i, j);
  return p;
}

/// Unnormalized sums of (a_i - b_j)(a_i - b_j)^T over the similar and the
/// dissimilar pairs; samples are the columns of `a` and `b`.
inline std::pair<SymMatrix, SymMatrix> pair_scatter(const Matrix& a, const Matrix& b, const PairSet& pairs) {
  require(a.rows() == b.rows(), ErrorKind::ShapeError, "pair_scatter: sample dimensions differ");
  require(!pairs.similar.empty(), ErrorKind::InsufficientPairs, "no similar pairs");
  require(!pairs.dissimilar.empty(), ErrorKind::InsufficientPairs, "no dissimilar pairs");
  auto accumulate = [&](const std::vector<std::pair<Index, Index>>& list) {
    Matrix diffs(a.rows(), static_cast<Index>(list.size()));
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto [i, j] = list[k];
      require(i >= 0 && i < a.cols() && j >= 0 && j < b.cols(), ErrorKind::ShapeError,
              "pair index out of range");
      diffs.col(static_cast<Index>(k)) = a.col(i) - b.col(j);
    }
    return SymMatrix(diffs * diffs.transpose());
  };
  return {accumulate(pairs.similar), accumulate(pairs.dissimilar)};
}

namespace detail {

/// (s + lambda * trace(s)/d * I)^-1; failure means the scatter is singular
/// even after the ridge.
inline Matrix ridged_inverse(const SymMatrix& s, double lambda) {
  Matrix r = s.matrix();
  r.diagonal().array() += lambda * s.trace() / double(s.dim());
  Eigen::LLT<Matrix> llt(r);
  require(llt.info() == Eigen::Success, ErrorKind::SingularScatter, "scatter matrix is singular after ridge");
  return llt.solve(Matrix::Identity(s.dim(), s.dim()));
}

}  // namespace detail

inline constexpr double kKissmeRidge = 1e-7;

/// Delta^T (Sigma_S^-1 - Sigma_D^-1) Delta, the log-likelihood ratio with its
/// constant terms dropped. Larger means more likely dissimilar.
inline double llr_score(const SymMatrix& sigma_s, const SymMatrix& sigma_d, const Vector& delta,
                        double lambda = kKissmeRidge) {
  require(sigma_s.dim() == sigma_d.dim() && delta.size() == sigma_s.dim(), ErrorKind::ShapeError,
          "llr_score: dimension mismatch");
  const Matrix diff = detail::ridged_inverse(sigma_s, lambda) - detail::ridged_inverse(sigma_d, lambda);
  return delta.dot(diff * delta);
}

struct KissmeOptions {
  bool normalize = true;          // divide the pair sums by n_S and n_D
  std::optional<int> pca_dim;     // optional PCA pre-projection
  double lambda = kKissmeRidge;
};

struct KissmeModel {
  SymMatrix metric;  // M in the (possibly PCA-reduced) space, PSD
  Matrix basis;      // d x p PCA basis, identity when PCA is off
  Matrix embedding;  // d x r, basis * factor(M): distance = ||embedding^T (a - b)||^2

  Index dim() const { return basis.rows(); }
};

inline KissmeModel kissme_fit(const SymMatrix& sigma_s, const SymMatrix& sigma_d, double lambda = kKissmeRidge) {
  require(sigma_s.dim() == sigma_d.dim(), ErrorKind::ShapeError, "kissme_fit: dimension mismatch");
  const SymMatrix raw(detail::ridged_inverse(sigma_s, lambda) - detail::ridged_inverse(sigma_d, lambda));
  KissmeModel model;
  model.metric = psd_project(raw);
  model.basis = Matrix::Identity(sigma_s.dim(), sigma_s.dim());
  model.embedding = psd_factor(model.metric);
  return model;
}

inline double kissme_distance(const KissmeModel& model, const Vector& a, const Vector& b) {
  require(a.size() == model.dim() && b.size() == model.dim(), ErrorKind::ShapeError,
          "kissme_distance: dimension mismatch");
  return (model.embedding.transpose() * (a - b)).squaredNorm();
}

/// Principal directions of the pooled (both views) training samples.
inline Matrix pca_basis(const CrossViewDataset& ds, int out_dim) {
  require(out_dim >= 1 && out_dim <= ds.dim(), ErrorKind::ConfigError, "PCA dimension out of range");
  Matrix all(ds.dim(), ds.n() + ds.m());
  all << ds.x().samples(), ds.z().samples();
  const Vector mean = all.rowwise().mean();
  all.colwise() -= mean;
  const EigPairs eig = sym_eig(SymMatrix(all * all.transpose()));
  return eig.vectors.leftCols(out_dim);
}

/// KISSME on a cross-view training set: every (x_i, z_j) pair with equal
/// identity is similar, every other pair dissimilar.
inline KissmeModel kissme_train(const CrossViewDataset& ds, const KissmeOptions& opts = {}) {
  Matrix basis = opts.pca_dim ? pca_basis(ds, *opts.pca_dim) : Matrix::Identity(ds.dim(), ds.dim());
  const Matrix x = basis.transpose() * ds.x().samples();
  const Matrix z = basis.transpose() * ds.z().samples();
  const PairSet pairs = cross_view_pairs(ds);
  auto [sum_s, sum_d] = pair_scatter(x, z, pairs);
  if (opts.normalize) {
    sum_s = sum_s * (1.0 / double(pairs.similar.size()));
    sum_d = sum_d * (1.0 / double(pairs.dissimilar.size()));
  }
  KissmeModel model = kissme_fit(sum_s, sum_d, opts.lambda);
  model.embedding = basis * model.embedding;
  model.basis = std::move(basis);
  return model;
}

}  // namespace kxqda

#endif  // KXQDA_KISSME_HPP
