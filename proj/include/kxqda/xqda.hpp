#ifndef KXQDA_XQDA_HPP
#define KXQDA_XQDA_HPP

// Cross-view quadratic discriminant analysis (XQDA).
//
// The cross-view scatter matrices are built without enumerating the n*m
// pairs:
//
//   n_S Sigma_S = Xw Xw^T + Zw Zw^T - S R^T - R S^T
//   n_D Sigma_D = m X X^T + n Z Z^T - s r^T - r s^T - n_S Sigma_S
//
// where Xw weights x_i by sqrt(m_{y_i}), Zw weights z_j by sqrt(n_{y_j}),
// S and R hold per-class sums of each view and s, r the view totals.

#include <Eigen/QR>

#include <optional>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"
#include "kxqda/linalg.hpp"
#include "kxqda/subspace.hpp"

namespace kxqda {

struct ScatterPair {
  SymMatrix sigma_s;
  SymMatrix sigma_d;
  Index n_s = 0;
  Index n_d = 0;
};

namespace detail {

/// n x c indicator with entry (i, k) = 1 when labels[i] == k + 1.
inline Matrix label_indicator(const std::vector<int>& labels, int classes) {
  Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), labels[i] - 1) = 1.0;
  return y;
}

inline void require_pairs(const ClassStats& st) {
  require(st.n_s > 0, ErrorKind::InsufficientPairs, "no same-identity cross-view pairs");
  require(st.n_d > 0, ErrorKind::InsufficientPairs, "no different-identity cross-view pairs");
}

}  // namespace detail

namespace detail {

/// n_S Sigma_S = X diag(m_y) X^T + Z diag(n_y) Z^T - S R^T - R S^T, with S, R
/// the per-class sums of X and Z.
inline Matrix similar_scatter_sum(const CrossViewDataset& ds, const ClassStats& st) {
  const Matrix& x = ds.x().samples();
  const Matrix& z = ds.z().samples();
  Vector wx(ds.n()), wz(ds.m());
  for (Index i = 0; i < ds.n(); ++i) wx(i) = double(st.per_class_z[ds.labels_x()[i] - 1]);
  for (Index j = 0; j < ds.m(); ++j) wz(j) = double(st.per_class_x[ds.labels_z()[j] - 1]);
  const Matrix s_cls = x * label_indicator(ds.labels_x(), ds.class_count());  // d x c
  const Matrix r_cls = z * label_indicator(ds.labels_z(), ds.class_count());
  const Matrix cross = s_cls * r_cls.transpose();
  return x * wx.asDiagonal() * x.transpose() + z * wz.asDiagonal() * z.transpose() - cross - cross.transpose();
}

}  // namespace detail

/// Sigma_S alone; needs only same-identity pairs.
inline SymMatrix xqda_similar_scatter(const CrossViewDataset& ds) {
  const ClassStats st = class_stats(ds);
  require(st.n_s > 0, ErrorKind::InsufficientPairs, "no same-identity cross-view pairs");
  return SymMatrix(detail::similar_scatter_sum(ds, st) / double(st.n_s));
}

inline ScatterPair xqda_scatter_efficient(const CrossViewDataset& ds) {
  const ClassStats st = class_stats(ds);
  detail::require_pairs(st);
  const Matrix& x = ds.x().samples();
  const Matrix& z = ds.z().samples();
  const Matrix ns_sigma_s = detail::similar_scatter_sum(ds, st);
  const Vector s_tot = x.rowwise().sum();
  const Vector r_tot = z.rowwise().sum();
  const Matrix tot = s_tot * r_tot.transpose();
  const Matrix nd_sigma_d = double(ds.m()) * x * x.transpose() + double(ds.n()) * z * z.transpose() - tot -
                            tot.transpose() - ns_sigma_s;
  return {SymMatrix(ns_sigma_s / double(st.n_s)), SymMatrix(nd_sigma_d / double(st.n_d)), st.n_s, st.n_d};
}

inline constexpr Index kBruteForcePairLimit = 1'000'000;

/// Reference scatter: explicit loop over every cross-view pair.
inline ScatterPair xqda_scatter_bruteforce(const CrossViewDataset& ds) {
  require(ds.n() * ds.m() <= kBruteForcePairLimit, ErrorKind::TooLarge,
          "brute-force scatter limited to 1e6 pairs");
  const Index d = ds.dim();
  Matrix sum_s = Matrix::Zero(d, d);
  Matrix sum_d = Matrix::Zero(d, d);
  Index n_s = 0, n_d = 0;
  Vector diff(d);
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.m(); ++j) {
      diff = ds.x().sample(i) - ds.z().sample(j);
      if (ds.labels_x()[i] == ds.labels_z()[j]) {
        sum_s.noalias() += diff * diff.transpose();
        ++n_s;
      } else {
        sum_d.noalias() += diff * diff.transpose();
        ++n_d;
      }
    }
  }
  require(n_s > 0, ErrorKind::InsufficientPairs, "no same-identity cross-view pairs");
  require(n_d > 0, ErrorKind::InsufficientPairs, "no different-identity cross-view pairs");
  return {SymMatrix(sum_s / double(n_s)), SymMatrix(sum_d / double(n_d)), n_s, n_d};
}

inline constexpr double kDefaultRidge = 1e-7;

enum class XqdaSolver {
  Auto,     // Direct when d <= n + m, Reduced otherwise
  Direct,   // d x d scatter matrices
  Reduced,  // scatter matrices on an orthonormal basis of the training span
};

struct XqdaOptions {
  double lambda = kDefaultRidge;  // ridge = lambda * trace(Sigma_S) / d
  std::optional<Index> max_b;
  XqdaSolver solver = XqdaSolver::Auto;
};

struct XqdaModel {
  Matrix w;           // d x b
  SymMatrix core;     // b x b, PSD
  Index b = 0;
  Vector eigenvalues; // Rayleigh values, descending
  double ridge = 0.0; // absolute ridge added to Sigma_S
  DimensionRule rule = DimensionRule::EigenvaluesAboveOne;
  Matrix embedding;   // d x r with W core W^T = embedding embedding^T

  Index dim() const { return w.rows(); }
};

namespace detail {

inline XqdaModel finish_xqda(RayleighSubspace sub, Matrix w, double ridge) {
  XqdaModel model;
  model.w = std::move(w);
  model.core = std::move(sub.core);
  model.b = sub.b;
  model.eigenvalues = std::move(sub.eigenvalues);
  model.ridge = ridge;
  model.rule = sub.rule;
  model.embedding = model.w * psd_factor(model.core);
  return model;
}

}  // namespace detail

/// XQDA from precomputed scatter matrices (input-space solve).
inline XqdaModel xqda_fit(const ScatterPair& scatter, const XqdaOptions& opts = {}) {
  const double ridge = opts.lambda * scatter.sigma_s.trace() / double(scatter.sigma_s.dim());
  RayleighSubspace sub = fit_rayleigh_subspace(scatter.sigma_s, scatter.sigma_d, ridge, opts.max_b);
  Matrix w = sub.directions;
  return detail::finish_xqda(std::move(sub), std::move(w), ridge);
}

/// XQDA on a training set.
///
/// When d exceeds n + m both scatter matrices live in the span of the
/// training samples. The reduced solver expresses them on an orthonormal
/// basis Q of that span (thin QR) and maps the directions back with Q; the
/// ridge keeps its input-space value lambda * trace(Sigma_S) / d. Outside the
/// span Sigma_D vanishes, so no direction with a positive Rayleigh value is
/// lost.
inline XqdaModel xqda_fit(const CrossViewDataset& ds, const XqdaOptions& opts = {}) {
  const Index d = ds.dim();
  const Index total = ds.n() + ds.m();
  const bool reduced =
      opts.solver == XqdaSolver::Reduced || (opts.solver == XqdaSolver::Auto && d > total);
  if (!reduced) return xqda_fit(xqda_scatter_efficient(ds), opts);

  Matrix joint(d, total);
  joint << ds.x().samples(), ds.z().samples();
  Eigen::HouseholderQR<Matrix> qr(joint);
  const Index r = std::min(d, total);
  const Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  const Matrix coords = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const CrossViewDataset local(ViewMatrix(coords.leftCols(ds.n())), ViewMatrix(coords.rightCols(ds.m())),
                               ds.labels_x(), ds.labels_z());
  const ScatterPair sc = xqda_scatter_efficient(local);
  const double ridge = opts.lambda * sc.sigma_s.trace() / double(d);
  RayleighSubspace sub = fit_rayleigh_subspace(sc.sigma_s, sc.sigma_d, ridge, opts.max_b);
  Matrix w = q * sub.directions;
  return detail::finish_xqda(std::move(sub), std::move(w), ridge);
}

/// (x - z)^T W core W^T (x - z), evaluated through the PSD factor so the
/// result is never negative.
inline double xqda_distance(const XqdaModel& model, const Vector& x, const Vector& z) {
  require(x.size() == model.dim() && z.size() == model.dim(), ErrorKind::ShapeError,
          "xqda_distance: dimension mismatch");
  return (model.embedding.transpose() * (x - z)).squaredNorm();
}

}  // namespace kxqda

#endif  // KXQDA_XQDA_HPP
