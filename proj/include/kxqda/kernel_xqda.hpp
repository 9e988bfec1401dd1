#ifndef KXQDA_KERNEL_XQDA_HPP
#define KXQDA_KERNEL_XQDA_HPP

// Kernel cross-view quadratic discriminant analysis (k-XQDA).
//
// Every discriminant direction is expanded over the mapped training samples
// with one coefficient block per view, w = Phi_X alpha + Phi_Z beta = Phi t,
// t = [alpha; beta]. The cross-view scatter quadratic forms then become
//
//   w^T Sigma_S w = t^T Lambda_S t,   w^T Sigma_D w = t^T Lambda_D t
//
// with (n+m)x(n+m) matrices assembled from kernel blocks only. Writing
// Lx = [K_XX; K_ZX] (columns: X samples) and Lz = [K_XZ; K_ZZ]:
//
//   A = Lx diag(F) Lx^T            F_i = m_{y_i}
//   B = Lz diag(G) Lz^T            G_j = n_{y_j}
//   C = [H_XX; H_ZX] [H_XZ; H_ZZ]^T
//   Lambda_S = (A + B - C - C^T) / n_S
//
//   U = m Lx Lx^T,  V = n Lz Lz^T,  E = Lx 1_{n x m} Lz^T
//   Lambda_D = (U + V - E - E^T - n_S Lambda_S) / n_D
//
// The H matrices hold per-class kernel sums, e.g. (H_XZ)_pq = sum_{y_j = q} k(x_p, z_j).

#include <cmath>
#include <optional>
#include <string>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"
#include "kxqda/kernels.hpp"
#include "kxqda/linalg.hpp"
#include "kxqda/subspace.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda {

/// Per-sample diagonals that absorb the sqrt(m_y) / sqrt(n_y) sample weights.
struct DecouplingPair {
  Vector f_tilde;  // n entries, m_{y_i}
  Vector g_tilde;  // m entries, n_{y_j}
};

inline DecouplingPair decoupling_matrices(const CrossViewDataset& ds) {
  const ClassStats st = class_stats(ds);
  DecouplingPair dec{Vector(ds.n()), Vector(ds.m())};
  for (Index i = 0; i < ds.n(); ++i) dec.f_tilde(i) = double(st.per_class_z[ds.labels_x()[i] - 1]);
  for (Index j = 0; j < ds.m(); ++j) dec.g_tilde(j) = double(st.per_class_x[ds.labels_z()[j] - 1]);
  return dec;
}

struct ClassSumKernels {
  Matrix h_xx;  // n x c: sum over X samples of class q of k(x_p, .)
  Matrix h_zz;  // m x c: sum over Z samples of class q of k(z_p, .)
  Matrix h_xz;  // n x c: sum over Z samples of class q of k(x_p, .)
  Matrix h_zx;  // m x c: sum over X samples of class q of k(z_p, .)
};

inline ClassSumKernels class_sum_kernels(const CrossViewDataset& ds, const KernelBlocks& blocks) {
  require(blocks.n() == ds.n() && blocks.m() == ds.m(), ErrorKind::ShapeError,
          "kernel blocks do not match the dataset");
  const Matrix yx = detail::label_indicator(ds.labels_x(), ds.class_count());
  const Matrix yz = detail::label_indicator(ds.labels_z(), ds.class_count());
  return {blocks.k_xx * yx, blocks.k_zz * yz, blocks.k_xz * yz, blocks.k_zx * yx};
}

namespace detail {

inline Matrix stacked_x(const KernelBlocks& k) {
  Matrix lx(k.n() + k.m(), k.n());
  lx << k.k_xx, k.k_zx;
  return lx;
}

inline Matrix stacked_z(const KernelBlocks& k) {
  Matrix lz(k.n() + k.m(), k.m());
  lz << k.k_xz, k.k_zz;
  return lz;
}

/// Lambda_S before symmetrization.
inline Matrix lambda_s_raw(const KernelBlocks& blocks, const DecouplingPair& dec, const ClassSumKernels& h,
                           Index n_s) {
  require(n_s > 0, ErrorKind::InsufficientPairs, "no same-identity cross-view pairs");
  const Matrix lx = stacked_x(blocks);
  const Matrix lz = stacked_z(blocks);
  const Matrix a = lx * dec.f_tilde.asDiagonal() * lx.transpose();
  const Matrix b = lz * dec.g_tilde.asDiagonal() * lz.transpose();
  Matrix left(lx.rows(), h.h_xx.cols()), right(lx.rows(), h.h_xx.cols());
  left << h.h_xx, h.h_zx;
  right << h.h_xz, h.h_zz;
  const Matrix c = left * right.transpose();
  return (a + b - c - c.transpose()) / double(n_s);
}

/// Lambda_D before symmetrization. `e_sign` exists so the self-test can
/// inject a sign error into E and watch the primal-dual check catch it.
inline Matrix lambda_d_raw(const KernelBlocks& blocks, const SymMatrix& lambda_s, Index n_s, Index n_d,
                           double e_sign = 1.0) {
  require(n_d > 0, ErrorKind::InsufficientPairs, "no different-identity cross-view pairs");
  const Matrix lx = stacked_x(blocks);
  const Matrix lz = stacked_z(blocks);
  const double n = double(blocks.n());
  const double m = double(blocks.m());
  const Matrix u = m * (lx * lx.transpose());
  const Matrix v = n * (lz * lz.transpose());
  // 1_{n x m} = 1_n 1_m^T, so E is the outer product of two row-sum vectors.
  const Matrix e = e_sign * (lx.rowwise().sum() * lz.rowwise().sum().transpose());
  return (u + v - e - e.transpose() - double(n_s) * lambda_s.matrix()) / double(n_d);
}

}  // namespace detail

inline SymMatrix lambda_s(const KernelBlocks& blocks, const DecouplingPair& dec, const ClassSumKernels& h,
                          Index n_s) {
  return SymMatrix(detail::lambda_s_raw(blocks, dec, h, n_s));
}

inline SymMatrix lambda_d(const KernelBlocks& blocks, const SymMatrix& lambda_s, Index n_s, Index n_d) {
  return SymMatrix(detail::lambda_d_raw(blocks, lambda_s, n_s, n_d));
}

struct KxqdaOptions {
  double lambda = kDefaultRidge;  // added to the diagonal of Lambda_S
  std::optional<Index> max_b;
};

struct KxqdaModel {
  KernelSpec kernel;
  ViewMatrix train_x;
  ViewMatrix train_z;
  Matrix theta;         // (n+m) x b
  SymMatrix gamma_plus; // b x b, PSD
  Index b = 0;
  Vector eigenvalues;   // Rayleigh values, descending
  double lambda = kDefaultRidge;
  DimensionRule rule = DimensionRule::EigenvaluesAboveOne;
  Matrix embedding;     // (n+m) x r with theta gamma_plus theta^T = embedding embedding^T

  Index dim() const { return train_x.dim(); }
};

/// Builds the model from the two coefficient-space scatter matrices.
inline KxqdaModel kxqda_from_lambdas(const SymMatrix& lam_s, const SymMatrix& lam_d, const KxqdaOptions& opts = {}) {
  RayleighSubspace sub = fit_rayleigh_subspace(lam_s, lam_d, opts.lambda, opts.max_b);
  KxqdaModel model;
  model.theta = std::move(sub.directions);
  model.gamma_plus = std::move(sub.core);
  model.b = sub.b;
  model.eigenvalues = std::move(sub.eigenvalues);
  model.lambda = opts.lambda;
  model.rule = sub.rule;
  model.embedding = model.theta * psd_factor(model.gamma_plus);
  return model;
}

/// Fits k-XQDA: kernel blocks, decoupling diagonals, Lambda_S, Lambda_D,
/// then the Rayleigh subspace of (Lambda_D, Lambda_S + lambda I) keeping the
/// values above 1 and the PSD core from the ridged projected forms.
inline KxqdaModel kxqda_fit(const CrossViewDataset& ds, const KernelSpec& kernel, const KxqdaOptions& opts = {}) {
  const ClassStats st = class_stats(ds);
  detail::require_pairs(st);
  const KernelBlocks blocks = kernel_blocks(kernel, ds);
  const DecouplingPair dec = decoupling_matrices(ds);
  const ClassSumKernels h = class_sum_kernels(ds, blocks);
  const SymMatrix lam_s = lambda_s(blocks, dec, h, st.n_s);
  const SymMatrix lam_d = lambda_d(blocks, lam_s, st.n_s, st.n_d);
  KxqdaModel model = kxqda_from_lambdas(lam_s, lam_d, opts);
  model.kernel = kernel;
  model.train_x = ds.x();
  model.train_z = ds.z();
  return model;
}

/// Metric coordinates of samples stored column-wise: column j is e(q_j)
/// with distance(q_i, q_j) = ||e(q_i) - e(q_j)||^2.
inline Matrix kxqda_embed(const KxqdaModel& model, const Matrix& samples) {
  return model.embedding.transpose() * query_column_batch(model.kernel, model.train_x, model.train_z, samples);
}

/// (K_q - K_p)^T Theta Gamma_+ Theta^T (K_q - K_p) with K_q the kernel column
/// of a query against all training samples.
inline double kxqda_distance(const KxqdaModel& model, const Vector& qx, const Vector& qz) {
  const Vector kx = query_columns(model.kernel, model.train_x, model.train_z, qx);
  const Vector kz = query_columns(model.kernel, model.train_x, model.train_z, qz);
  return (model.embedding.transpose() * (kx - kz)).squaredNorm();
}

/// Explicit degree-2 feature map with <phi(a), phi(b)> = (scale <a,b> + offset)^2.
/// Layout: scale x_i^2, scale sqrt(2) x_i x_j (i < j), then, when offset > 0,
/// sqrt(2 scale offset) x_i and the constant offset.
inline Vector explicit_poly_map(const Vector& x, int degree, double offset, double scale) {
  require(degree == 2, ErrorKind::ConfigError, "explicit feature map only supports degree 2");
  require(offset >= 0.0 && scale > 0.0, ErrorKind::ConfigError, "invalid polynomial parameters");
  const Index d = x.size();
  const Index quad = d * (d + 1) / 2;
  const bool affine = offset > 0.0;
  Vector phi(quad + (affine ? d + 1 : 0));
  Index k = 0;
  for (Index i = 0; i < d; ++i) phi(k++) = scale * x(i) * x(i);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) phi(k++) = scale * std::sqrt(2.0) * x(i) * x(j);
  if (affine) {
    const double lin = std::sqrt(2.0 * scale * offset);
    for (Index i = 0; i < d; ++i) phi(k++) = lin * x(i);
    phi(k++) = offset;
  }
  return phi;
}

inline Matrix explicit_poly_map(const Matrix& samples, int degree, double offset, double scale) {
  Matrix out;
  for (Index j = 0; j < samples.cols(); ++j) {
    const Vector phi = explicit_poly_map(Vector(samples.col(j)), degree, offset, scale);
    if (j == 0) out.resize(phi.size(), samples.cols());
    out.col(j) = phi;
  }
  return out;
}

}  // namespace kxqda

#endif  // KXQDA_KERNEL_XQDA_HPP
