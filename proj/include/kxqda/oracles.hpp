#ifndef KXQDA_ORACLES_HPP
#define KXQDA_ORACLES_HPP

// Reference computations that check the closed-form shortcuts through an
// independent route: explicit pair enumeration, explicit feature maps and
// input-space quadratic forms. Shared by the unit tests, the acceptance
// suite and `kxqda selftest`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/kernels.hpp"
#include "kxqda/rng.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda::oracle {

inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
  return m;
}

inline Vector gaussian_vector(Rng& rng, Index n, double sd = 1.0) { return gaussian_matrix(rng, n, 1, sd).col(0); }

/// Random labels over 1..c in which every class appears in at least one view,
/// one class appears in both views (so n_S > 0) and, with c >= 2, n_D > 0.
inline CrossViewDataset random_dataset(Rng& rng, Index n, Index m, Index d, int c) {
  require(c >= 2 && n + m > c && n >= 1 && m >= 1, ErrorKind::ConfigError, "random_dataset: bad sizes");
  std::vector<int> pool;
  for (int k = 1; k <= c; ++k) pool.push_back(k);
  rng.shuffle(pool);
  // Class pool[0] is placed in both views; the remaining classes are dealt
  // out once so labels stay contiguous, the rest are random.
  std::vector<int> lx(static_cast<std::size_t>(n)), lz(static_cast<std::size_t>(m));
  for (auto& y : lx) y = int(rng.below(std::uint64_t(c))) + 1;
  for (auto& y : lz) y = int(rng.below(std::uint64_t(c))) + 1;
  lx[0] = pool[0];
  lz[0] = pool[0];
  std::size_t slot = 1;
  for (std::size_t k = 1; k < pool.size(); ++k, ++slot) {
    if (slot < lx.size()) lx[slot] = pool[k];
    else lz[slot - lx.size() + 1] = pool[k];
  }
  return CrossViewDataset(ViewMatrix(gaussian_matrix(rng, d, n)), ViewMatrix(gaussian_matrix(rng, d, m)), lx, lz);
}

/// [X Z] of a dataset: the primal image of a coefficient vector is joint * t.
inline Matrix joint_samples(const CrossViewDataset& ds) {
  Matrix joint(ds.dim(), ds.n() + ds.m());
  joint << ds.x().samples(), ds.z().samples();
  return joint;
}

/// Maps both views through the explicit degree-2 polynomial feature map.
inline CrossViewDataset mapped_dataset(const CrossViewDataset& ds, const KernelSpec& poly) {
  return CrossViewDataset(ViewMatrix(explicit_poly_map(ds.x().samples(), 2, poly.offset, poly.scale)),
                          ViewMatrix(explicit_poly_map(ds.z().samples(), 2, poly.offset, poly.scale)),
                          ds.labels_x(), ds.labels_z());
}

/// (H_XX)_pq etc. by double loop over samples and classes.
inline ClassSumKernels class_sums_by_enumeration(const KernelSpec& k, const CrossViewDataset& ds) {
  const int c = ds.class_count();
  ClassSumKernels h{Matrix::Zero(ds.n(), c), Matrix::Zero(ds.m(), c), Matrix::Zero(ds.n(), c),
                    Matrix::Zero(ds.m(), c)};
  for (Index p = 0; p < ds.n(); ++p) {
    for (Index i = 0; i < ds.n(); ++i) h.h_xx(p, ds.labels_x()[i] - 1) += kernel_eval(k, ds.x().sample(p), ds.x().sample(i));
    for (Index j = 0; j < ds.m(); ++j) h.h_xz(p, ds.labels_z()[j] - 1) += kernel_eval(k, ds.x().sample(p), ds.z().sample(j));
  }
  for (Index p = 0; p < ds.m(); ++p) {
    for (Index j = 0; j < ds.m(); ++j) h.h_zz(p, ds.labels_z()[j] - 1) += kernel_eval(k, ds.z().sample(p), ds.z().sample(j));
    for (Index i = 0; i < ds.n(); ++i) h.h_zx(p, ds.labels_x()[i] - 1) += kernel_eval(k, ds.z().sample(p), ds.x().sample(i));
  }
  return h;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t s = 0; s < idx.size();) {
      std::size_t e = s;
      while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
      const double avg = 0.5 * double(s + e) + 1.0;
      for (std::size_t k = s; k <= e; ++k) r[idx[k]] = avg;
      s = e + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const Eigen::Map<const Vector> va(ra.data(), Index(ra.size())), vb(rb.data(), Index(rb.size()));
  const Vector ca = va.array() - va.mean(), cb = vb.array() - vb.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace kxqda::oracle

#endif  // KXQDA_ORACLES_HPP
