#ifndef KXQDA_SELFTEST_HPP
#define KXQDA_SELFTEST_HPP

// Oracle checks behind `kxqda selftest` and the acceptance suite. Each check
// reports the worst error it observed next to the tolerance it enforces.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/kernels.hpp"
#include "kxqda/oracles.hpp"
#include "kxqda/rng.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda {

struct CheckResult {
  std::string name;
  double tolerance = 0.0;
  double observed = 0.0;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

namespace checks {

/// Random dataset with n, m <= 40, d <= 16, c <= 8.
inline CrossViewDataset small_random_dataset(Rng& rng) {
  const Index n = 2 + Index(rng.below(39));
  const Index m = 2 + Index(rng.below(39));
  const Index d = 1 + Index(rng.below(16));
  const int c = 2 + int(rng.below(std::min<std::uint64_t>(7, std::uint64_t(n + m - 3))));
  return oracle::random_dataset(rng, n, m, d, c);
}

/// Worst relative Frobenius error between the closed-form and the
/// pair-enumeration scatter matrices (both Sigma_S and Sigma_D).
inline double scatter_equivalence(int draws, std::uint64_t seed) {
  Rng rng(seed, "check/scatter");
  double worst = 0.0;
  for (int t = 0; t < draws; ++t) {
    const CrossViewDataset ds = small_random_dataset(rng);
    const ScatterPair fast = xqda_scatter_efficient(ds);
    const ScatterPair slow = xqda_scatter_bruteforce(ds);
    worst = std::max({worst, rel_frobenius(fast.sigma_s.matrix(), slow.sigma_s.matrix()),
                      rel_frobenius(fast.sigma_d.matrix(), slow.sigma_d.matrix())});
    if (fast.n_s != slow.n_s || fast.n_d != slow.n_d) worst = std::max(worst, 1.0);
  }
  return worst;
}

struct PrimalDualError {
  double similar = 0.0;
  double dissimilar = 0.0;
};

/// Linear kernel: t^T Lambda t against w^T Sigma w with w = [X Z] t and Sigma
/// from explicit pair enumeration. `e_sign = -1` flips the sign of E inside
/// Lambda_D (mutation check).
inline PrimalDualError primal_dual(int draws, std::uint64_t seed, double e_sign = 1.0) {
  Rng rng(seed, "check/primal-dual");
  PrimalDualError worst;
  for (int t = 0; t < draws; ++t) {
    const CrossViewDataset ds = small_random_dataset(rng);
    const ClassStats st = class_stats(ds);
    const KernelBlocks blocks = kernel_blocks(KernelSpec::linear(), ds);
    const SymMatrix lam_s = lambda_s(blocks, decoupling_matrices(ds), class_sum_kernels(ds, blocks), st.n_s);
    const SymMatrix lam_d(detail::lambda_d_raw(blocks, lam_s, st.n_s, st.n_d, e_sign));
    const ScatterPair ref = xqda_scatter_bruteforce(ds);
    const Vector theta = oracle::gaussian_vector(rng, ds.n() + ds.m());
    const Vector w = oracle::joint_samples(ds) * theta;
    worst.similar = std::max(worst.similar, oracle::rel_err(theta.dot(lam_s.matrix() * theta),
                                                            w.dot(ref.sigma_s.matrix() * w)));
    worst.dissimilar = std::max(worst.dissimilar, oracle::rel_err(theta.dot(lam_d.matrix() * theta),
                                                                  w.dot(ref.sigma_d.matrix() * w)));
  }
  return worst;
}

struct FeatureMapError {
  double eigenvalues = 0.0;  // worst relative error over eigenvalues > 1
  double distances = 0.0;    // worst relative error over query pairs
  Index b_kernel = 0;
  Index b_explicit = 0;
};

/// Polynomial-kernel k-XQDA against XQDA on the explicit degree-2 feature map.
inline FeatureMapError explicit_feature_map(std::uint64_t seed, int query_pairs = 50) {
  SynthConfig cfg;
  cfg.classes = 20;
  cfg.per_class_x = 2;
  cfg.per_class_z = 2;
  cfg.dim = 3;
  cfg.warp = Warp::Quadratic;
  cfg.warp_strength = 0.5;
  cfg.noise = 0.3;
  const CrossViewDataset ds = synth_crossview(cfg, derive_seed(seed, "check/phi-data"));
  const KernelSpec poly = KernelSpec::polynomial(2, 1.0, 1.0);

  const KxqdaModel kernel_model = kxqda_fit(ds, poly);
  XqdaOptions direct;
  direct.solver = XqdaSolver::Direct;
  const XqdaModel explicit_model = xqda_fit(oracle::mapped_dataset(ds, poly), direct);

  FeatureMapError err;
  err.b_kernel = kernel_model.b;
  err.b_explicit = explicit_model.b;
  if (err.b_kernel != err.b_explicit) {
    err.eigenvalues = 1.0;
  } else {
    for (Index k = 0; k < err.b_kernel; ++k)
      err.eigenvalues = std::max(err.eigenvalues, oracle::rel_err(kernel_model.eigenvalues(k), explicit_model.eigenvalues(k)));
  }
  Rng rng(seed, "check/phi-queries");
  for (int q = 0; q < query_pairs; ++q) {
    const Vector x = oracle::gaussian_vector(rng, 3);
    const Vector z = oracle::gaussian_vector(rng, 3);
    const double dk = kxqda_distance(kernel_model, x, z);
    const double de = xqda_distance(explicit_model, explicit_poly_map(x, 2, poly.offset, poly.scale),
                                    explicit_poly_map(z, 2, poly.offset, poly.scale));
    err.distances = std::max(err.distances, oracle::rel_err(dk, de));
  }
  return err;
}

/// Worst |<phi(a), phi(b)> - k(a, b)| over random pairs, d <= 4.
inline double poly_map_identity(int draws, std::uint64_t seed) {
  Rng rng(seed, "check/poly-map");
  double worst = 0.0;
  for (int t = 0; t < draws; ++t) {
    const Index d = 1 + Index(rng.below(4));
    const KernelSpec k = KernelSpec::polynomial(2, rng.uniform(0.0, 2.0), rng.uniform(0.1, 2.0));
    const Vector a = oracle::gaussian_vector(rng, d), b = oracle::gaussian_vector(rng, d);
    const double lhs = explicit_poly_map(a, 2, k.offset, k.scale).dot(explicit_poly_map(b, 2, k.offset, k.scale));
    worst = std::max(worst, std::abs(lhs - kernel_eval(k, a, b)));
  }
  return worst;
}

/// Class-sum kernels from the indicator products against a double loop.
inline double class_sums(int draws, std::uint64_t seed) {
  Rng rng(seed, "check/class-sums");
  double worst = 0.0;
  for (int t = 0; t < draws; ++t) {
    const CrossViewDataset ds = small_random_dataset(rng);
    const KernelSpec k = KernelSpec::rbf(0.1);
    const ClassSumKernels fast = class_sum_kernels(ds, kernel_blocks(k, ds));
    const ClassSumKernels slow = oracle::class_sums_by_enumeration(k, ds);
    worst = std::max({worst, (fast.h_xx - slow.h_xx).cwiseAbs().maxCoeff(), (fast.h_zz - slow.h_zz).cwiseAbs().maxCoeff(),
                      (fast.h_xz - slow.h_xz).cwiseAbs().maxCoeff(), (fast.h_zx - slow.h_zx).cwiseAbs().maxCoeff()});
  }
  return worst;
}

struct LinearConsistency {
  double spearman = 0.0;
  double eigenvalues = 0.0;
  Index b_kernel = 0;
  Index b_input = 0;
};

/// Linear-kernel k-XQDA against input-space XQDA on full-rank data with
/// n + m > d: eigenvalues above 1 and the ranking of a 20 x 20 query grid.
inline LinearConsistency linear_consistency(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.classes = 10;
  cfg.per_class_x = 3;
  cfg.per_class_z = 3;
  cfg.dim = 6;
  cfg.warp = Warp::Affine;
  cfg.noise = 0.5;
  const CrossViewDataset ds = synth_crossview(cfg, derive_seed(seed, "check/linear-data"));
  const KxqdaModel km = kxqda_fit(ds, KernelSpec::linear());
  const XqdaModel xm = xqda_fit(ds);
  LinearConsistency out;
  out.b_kernel = km.b;
  out.b_input = xm.b;
  if (km.b != xm.b) {
    out.eigenvalues = 1.0;
  } else {
    for (Index k = 0; k < km.b; ++k)
      out.eigenvalues = std::max(out.eigenvalues, oracle::rel_err(km.eigenvalues(k), xm.eigenvalues(k)));
  }
  Rng rng(seed, "check/linear-grid");
  const Matrix queries = oracle::gaussian_matrix(rng, 6, 20);
  const Matrix gallery = oracle::gaussian_matrix(rng, 6, 20);
  std::vector<double> dk, dx;
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 20; ++j) {
      dk.push_back(kxqda_distance(km, queries.col(i), gallery.col(j)));
      dx.push_back(xqda_distance(xm, queries.col(i), gallery.col(j)));
    }
  out.spearman = oracle::spearman(dk, dx);
  return out;
}

}  // namespace checks

struct SelftestOptions {
  bool quick = false;
  bool inject_e_sign_flip = false;
  std::uint64_t seed = 7;
};

/// Runs every check; failures are collected, never short-circuited.
inline std::vector<CheckResult> run_selftest(const SelftestOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  std::vector<CheckResult> out;
  auto run = [&](std::string name, double tol, const std::function<double(std::string&)>& body,
                 bool higher_is_better = false) {
    CheckResult r;
    r.name = std::move(name);
    r.tolerance = tol;
    const auto t0 = clock::now();
    try {
      r.observed = body(r.detail);
      r.pass = higher_is_better ? r.observed >= tol : r.observed <= tol;
    } catch (const std::exception& e) {
      r.detail = e.what();
      r.pass = false;
    }
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back(std::move(r));
  };
  const int draws = opts.quick ? 20 : 100;
  const std::uint64_t seed = opts.seed;
  const double e_sign = opts.inject_e_sign_flip ? -1.0 : 1.0;

  run("scatter: closed form vs pair enumeration (rel. Frobenius)", 1e-10,
      [&](std::string&) { return checks::scatter_equivalence(draws, seed); });

  checks::PrimalDualError pd;
  bool pd_done = false;
  auto primal_dual = [&]() -> const checks::PrimalDualError& {
    if (!pd_done) {
      pd = checks::primal_dual(draws, seed, e_sign);
      pd_done = true;
    }
    return pd;
  };
  run("primal-dual: t'Lambda_S t vs w'Sigma_S w (linear kernel)", 1e-9,
      [&](std::string&) { return primal_dual().similar; });
  run("primal-dual: t'Lambda_D t vs w'Sigma_D w (linear kernel)", 1e-9,
      [&](std::string&) { return primal_dual().dissimilar; });

  run("poly map: <phi(a),phi(b)> vs kernel (abs)", 1e-12,
      [&](std::string&) { return checks::poly_map_identity(draws, seed); });
  run("class sums: indicator product vs double loop (abs)", 1e-12,
      [&](std::string&) { return checks::class_sums(opts.quick ? 5 : 20, seed); });

  checks::FeatureMapError fm;
  bool fm_done = false;
  auto feature_map = [&]() -> const checks::FeatureMapError& {
    if (!fm_done) {
      fm = checks::explicit_feature_map(seed);
      fm_done = true;
    }
    return fm;
  };
  run("explicit phi: eigenvalues > 1 (rel)", 1e-4, [&](std::string& detail) {
    const auto& r = feature_map();
    detail = "b kernel=" + std::to_string(r.b_kernel) + " explicit=" + std::to_string(r.b_explicit);
    return r.eigenvalues;
  });
  run("explicit phi: query distances (rel)", 1e-4, [&](std::string&) { return feature_map().distances; });

  if (!opts.quick) {
    run("linear kernel: Spearman vs XQDA distances", 0.999, [&](std::string& detail) {
      const auto r = checks::linear_consistency(seed);
      detail = "b kernel=" + std::to_string(r.b_kernel) + " input=" + std::to_string(r.b_input) +
               " eig rel err=" + std::to_string(r.eigenvalues);
      return r.spearman;
    }, true);
  }
  return out;
}

}  // namespace kxqda

#endif  // KXQDA_SELFTEST_HPP
