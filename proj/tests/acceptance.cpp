// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "kxqda.hpp"

using namespace kxqda;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(const char* id, const char* title, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (secs > time_limit_s) {
    out.pass = false;
    out.detail += " [over time limit " + std::to_string(time_limit_s) + "s]";
  }
  g_failures += !out.pass;
  std::printf("%s %s %s: %s (%.2fs)\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double min_eigenvalue(const SymMatrix& s) {
  if (s.dim() == 0) return 0.0;
  return sym_eig(s).values.minCoeff();
}

struct MetricStats {
  double min_distance = 0.0;
  double max_self = 0.0;
  double min_core_eig = 0.0;
  double core_scale = 0.0;
};

const SymMatrix& core_of(const FittedModel& model) {
  return std::visit(
      [](const auto& m) -> const SymMatrix& {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KissmeModel>) return m.metric;
        else if constexpr (std::is_same_v<T, XqdaModel>) return m.core;
        else return m.gamma_plus;
      },
      model);
}

double model_distance(const FittedModel& model, const Vector& a, const Vector& b) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KissmeModel>) return kissme_distance(m, a, b);
        else if constexpr (std::is_same_v<T, XqdaModel>) return xqda_distance(m, a, b);
        else return kxqda_distance(m, a, b);
      },
      model);
}

MetricStats metric_stats(const FittedModel& model, Index d, Rng& rng, int queries) {
  MetricStats st;
  const SymMatrix& core = core_of(model);
  st.min_core_eig = min_eigenvalue(core);
  st.core_scale = core.dim() ? core.matrix().cwiseAbs().maxCoeff() : 0.0;
  const Matrix q = oracle::gaussian_matrix(rng, d, queries);
  const Matrix g = oracle::gaussian_matrix(rng, d, queries);
  st.min_distance = 0.0;
  for (Index i = 0; i < queries; ++i) {
    st.max_self = std::max(st.max_self, std::abs(model_distance(model, q.col(i), q.col(i))));
    for (Index j = 0; j < queries; ++j) st.min_distance = std::min(st.min_distance, model_distance(model, q.col(i), g.col(j)));
  }
  const Matrix dm = distance_matrix(model, ViewMatrix(q), std::vector<int>(std::size_t(queries), 1), ViewMatrix(g),
                                    std::vector<int>(std::size_t(queries), 1))
                        .values;
  st.min_distance = std::min(st.min_distance, dm.minCoeff());
  return st;
}

bool metric_ok(const MetricStats& s) {
  return s.min_distance >= -1e-12 && s.max_self == 0.0 && s.min_core_eig >= -1e-12 * std::max(1.0, s.core_scale);
}

CrossViewDataset a6_data(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.classes = 40;
  cfg.dim = 20;
  cfg.warp = Warp::Quadratic;
  cfg.warp_strength = 0.3;
  cfg.per_class_x = 1;
  cfg.per_class_z = 1;
  cfg.noise = 0.2;
  return synth_crossview(cfg, seed);
}

bool same_report(const EvalReport& a, const EvalReport& b) {
  if (a.trials.size() != b.trials.size() || !(a.mean == b.mean)) return false;
  for (std::size_t i = 0; i < a.trials.size(); ++i)
    if (a.trials[i].ok != b.trials[i].ok || !(a.trials[i].cmc == b.trials[i].cmc) || a.trials[i].b != b.trials[i].b)
      return false;
  return true;
}

bool monotone(const CmcCurve& c) {
  for (std::size_t r = 1; r < c.accuracy.size(); ++r)
    if (c.accuracy[r] < c.accuracy[r - 1]) return false;
  return true;
}

}  // namespace

int main() {
  criterion("A1", "scatter closed form vs pair enumeration", 10.0, [] {
    const double err = checks::scatter_equivalence(100, 7);
    return Outcome{err <= 1e-10, fmt("worst rel. Frobenius error %.3e (tol 1e-10)", err)};
  });

  criterion("A2", "primal-dual scatter identities, linear kernel", 10.0, [] {
    const auto e = checks::primal_dual(100, 7);
    return Outcome{e.similar <= 1e-9 && e.dissimilar <= 1e-9,
                   fmt("worst rel. error S %.3e, D %.3e (tol 1e-9)", e.similar, e.dissimilar)};
  });

  criterion("A3", "explicit degree-2 feature map vs polynomial kernel", 30.0, [] {
    const auto e = checks::explicit_feature_map(7);
    return Outcome{e.eigenvalues <= 1e-4 && e.distances <= 1e-4,
                   fmt("eigenvalues %.3e, distances %.3e (tol 1e-4)", e.eigenvalues, e.distances)};
  });

  criterion("A4", "linear kernel matches input-space XQDA", 10.0, [] {
    const auto e = checks::linear_consistency(7);
    return Outcome{e.spearman >= 0.999, fmt("Spearman %.6f (min 0.999), eigenvalue rel. error %.3e", e.spearman,
                                            e.eigenvalues)};
  });

  criterion("A5", "distances non-negative, d(q,q) = 0, PSD core", 60.0, [] {
    Rng rng(7, "acceptance/a5");
    MetricStats worst{0.0, 0.0, 0.0, 1.0};
    int bad = 0;
    std::string first_error;
    for (int draw = 0; draw < 20; ++draw) {
      const Index n = 10 + Index(rng.below(31));
      const Index m = 10 + Index(rng.below(31));
      const Index d = 2 + Index(rng.below(14));
      const int c = 2 + int(rng.below(5));
      const CrossViewDataset ds = oracle::random_dataset(rng, n, m, d, c);
      for (Method method : {Method::Kissme, Method::Xqda, Method::Kxqda}) {
        ModelConfig mc;
        mc.method = method;
        mc.kernel.family = draw % 3 == 0 ? KernelFamily::Linear : draw % 3 == 1 ? KernelFamily::Rbf
                                                                                  : KernelFamily::Polynomial;
        try {
          const FittedModel model = fit_model(ds, mc, derive_seed(7, "acceptance/a5-fit", std::uint64_t(draw)));
          const MetricStats s = metric_stats(model, d, rng, 15);
          worst.min_distance = std::min(worst.min_distance, s.min_distance);
          worst.max_self = std::max(worst.max_self, s.max_self);
          worst.min_core_eig = std::min(worst.min_core_eig, s.min_core_eig / std::max(1.0, s.core_scale));
          bad += !metric_ok(s);
        } catch (const Error& e) {
          ++bad;
          if (first_error.empty()) first_error = " first error: " + std::string(e.what());
        }
      }
    }
    return Outcome{bad == 0, "60 fits, violations " + std::to_string(bad) +
                                 fmt(", min distance %.3e, max |d(q,q)| %.3e", worst.min_distance, worst.max_self) +
                                 fmt(", min core eigenvalue (scaled) %.3e", worst.min_core_eig) + first_error};
  });

  criterion("A6", "k-XQDA(RBF) beats XQDA on quadratic cross-view warp", 120.0, [] {
    const CrossViewDataset ds = a6_data(1);
    ProtocolConfig pc;
    pc.trials = 10;
    pc.seed = 1;
    ModelConfig xq;
    xq.method = Method::Xqda;
    ModelConfig kx;
    kx.method = Method::Kxqda;
    kx.kernel.family = KernelFamily::Rbf;
    const EvalReport rx = run_protocol(ds, xq, pc);
    const EvalReport rk = run_protocol(ds, kx, pc);
    const double ax = rx.mean.at(1), ak = rk.mean.at(1);
    const bool ok = rx.failed() == 0 && rk.failed() == 0 && ax >= 0.3 && ax <= 0.8 && ak >= ax + 0.05;
    return Outcome{ok, fmt("rank-1 XQDA %.3f (want 0.3..0.8), k-XQDA %.3f", ax, ak) +
                           fmt(" (want >= XQDA + 0.05); failed trials %.0f/%.0f", double(rx.failed()),
                               double(rk.failed()))};
  });

  criterion("A7", "k-XQDA faster than XQDA at d=20000, n+m=200", 300.0, [] {
    const BenchCell cell = bench_cell(20000, 200, 5, 0);
    if (!cell.xqda_error.empty() || !cell.kxqda_error.empty())
      return Outcome{false, "fit failed: " + cell.xqda_error + " " + cell.kxqda_error};
    const double tx = cell.xqda_median(), tk = cell.kxqda_median();
    return Outcome{tk < tx, fmt("median XQDA %.3fs, k-XQDA %.3fs", tx, tk)};
  });

  criterion("A8", "reproducible protocol, monotone CMC, zero-noise rank-1", 120.0, [] {
    SynthConfig cfg;
    cfg.classes = 20;
    cfg.dim = 10;
    cfg.per_class_x = 2;
    cfg.per_class_z = 2;
    cfg.warp = Warp::Affine;
    cfg.noise = 0.3;
    const CrossViewDataset ds = synth_crossview(cfg, 11);
    ProtocolConfig pc;
    pc.trials = 5;
    pc.seed = 11;
    bool reproducible = true, mono = true;
    for (Method method : {Method::Kissme, Method::Xqda, Method::Kxqda}) {
      ModelConfig mc;
      mc.method = method;
      mc.kernel.family = KernelFamily::Rbf;
      const EvalReport a = run_protocol(ds, mc, pc);
      const EvalReport b = run_protocol(ds, mc, pc);
      reproducible = reproducible && a.failed() == 0 && same_report(a, b);
      mono = mono && monotone(a.mean);
      for (const auto& t : a.trials) mono = mono && monotone(t.cmc);
    }
    SynthConfig clean = cfg;
    clean.warp = Warp::None;
    clean.noise = 0.0;
    ModelConfig lin;
    lin.method = Method::Kxqda;
    const EvalReport z = run_protocol(synth_crossview(clean, 12), lin, pc);
    const double r1 = z.failed() == 0 ? z.mean.at(1) : 0.0;
    return Outcome{reproducible && mono && r1 == 1.0,
                   std::string("bit-identical reruns ") + (reproducible ? "yes" : "no") + ", monotone " +
                       (mono ? "yes" : "no") + fmt(", zero-noise rank-1 %.3f", r1)};
  });

  criterion("A9", "small sample size, d=5000, n+m=60", 120.0, [] {
    const CrossViewDataset ds = bench_dataset(5000, 60, 3);
    const FittedModel km = kxqda_fit(ds, KernelSpec::linear());
    Rng rng(3, "acceptance/a9");
    const MetricStats s = metric_stats(km, ds.dim(), rng, 10);
    std::string xqda_state;
    bool xqda_ok = true;
    try {
      const XqdaModel xm = xqda_fit(ds);
      xqda_state = "XQDA b=" + std::to_string(xm.b);
    } catch (const Error& e) {
      xqda_ok = e.kind() == ErrorKind::SingularDenominator;
      xqda_state = "XQDA raised " + std::string(to_string(e.kind()));
    }
    return Outcome{metric_ok(s) && xqda_ok,
                   "k-XQDA b=" + std::to_string(subspace_dim(km)) +
                       fmt(", min distance %.3e, max |d(q,q)| %.3e; ", s.min_distance, s.max_self) + xqda_state};
  });

  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
