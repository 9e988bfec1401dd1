#include <gtest/gtest.h>

#include "kxqda/oracles.hpp"
#include "kxqda/selftest.hpp"
#include "kxqda/xqda.hpp"

using namespace kxqda;

namespace {

SymMatrix random_pd(Rng& rng, Index d) {
  const Matrix a = oracle::gaussian_matrix(rng, d, d + 4);
  return SymMatrix(a * a.transpose() / double(d) + 0.1 * Matrix::Identity(d, d));
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no kxqda::Error thrown";
  return ErrorKind::IoError;
}

}  // namespace

TEST(XqdaScatter, SinglePair) {
  const CrossViewDataset ds(ViewMatrix(Matrix(Vector{{1.0, 0.0}})), ViewMatrix(Matrix::Zero(2, 1)), {1}, {1});
  EXPECT_EQ(xqda_similar_scatter(ds).matrix(), (Matrix(2, 2) << 1, 0, 0, 0).finished());
  EXPECT_EQ(kind_of([&] { xqda_scatter_efficient(ds); }), ErrorKind::InsufficientPairs);
  EXPECT_EQ(kind_of([&] { xqda_scatter_bruteforce(ds); }), ErrorKind::InsufficientPairs);
}

TEST(XqdaScatter, TwoClassesOneSampleEach) {
  Matrix x(2, 2), z(2, 2);
  x << 1, 2, 3, -1;
  z << 0, 5, 1, 1;
  const CrossViewDataset ds(ViewMatrix(x), ViewMatrix(z), {1, 2}, {1, 2});
  const ScatterPair f = xqda_scatter_efficient(ds);
  // Hand enumeration of the four cross pairs.
  auto outer = [&](Index i, Index j) -> Matrix {
    const Vector v = x.col(i) - z.col(j);
    return v * v.transpose();
  };
  EXPECT_LE((f.sigma_s.matrix() - (outer(0, 0) + outer(1, 1)) / 2.0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((f.sigma_d.matrix() - (outer(0, 1) + outer(1, 0)) / 2.0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(f.n_s, 2);
  EXPECT_EQ(f.n_d, 2);
}

TEST(XqdaScatter, RandomMatchesBruteForce) {
  Rng rng(1, "test/xqda-scatter");
  const CrossViewDataset ds = oracle::random_dataset(rng, 30, 30, 8, 6);
  const ScatterPair f = xqda_scatter_efficient(ds);
  const ScatterPair b = xqda_scatter_bruteforce(ds);
  EXPECT_LE(rel_frobenius(f.sigma_s.matrix(), b.sigma_s.matrix()), 1e-10);
  EXPECT_LE(rel_frobenius(f.sigma_d.matrix(), b.sigma_d.matrix()), 1e-10);
  EXPECT_EQ(f.n_s, class_stats(ds).n_s);
  EXPECT_EQ(f.n_d, class_stats(ds).n_d);
}

TEST(XqdaScatter, HundredRandomInstances) { EXPECT_LE(checks::scatter_equivalence(100, 3), 1e-10); }

TEST(XqdaScatter, ClassMissingFromOneView) {
  Rng rng(2, "test/xqda-missing");
  const Matrix x = oracle::gaussian_matrix(rng, 3, 4);
  const Matrix z = oracle::gaussian_matrix(rng, 3, 5);
  const CrossViewDataset ds(ViewMatrix(x), ViewMatrix(z), {1, 1, 2, 3}, {1, 2, 2, 4, 4});
  const ScatterPair f = xqda_scatter_efficient(ds);
  const ScatterPair b = xqda_scatter_bruteforce(ds);
  EXPECT_LE(rel_frobenius(f.sigma_s.matrix(), b.sigma_s.matrix()), 1e-12);
  EXPECT_LE(rel_frobenius(f.sigma_d.matrix(), b.sigma_d.matrix()), 1e-12);
}

TEST(XqdaScatter, ZeroSamplesGiveZeroScatter) {
  const CrossViewDataset ds(ViewMatrix(Matrix::Zero(3, 4)), ViewMatrix(Matrix::Zero(3, 4)), {1, 1, 2, 2}, {1, 2, 1, 2});
  EXPECT_EQ(xqda_scatter_bruteforce(ds).sigma_s.matrix(), Matrix::Zero(3, 3));
  EXPECT_EQ(xqda_scatter_bruteforce(ds).sigma_d.matrix(), Matrix::Zero(3, 3));
  EXPECT_EQ(xqda_scatter_efficient(ds).sigma_d.matrix(), Matrix::Zero(3, 3));
}

TEST(XqdaScatter, BruteForceGuard) {
  const CrossViewDataset ds(ViewMatrix(Matrix::Zero(1, 1001)), ViewMatrix(Matrix::Zero(1, 1000)),
                            std::vector<int>(1001, 1), std::vector<int>(1000, 1));
  EXPECT_EQ(kind_of([&] { xqda_scatter_bruteforce(ds); }), ErrorKind::TooLarge);
}

TEST(XqdaFit, ProportionalScatters) {
  Rng rng(3, "test/xqda-prop");
  const SymMatrix s = random_pd(rng, 5);
  const XqdaModel m = xqda_fit(ScatterPair{s, s * 4.0, 10, 10});
  EXPECT_EQ(m.b, 5);
  for (Index k = 0; k < 5; ++k) EXPECT_NEAR(m.eigenvalues(k), 4.0, 1e-5);
  EXPECT_EQ(m.rule, DimensionRule::EigenvaluesAboveOne);
}

TEST(XqdaFit, EqualScattersFloorToOne) {
  Rng rng(4, "test/xqda-eq");
  const SymMatrix s = random_pd(rng, 5);
  const XqdaModel m = xqda_fit(ScatterPair{s, s, 10, 10});
  EXPECT_EQ(m.b, 1);
  EXPECT_EQ(m.rule, DimensionRule::FlooredToOne);
  for (Index k = 0; k < 5; ++k) EXPECT_NEAR(m.eigenvalues(k), 1.0, 1e-5);
}

TEST(XqdaFit, MaxBCaps) {
  Rng rng(5, "test/xqda-cap");
  const SymMatrix s = random_pd(rng, 5);
  XqdaOptions o;
  o.max_b = 2;
  const XqdaModel m = xqda_fit(ScatterPair{s, s * 4.0, 10, 10}, o);
  EXPECT_EQ(m.b, 2);
  EXPECT_EQ(m.w.cols(), 2);
  EXPECT_EQ(m.rule, DimensionRule::Capped);
}

TEST(XqdaFit, LeadingDirectionBeatsRandomProbes) {
  SynthConfig cfg;
  cfg.classes = 10;
  cfg.dim = 12;
  cfg.per_class_x = 3;
  cfg.per_class_z = 3;
  cfg.noise = 0.3;
  const CrossViewDataset ds = synth_crossview(cfg, 8);
  const ScatterPair sc = xqda_scatter_efficient(ds);
  const XqdaModel m = xqda_fit(ds);
  const double ridge = m.ridge;
  auto j = [&](const Vector& w) {
    return w.dot(sc.sigma_d.matrix() * w) / (w.dot(sc.sigma_s.matrix() * w) + ridge * w.squaredNorm());
  };
  const double best = j(m.w.col(0));
  EXPECT_NEAR(best, m.eigenvalues(0), 1e-8 * best);
  Rng rng(6, "test/xqda-probe");
  for (int t = 0; t < 50; ++t) EXPECT_GE(best, j(oracle::gaussian_vector(rng, 12).normalized()));
  for (Index k = 0; k + 1 < m.eigenvalues.size(); ++k) EXPECT_GE(m.eigenvalues(k), m.eigenvalues(k + 1));
  EXPECT_GT(m.eigenvalues.minCoeff(), 0.0);
}

TEST(XqdaFit, CoreIsPsd) {
  Rng rng(7, "test/xqda-core");
  for (int t = 0; t < 5; ++t) {
    const CrossViewDataset ds = oracle::random_dataset(rng, 25, 25, 6, 5);
    const XqdaModel m = xqda_fit(ds);
    EXPECT_GE(sym_eig(m.core).values.minCoeff(), -1e-12);
    EXPECT_EQ(m.core.dim(), m.b);
  }
}

TEST(XqdaFit, ReducedSolverMatchesDirect) {
  Rng rng(8, "test/xqda-reduced");
  const CrossViewDataset ds = oracle::random_dataset(rng, 10, 10, 40, 5);  // d > n + m
  XqdaOptions direct, reduced;
  direct.solver = XqdaSolver::Direct;
  reduced.solver = XqdaSolver::Reduced;
  const XqdaModel a = xqda_fit(ds, direct);
  const XqdaModel b = xqda_fit(ds, reduced);
  ASSERT_EQ(a.b, b.b);
  for (Index k = 0; k < a.b; ++k) EXPECT_NEAR(b.eigenvalues(k) / a.eigenvalues(k), 1.0, 1e-6);
  for (int t = 0; t < 10; ++t) {
    const Vector x = oracle::gaussian_vector(rng, 40), z = oracle::gaussian_vector(rng, 40);
    const double da = xqda_distance(a, x, z), db = xqda_distance(b, x, z);
    EXPECT_NEAR(db / da, 1.0, 1e-5);
  }
}

TEST(XqdaDistance, Examples) {
  XqdaModel m;
  m.w = Matrix::Zero(4, 1);
  m.w(0, 0) = 1.0;
  m.core = SymMatrix(Matrix::Constant(1, 1, 2.0));
  m.b = 1;
  m.embedding = m.w * psd_factor(m.core);
  EXPECT_NEAR(xqda_distance(m, Vector{{3.0, 0, 0, 0}}, Vector::Zero(4)), 18.0, 1e-12);
  EXPECT_EQ(xqda_distance(m, Vector::Ones(4), Vector::Ones(4)), 0.0);
  EXPECT_EQ(kind_of([&] { xqda_distance(m, Vector::Ones(3), Vector::Ones(3)); }), ErrorKind::ShapeError);
}

TEST(XqdaDistance, MatchesProjectedQuadraticForm) {
  Rng rng(9, "test/xqda-dist");
  const CrossViewDataset ds = oracle::random_dataset(rng, 20, 20, 5, 4);
  const XqdaModel m = xqda_fit(ds);
  for (int t = 0; t < 20; ++t) {
    const Vector x = oracle::gaussian_vector(rng, 5), z = oracle::gaussian_vector(rng, 5);
    const Vector p = m.w.transpose() * (x - z);
    const double direct = p.dot(m.core.matrix() * p);
    EXPECT_NEAR(xqda_distance(m, x, z), direct, 1e-12 * std::max(1.0, direct));
    EXPECT_GE(xqda_distance(m, x, z), 0.0);
  }
}
