#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kxqda/kernels.hpp"
#include "kxqda/oracles.hpp"

using namespace kxqda;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no kxqda::Error thrown";
  return ErrorKind::IoError;
}

CrossViewDataset from_points(const Matrix& x, const Matrix& z) {
  std::vector<int> lx(static_cast<std::size_t>(x.cols())), lz(static_cast<std::size_t>(z.cols()));
  std::iota(lx.begin(), lx.end(), 1);
  std::iota(lz.begin(), lz.end(), 1);
  if (lz.size() > lx.size()) std::fill(lz.begin() + static_cast<std::ptrdiff_t>(lx.size()), lz.end(), 1);
  return CrossViewDataset(ViewMatrix(x), ViewMatrix(z), lx, lz);
}

}  // namespace

TEST(KernelEval, Examples) {
  const Vector a{{1.0, 1.0}};
  EXPECT_EQ(kernel_eval(KernelSpec::rbf(0.7), a, a), 1.0);
  EXPECT_EQ(kernel_eval(KernelSpec::linear(), Vector{{1.0, 0.0}}, Vector{{0.0, 2.0}}), 0.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::polynomial(2, 1.0, 1.0), a, a), 9.0);
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::rbf(0.5), Vector{{0.0}}, Vector{{2.0}}), std::exp(-2.0));
  EXPECT_DOUBLE_EQ(kernel_eval(KernelSpec::polynomial(3, 0.5, 2.0), Vector{{1.0}}, Vector{{1.0}}), 2.5 * 2.5 * 2.5);
}

TEST(KernelEval, LengthMismatch) {
  EXPECT_EQ(kind_of([] { kernel_eval(KernelSpec::linear(), Vector::Ones(2), Vector::Ones(3)); }), ErrorKind::ShapeError);
}

TEST(KernelSpec, ParameterValidation) {
  EXPECT_EQ(kind_of([] { KernelSpec::rbf(0.0); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { KernelSpec::polynomial(0, 1, 1); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { KernelSpec::polynomial(2, -1, 1); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { KernelSpec::polynomial(2, 1, 0); }), ErrorKind::ConfigError);
}

TEST(KernelBlocks, LinearMatchesProducts) {
  Rng rng(1, "test/kb-linear");
  const Matrix x = oracle::gaussian_matrix(rng, 5, 4);
  const Matrix z = oracle::gaussian_matrix(rng, 5, 3);
  const KernelBlocks k = kernel_blocks(KernelSpec::linear(), from_points(x, z));
  EXPECT_LE((k.k_xx - x.transpose() * x).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((k.k_zz - z.transpose() * z).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((k.k_xz - x.transpose() * z).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(KernelBlocks, EntriesMatchKernelEvalAndTransposeIsExact) {
  Rng rng(2, "test/kb-all");
  const Matrix x = oracle::gaussian_matrix(rng, 3, 6);
  const Matrix z = oracle::gaussian_matrix(rng, 3, 5);
  const CrossViewDataset ds = from_points(x, z);
  for (const KernelSpec& spec : {KernelSpec::linear(), KernelSpec::rbf(0.3), KernelSpec::polynomial(3, 0.5, 0.7)}) {
    const KernelBlocks k = kernel_blocks(spec, ds);
    EXPECT_TRUE(k.k_zx == k.k_xz.transpose());
    EXPECT_TRUE(k.k_xx == k.k_xx.transpose());
    EXPECT_TRUE(k.k_zz == k.k_zz.transpose());
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 5; ++j) EXPECT_NEAR(k.k_xz(i, j), kernel_eval(spec, x.col(i), z.col(j)), 1e-12);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) EXPECT_NEAR(k.k_xx(i, j), kernel_eval(spec, x.col(i), x.col(j)), 1e-12);
  }
}

TEST(KernelBlocks, RbfDiagonalIsOne) {
  Rng rng(3, "test/kb-rbf");
  const KernelBlocks k =
      kernel_blocks(KernelSpec::rbf(2.0), from_points(oracle::gaussian_matrix(rng, 4, 5), oracle::gaussian_matrix(rng, 4, 6)));
  EXPECT_TRUE((k.k_xx.diagonal().array() == 1.0).all());
  EXPECT_TRUE((k.k_zz.diagonal().array() == 1.0).all());
}

TEST(KernelBlocks, FullGramIsPsd) {
  Rng rng(4, "test/kb-psd");
  for (const KernelSpec& spec : {KernelSpec::linear(), KernelSpec::rbf(0.5)}) {
    const KernelBlocks k =
        kernel_blocks(spec, from_points(oracle::gaussian_matrix(rng, 3, 8), oracle::gaussian_matrix(rng, 3, 7)));
    const Vector ev = sym_eig(SymMatrix(k.full())).values;
    EXPECT_GE(ev.minCoeff(), -1e-8 * ev.maxCoeff());
  }
}

TEST(KernelBlocks, PermutationEquivariance) {
  Rng rng(5, "test/kb-perm");
  const CrossViewDataset ds = oracle::random_dataset(rng, 7, 6, 3, 3);
  std::vector<Index> px(7), pz(6);
  std::iota(px.begin(), px.end(), Index{0});
  std::iota(pz.begin(), pz.end(), Index{0});
  rng.shuffle(px);
  rng.shuffle(pz);
  Matrix xp(3, 7), zp(3, 6);
  std::vector<int> lxp, lzp;
  for (Index i = 0; i < 7; ++i) {
    xp.col(i) = ds.x().sample(px[i]);
    lxp.push_back(ds.labels_x()[px[i]]);
  }
  for (Index j = 0; j < 6; ++j) {
    zp.col(j) = ds.z().sample(pz[j]);
    lzp.push_back(ds.labels_z()[pz[j]]);
  }
  const CrossViewDataset perm(ViewMatrix(xp), ViewMatrix(zp), lxp, lzp);
  const KernelSpec spec = KernelSpec::rbf(0.4);
  const KernelBlocks a = kernel_blocks(spec, ds);
  const KernelBlocks b = kernel_blocks(spec, perm);
  for (Index i = 0; i < 7; ++i) {
    for (Index k = 0; k < 7; ++k) EXPECT_DOUBLE_EQ(b.k_xx(i, k), a.k_xx(px[i], px[k]));
    for (Index j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(b.k_xz(i, j), a.k_xz(px[i], pz[j]));
  }
  for (Index j = 0; j < 6; ++j)
    for (Index k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(b.k_zz(j, k), a.k_zz(pz[j], pz[k]));
}

TEST(QueryColumns, TrainingSampleGivesItsGramColumn) {
  Rng rng(6, "test/qc");
  const CrossViewDataset ds = oracle::random_dataset(rng, 5, 4, 3, 3);
  const KernelSpec spec = KernelSpec::rbf(0.8);
  const Matrix full = kernel_blocks(spec, ds).full();
  for (Index i = 0; i < 5; ++i)
    EXPECT_LE((query_columns(spec, ds.x(), ds.z(), ds.x().sample(i)) - full.col(i)).cwiseAbs().maxCoeff(), 1e-15);
  for (Index j = 0; j < 4; ++j)
    EXPECT_LE((query_columns(spec, ds.x(), ds.z(), ds.z().sample(j)) - full.col(5 + j)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(QueryColumns, LinearIsJointTransposeTimesQuery) {
  Rng rng(7, "test/qc-lin");
  const CrossViewDataset ds = oracle::random_dataset(rng, 6, 5, 4, 3);
  const Vector q = oracle::gaussian_vector(rng, 4);
  const Vector expect = oracle::joint_samples(ds).transpose() * q;
  EXPECT_LE((query_columns(KernelSpec::linear(), ds.x(), ds.z(), q) - expect).cwiseAbs().maxCoeff(), 1e-13);
  const Matrix qs = oracle::gaussian_matrix(rng, 4, 3);
  const Matrix batch = query_column_batch(KernelSpec::linear(), ds.x(), ds.z(), qs);
  for (Index c = 0; c < 3; ++c)
    EXPECT_LE((batch.col(c) - query_columns(KernelSpec::linear(), ds.x(), ds.z(), qs.col(c))).cwiseAbs().maxCoeff(),
              1e-13);
}

TEST(QueryColumns, RbfDecaysMonotonically) {
  Rng rng(8, "test/qc-decay");
  const CrossViewDataset ds = oracle::random_dataset(rng, 4, 4, 2, 2);
  const Vector dir = Vector{{0.6, 0.8}};
  Vector prev = query_columns(KernelSpec::rbf(0.5), ds.x(), ds.z(), 10.0 * dir);
  for (double r : {20.0, 40.0, 80.0}) {
    const Vector cur = query_columns(KernelSpec::rbf(0.5), ds.x(), ds.z(), r * dir);
    EXPECT_TRUE((cur.array() <= prev.array()).all());
    prev = cur;
  }
  EXPECT_LE(prev.maxCoeff(), 1e-300);
}

TEST(QueryColumns, DimensionMismatch) {
  Rng rng(9, "test/qc-shape");
  const CrossViewDataset ds = oracle::random_dataset(rng, 4, 4, 3, 2);
  EXPECT_EQ(kind_of([&] { query_columns(KernelSpec::linear(), ds.x(), ds.z(), Vector::Ones(2)); }),
            ErrorKind::ShapeError);
}

TEST(Bandwidth, TwoPointsAtDistanceTwo) {
  const CrossViewDataset ds(ViewMatrix(Matrix::Zero(2, 1)), ViewMatrix(Matrix(Vector{{2.0, 0.0}})), {1}, {1});
  EXPECT_DOUBLE_EQ(rbf_bandwidth_median(ds), 1.0 / 8.0);
}

TEST(Bandwidth, AllEqualIsDegenerate) {
  const CrossViewDataset ds(ViewMatrix(Matrix::Ones(3, 4)), ViewMatrix(Matrix::Ones(3, 2)), {1, 1, 2, 2}, {1, 2});
  EXPECT_EQ(kind_of([&] { rbf_bandwidth_median(ds); }), ErrorKind::DegenerateBandwidth);
}

TEST(Bandwidth, DuplicatedDataKeepsGamma) {
  Rng rng(10, "test/bw-dup");
  const CrossViewDataset ds = oracle::random_dataset(rng, 40, 40, 5, 6);  // 3160 pairs: subsampled
  Matrix x2(5, 80), z2(5, 80);
  x2 << ds.x().samples(), ds.x().samples();
  z2 << ds.z().samples(), ds.z().samples();
  std::vector<int> lx2 = ds.labels_x(), lz2 = ds.labels_z();
  lx2.insert(lx2.end(), ds.labels_x().begin(), ds.labels_x().end());
  lz2.insert(lz2.end(), ds.labels_z().begin(), ds.labels_z().end());
  const CrossViewDataset dup(ViewMatrix(x2), ViewMatrix(z2), lx2, lz2);

  // Exact median over all distinct pairs of the original data.
  Matrix all(5, 80);
  all << ds.x().samples(), ds.z().samples();
  std::vector<double> dist;
  for (Index i = 0; i < 80; ++i)
    for (Index j = i + 1; j < 80; ++j) dist.push_back((all.col(i) - all.col(j)).norm());
  std::sort(dist.begin(), dist.end());
  const double med = 0.5 * (dist[dist.size() / 2 - 1] + dist[dist.size() / 2]);
  const double exact = 1.0 / (2.0 * med * med);

  // Sampled medians land within a few percent; duplicates add zero distances
  // for a small fraction of the sampled pairs.
  EXPECT_NEAR(rbf_bandwidth_median(ds, 1) / exact, 1.0, 0.08);
  EXPECT_NEAR(rbf_bandwidth_median(dup, 1) / exact, 1.0, 0.08);
  EXPECT_EQ(rbf_bandwidth_median(dup, 1), rbf_bandwidth_median(dup, 1));
}

TEST(KernelConfig, ParseAndResolve) {
  KernelConfig c = parse_kernel_spec("kernel=rbf gamma=0.5");
  EXPECT_EQ(c.family, KernelFamily::Rbf);
  ASSERT_TRUE(c.gamma.has_value());
  EXPECT_EQ(*c.gamma, 0.5);

  c = parse_kernel_spec("kernel=poly degree=2 offset=1 scale=auto");
  EXPECT_EQ(c.family, KernelFamily::Polynomial);
  EXPECT_EQ(c.degree, 2);
  EXPECT_EQ(c.offset, 1.0);
  EXPECT_FALSE(c.scale.has_value());
  SynthConfig sc;
  sc.classes = 4;
  sc.dim = 8;
  const CrossViewDataset ds = synth_crossview(sc, 1);
  EXPECT_DOUBLE_EQ(c.resolve(ds).scale, 1.0 / 8.0);

  EXPECT_EQ(parse_kernel_spec("kernel=linear").family, KernelFamily::Linear);
  EXPECT_EQ(parse_kernel_spec("rbf").family, KernelFamily::Rbf);
  EXPECT_GT(parse_kernel_spec("rbf").resolve(ds).gamma, 0.0);
  EXPECT_EQ(parse_kernel_spec(to_string(c)).degree, 2);

  EXPECT_EQ(kind_of([] { parse_kernel_spec("kernel=sigmoid"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_kernel_spec("kernel=rbf gamma=abc"); }), ErrorKind::ConfigError);
  EXPECT_EQ(kind_of([] { parse_kernel_spec("kernel=rbf colour=red"); }), ErrorKind::ConfigError);
}
