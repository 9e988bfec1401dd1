#ifndef KXQDA_KERNELS_HPP
#define KXQDA_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"
#include "kxqda/linalg.hpp"
#include "kxqda/rng.hpp"

namespace kxqda {

enum class KernelFamily { Linear, Rbf, Polynomial };

/// A fully resolved kernel:
///   linear      <a, b>
///   rbf         exp(-gamma ||a - b||^2)
///   polynomial  (scale <a, b> + offset)^degree
struct KernelSpec {
  KernelFamily family = KernelFamily::Linear;
  double gamma = 1.0;
  int degree = 2;
  double offset = 1.0;
  double scale = 1.0;

  static KernelSpec linear() { return {}; }

  static KernelSpec rbf(double gamma) {
    require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::ConfigError, "rbf gamma must be positive");
    KernelSpec k;
    k.family = KernelFamily::Rbf;
    k.gamma = gamma;
    return k;
  }

  static KernelSpec polynomial(int degree, double offset, double scale) {
    require(degree >= 1, ErrorKind::ConfigError, "polynomial degree must be >= 1");
    require(offset >= 0.0 && std::isfinite(offset), ErrorKind::ConfigError, "polynomial offset must be >= 0");
    require(scale > 0.0 && std::isfinite(scale), ErrorKind::ConfigError, "polynomial scale must be positive");
    KernelSpec k;
    k.family = KernelFamily::Polynomial;
    k.degree = degree;
    k.offset = offset;
    k.scale = scale;
    return k;
  }

  bool operator==(const KernelSpec&) const = default;
};

inline std::string to_string(const KernelSpec& k) {
  std::ostringstream ss;
  ss.precision(17);
  switch (k.family) {
    case KernelFamily::Linear: ss << "kernel=linear"; break;
    case KernelFamily::Rbf: ss << "kernel=rbf gamma=" << k.gamma; break;
    case KernelFamily::Polynomial:
      ss << "kernel=poly degree=" << k.degree << " offset=" << k.offset << " scale=" << k.scale;
      break;
  }
  return ss.str();
}

inline double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Vector>& a,
                          const Eigen::Ref<const Vector>& b) {
  require(a.size() == b.size(), ErrorKind::ShapeError,
          "kernel arguments differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  switch (k.family) {
    case KernelFamily::Linear: return a.dot(b);
    case KernelFamily::Rbf: return std::exp(-k.gamma * (a - b).squaredNorm());
    case KernelFamily::Polynomial: return std::pow(k.scale * a.dot(b) + k.offset, k.degree);
  }
  return 0.0;
}

/// Gram matrix between the columns of `a` and the columns of `b`.
/// Linear and polynomial kernels go through one matrix product; RBF uses
/// explicit differences so that k(a, a) is exactly 1.
inline Matrix gram(const KernelSpec& k, const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorKind::ShapeError, "gram: sample dimensions differ");
  switch (k.family) {
    case KernelFamily::Linear: return a.transpose() * b;
    case KernelFamily::Polynomial: {
      Matrix g = a.transpose() * b;
      return (k.scale * g.array() + k.offset).pow(k.degree).matrix();
    }
    case KernelFamily::Rbf: {
      Matrix g(a.cols(), b.cols());
      for (Index j = 0; j < b.cols(); ++j)
        g.col(j) = (-k.gamma * (a.colwise() - b.col(j)).colwise().squaredNorm().array()).exp().transpose();
      return g;
    }
  }
  return {};
}

/// Self Gram matrix; the upper triangle is mirrored so the result is
/// bit-exactly symmetric.
inline Matrix gram_self(const KernelSpec& k, const Matrix& a) {
  Matrix g = gram(k, a, a);
  g.triangularView<Eigen::StrictlyLower>() = g.transpose();
  return g;
}

/// The four blocks of the joint (n+m)x(n+m) kernel matrix, X samples first.
struct KernelBlocks {
  Matrix k_xx;  // n x n
  Matrix k_zz;  // m x m
  Matrix k_xz;  // n x m
  Matrix k_zx;  // m x n, always k_xz^T

  Index n() const { return k_xx.rows(); }
  Index m() const { return k_zz.rows(); }

  Matrix full() const {
    Matrix k(n() + m(), n() + m());
    k << k_xx, k_xz, k_zx, k_zz;
    return k;
  }
};

inline KernelBlocks kernel_blocks(const KernelSpec& k, const CrossViewDataset& ds) {
  KernelBlocks b;
  const Matrix& x = ds.x().samples();
  const Matrix& z = ds.z().samples();
  if (k.family == KernelFamily::Linear) {
    // One product for all four blocks.
    Matrix joint(ds.dim(), ds.n() + ds.m());
    joint << x, z;
    Matrix g = Matrix::Zero(joint.cols(), joint.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(joint.transpose());
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    b.k_xx = g.topLeftCorner(ds.n(), ds.n());
    b.k_zz = g.bottomRightCorner(ds.m(), ds.m());
    b.k_xz = g.topRightCorner(ds.n(), ds.m());
  } else {
    b.k_xx = gram_self(k, x);
    b.k_zz = gram_self(k, z);
    b.k_xz = gram(k, x, z);
  }
  b.k_zx = b.k_xz.transpose();
  return b;
}

/// Kernel values between a query and every training sample, X samples
/// first then Z samples (the coefficient order of the dual expansion).
inline Vector query_columns(const KernelSpec& k, const ViewMatrix& train_x, const ViewMatrix& train_z,
                            const Eigen::Ref<const Vector>& q) {
  require(q.size() == train_x.dim(), ErrorKind::ShapeError,
          "query has dimension " + std::to_string(q.size()) + ", training data " + std::to_string(train_x.dim()));
  Vector out(train_x.size() + train_z.size());
  out.head(train_x.size()) = gram(k, train_x.samples(), q).col(0);
  out.tail(train_z.size()) = gram(k, train_z.samples(), q).col(0);
  return out;
}

/// Kernel columns for a batch of queries stored column-wise; column j is the
/// kernel column of query j.
inline Matrix query_column_batch(const KernelSpec& k, const ViewMatrix& train_x, const ViewMatrix& train_z,
                            const Matrix& queries) {
  require(queries.rows() == train_x.dim(), ErrorKind::ShapeError, "query dimension mismatch");
  Matrix out(train_x.size() + train_z.size(), queries.cols());
  out.topRows(train_x.size()) = gram(k, train_x.samples(), queries);
  out.bottomRows(train_z.size()) = gram(k, train_z.samples(), queries);
  return out;
}

inline constexpr std::size_t kBandwidthPairCap = 2000;

/// Median heuristic: gamma = 1 / (2 median^2), median over pairwise
/// Euclidean distances of all samples (both views). All pairs are used when
/// there are at most 2000 of them, otherwise 2000 seeded random pairs.
inline double rbf_bandwidth_median(const CrossViewDataset& ds, std::uint64_t seed = 0) {
  Matrix all(ds.dim(), ds.n() + ds.m());
  all << ds.x().samples(), ds.z().samples();
  const auto total = static_cast<std::uint64_t>(all.cols());
  require(total >= 2, ErrorKind::DegenerateBandwidth, "need at least 2 samples for a bandwidth");

  std::vector<double> dist;
  const std::uint64_t pairs = total * (total - 1) / 2;
  if (pairs <= kBandwidthPairCap) {
    dist.reserve(static_cast<std::size_t>(pairs));
    for (Index i = 0; i < all.cols(); ++i)
      for (Index j = i + 1; j < all.cols(); ++j) dist.push_back((all.col(i) - all.col(j)).norm());
  } else {
    Rng rng(seed, "kernels/bandwidth");
    dist.reserve(kBandwidthPairCap);
    while (dist.size() < kBandwidthPairCap) {
      const auto i = static_cast<Index>(rng.below(total));
      const auto j = static_cast<Index>(rng.below(total));
      if (i != j) dist.push_back((all.col(i) - all.col(j)).norm());
    }
  }
  std::sort(dist.begin(), dist.end());
  const std::size_t h = dist.size() / 2;
  const double median = dist.size() % 2 ? dist[h] : 0.5 * (dist[h - 1] + dist[h]);
  require(median > 0.0, ErrorKind::DegenerateBandwidth, "median pairwise distance is zero");
  return 1.0 / (2.0 * median * median);
}

/// Kernel description as written by a user; unset parameters are resolved
/// against the training data (rbf gamma by the median heuristic,
/// polynomial scale as 1/d).
struct KernelConfig {
  KernelFamily family = KernelFamily::Linear;
  std::optional<double> gamma;
  int degree = 2;
  double offset = 1.0;
  std::optional<double> scale;

  KernelSpec resolve(const CrossViewDataset& train, std::uint64_t seed = 0) const {
    switch (family) {
      case KernelFamily::Linear: return KernelSpec::linear();
      case KernelFamily::Rbf: return KernelSpec::rbf(gamma ? *gamma : rbf_bandwidth_median(train, seed));
      case KernelFamily::Polynomial:
        return KernelSpec::polynomial(degree, offset, scale ? *scale : 1.0 / double(train.dim()));
    }
    return {};
  }
};

inline std::string to_string(const KernelConfig& k) {
  std::ostringstream ss;
  ss.precision(17);
  switch (k.family) {
    case KernelFamily::Linear: ss << "kernel=linear"; break;
    case KernelFamily::Rbf:
      ss << "kernel=rbf gamma=";
      if (k.gamma) ss << *k.gamma; else ss << "auto";
      break;
    case KernelFamily::Polynomial:
      ss << "kernel=poly degree=" << k.degree << " offset=" << k.offset << " scale=";
      if (k.scale) ss << *k.scale; else ss << "auto";
      break;
  }
  return ss.str();
}

/// Parses `kernel=rbf gamma=0.5`, `kernel=poly degree=2 offset=1 scale=auto`,
/// `kernel=linear`, or a bare family name (`rbf`, `poly`, `polynomial`, `linear`).
inline KernelConfig parse_kernel_spec(const std::string& text) {
  KernelConfig cfg;
  std::istringstream in(text);
  std::string tok;
  bool have_family = false;
  auto set_family = [&](const std::string& v) {
    if (v == "linear") cfg.family = KernelFamily::Linear;
    else if (v == "rbf") cfg.family = KernelFamily::Rbf;
    else if (v == "poly" || v == "polynomial") cfg.family = KernelFamily::Polynomial;
    else fail(ErrorKind::ConfigError, "unknown kernel family '" + v + "'");
    have_family = true;
  };
  auto number = [](const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == v.size() && !v.empty() && std::isfinite(out), ErrorKind::ConfigError,
            "kernel parameter " + key + " is not a number: '" + v + "'");
    return out;
  };
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      require(!have_family, ErrorKind::ConfigError, "unexpected kernel token '" + tok + "'");
      set_family(tok);
      continue;
    }
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "kernel") {
      set_family(val);
    } else if (key == "gamma") {
      if (val != "auto") cfg.gamma = number(key, val);
    } else if (key == "degree") {
      const double d = number(key, val);
      require(d >= 1 && d == std::floor(d), ErrorKind::ConfigError, "degree must be a positive integer");
      cfg.degree = static_cast<int>(d);
    } else if (key == "offset") {
      cfg.offset = number(key, val);
    } else if (key == "scale") {
      if (val != "auto") cfg.scale = number(key, val);
    } else {
      fail(ErrorKind::ConfigError, "unknown kernel parameter '" + key + "'");
    }
  }
  require(have_family, ErrorKind::ConfigError, "kernel family missing in '" + text + "'");
  if (cfg.gamma) require(*cfg.gamma > 0, ErrorKind::ConfigError, "gamma must be positive");
  if (cfg.scale) require(*cfg.scale > 0, ErrorKind::ConfigError, "scale must be positive");
  require(cfg.offset >= 0, ErrorKind::ConfigError, "offset must be >= 0");
  return cfg;
}

}  // namespace kxqda

#endif  // KXQDA_KERNELS_HPP
