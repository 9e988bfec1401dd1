#ifndef KXQDA_DATASET_HPP
#define KXQDA_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "kxqda/error.hpp"
#include "kxqda/linalg.hpp"
#include "kxqda/rng.hpp"

namespace kxqda {

/// Samples of one camera view, stored column-wise (d x count).
class ViewMatrix {
 public:
  ViewMatrix() = default;

  explicit ViewMatrix(Matrix samples) : samples_(std::move(samples)) {
    require(samples_.rows() >= 1, ErrorKind::ShapeError, "view dimension must be positive");
    require(samples_.allFinite(), ErrorKind::ParseError, "view contains non-finite values");
  }

  Index dim() const noexcept { return samples_.rows(); }
  Index size() const noexcept { return samples_.cols(); }
  const Matrix& samples() const noexcept { return samples_; }
  auto sample(Index i) const { return samples_.col(i); }

  bool operator==(const ViewMatrix& o) const {
    return samples_.rows() == o.samples_.rows() && samples_.cols() == o.samples_.cols() &&
           samples_ == o.samples_;
  }

 private:
  Matrix samples_;
};

/// Two views with 1-based identity labels. Identities seen in either view
/// must cover 1..c without gaps; an identity may be absent from one view
/// (gallery-only distractors have no X samples).
class CrossViewDataset {
 public:
  CrossViewDataset() = default;

  CrossViewDataset(ViewMatrix x, ViewMatrix z, std::vector<int> labels_x, std::vector<int> labels_z)
      : x_(std::move(x)), z_(std::move(z)), labels_x_(std::move(labels_x)), labels_z_(std::move(labels_z)) {
    require(x_.dim() == z_.dim(), ErrorKind::ShapeError,
            "view dimensions differ: " + std::to_string(x_.dim()) + " vs " + std::to_string(z_.dim()));
    require(static_cast<Index>(labels_x_.size()) == x_.size(), ErrorKind::ShapeError,
            "label count does not match X sample count");
    require(static_cast<Index>(labels_z_.size()) == z_.size(), ErrorKind::ShapeError,
            "label count does not match Z sample count");
    std::set<int> seen;
    for (const auto* labels : {&labels_x_, &labels_z_}) {
      for (int y : *labels) {
        require(y >= 1, ErrorKind::LabelError, "labels are 1-based, got " + std::to_string(y));
        seen.insert(y);
      }
    }
    class_count_ = seen.empty() ? 0 : *seen.rbegin();
    require(static_cast<int>(seen.size()) == class_count_, ErrorKind::LabelError,
            "labels must be contiguous 1..c");
  }

  const ViewMatrix& x() const noexcept { return x_; }
  const ViewMatrix& z() const noexcept { return z_; }
  const std::vector<int>& labels_x() const noexcept { return labels_x_; }
  const std::vector<int>& labels_z() const noexcept { return labels_z_; }
  int class_count() const noexcept { return class_count_; }
  Index n() const noexcept { return x_.size(); }
  Index m() const noexcept { return z_.size(); }
  Index dim() const noexcept { return x_.dim(); }

  bool operator==(const CrossViewDataset& o) const = default;

 private:
  ViewMatrix x_;
  ViewMatrix z_;
  std::vector<int> labels_x_;
  std::vector<int> labels_z_;
  int class_count_ = 0;
};

struct ClassStats {
  std::vector<Index> per_class_x;  // n_k, index k-1
  std::vector<Index> per_class_z;  // m_k
  Index n_s = 0;                   // same-identity cross-view pairs
  Index n_d = 0;                   // different-identity cross-view pairs
  std::vector<int> one_view_classes;  // identities missing from a view (warning only)
};

inline ClassStats class_stats(const CrossViewDataset& ds) {
  ClassStats st;
  const auto c = static_cast<std::size_t>(ds.class_count());
  st.per_class_x.assign(c, 0);
  st.per_class_z.assign(c, 0);
  for (int y : ds.labels_x()) ++st.per_class_x[y - 1];
  for (int y : ds.labels_z()) ++st.per_class_z[y - 1];
  for (std::size_t k = 0; k < c; ++k) {
    st.n_s += st.per_class_x[k] * st.per_class_z[k];
    if (st.per_class_x[k] == 0 || st.per_class_z[k] == 0) st.one_view_classes.push_back(static_cast<int>(k + 1));
  }
  st.n_d = ds.n() * ds.m() - st.n_s;
  return st;
}

/// Keeps the samples whose label maps to a new label and renames them.
/// `relabel[old - 1]` is the new label, or 0 to drop.
inline CrossViewDataset relabel_subset(const CrossViewDataset& ds, const std::vector<int>& relabel) {
  auto pick = [&](const ViewMatrix& view, const std::vector<int>& labels, std::vector<int>& out_labels) {
    std::vector<Index> cols;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int mapped = relabel[labels[i] - 1];
      if (mapped > 0) {
        cols.push_back(static_cast<Index>(i));
        out_labels.push_back(mapped);
      }
    }
    Matrix out(view.dim(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = view.sample(cols[k]);
    return ViewMatrix(std::move(out));
  };
  std::vector<int> lx, lz;
  ViewMatrix x = pick(ds.x(), ds.labels_x(), lx);
  ViewMatrix z = pick(ds.z(), ds.labels_z(), lz);
  return CrossViewDataset(std::move(x), std::move(z), std::move(lx), std::move(lz));
}

// ---------------------------------------------------------------------------
// Synthetic cross-view data

enum class Warp { None, Affine, Quadratic };

inline std::string to_string(Warp w) {
  switch (w) {
    case Warp::None: return "none";
    case Warp::Affine: return "affine";
    case Warp::Quadratic: return "quadratic";
  }
  return "none";
}

inline Warp parse_warp(const std::string& s) {
  if (s == "none") return Warp::None;
  if (s == "affine") return Warp::Affine;
  if (s == "quadratic") return Warp::Quadratic;
  fail(ErrorKind::ConfigError, "unknown warp '" + s + "' (expected none|affine|quadratic)");
}

struct SynthConfig {
  int classes = 40;
  int per_class_x = 1;
  int per_class_z = 1;
  int dim = 20;
  Warp warp = Warp::None;
  double noise = 0.1;
  double warp_strength = 1.0;
  int distractors = 0;  // extra identities present only in view Z
};

/// Class means are standard normal. A sample of identity k in either view is
/// mean_k + noise * eps; view Z then passes through the warp:
///   affine:    t -> (I + s G / sqrt(d)) t + s g / 2
///   quadratic: t -> t + s t^2 (elementwise)
inline CrossViewDataset synth_crossview(const SynthConfig& cfg, std::uint64_t seed) {
  require(cfg.classes >= 2, ErrorKind::ConfigError, "classes must be >= 2");
  require(cfg.dim >= 2, ErrorKind::ConfigError, "dim must be >= 2");
  require(cfg.per_class_x >= 1 && cfg.per_class_z >= 1, ErrorKind::ConfigError,
          "per-class sample counts must be >= 1");
  require(cfg.noise >= 0.0 && std::isfinite(cfg.noise), ErrorKind::ConfigError, "noise must be >= 0");
  require(std::isfinite(cfg.warp_strength), ErrorKind::ConfigError, "warp strength must be finite");
  require(cfg.distractors >= 0, ErrorKind::ConfigError, "distractors must be >= 0");

  const Index d = cfg.dim;
  const int total = cfg.classes + cfg.distractors;
  Rng mean_rng(seed, "synth/means");
  Matrix means(d, total);
  for (Index k = 0; k < total; ++k)
    for (Index r = 0; r < d; ++r) means(r, k) = mean_rng.normal();

  Matrix affine_a = Matrix::Identity(d, d);
  Vector affine_b = Vector::Zero(d);
  if (cfg.warp == Warp::Affine) {
    Rng warp_rng(seed, "synth/warp");
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c) affine_a(r, c) += cfg.warp_strength * warp_rng.normal() / std::sqrt(double(d));
    for (Index r = 0; r < d; ++r) affine_b(r) = 0.5 * cfg.warp_strength * warp_rng.normal();
  }
  auto warp = [&](Vector t) -> Vector {
    switch (cfg.warp) {
      case Warp::None: return t;
      case Warp::Affine: return affine_a * t + affine_b;
      case Warp::Quadratic: return t + cfg.warp_strength * t.cwiseAbs2();
    }
    return t;
  };

  Rng x_rng(seed, "synth/x");
  Rng z_rng(seed, "synth/z");
  Matrix x(d, Index(cfg.classes) * cfg.per_class_x);
  Matrix z(d, Index(total) * cfg.per_class_z);
  std::vector<int> lx, lz;
  Index col = 0;
  for (int k = 0; k < cfg.classes; ++k) {
    for (int s = 0; s < cfg.per_class_x; ++s, ++col) {
      for (Index r = 0; r < d; ++r) x(r, col) = means(r, k) + cfg.noise * x_rng.normal();
      lx.push_back(k + 1);
    }
  }
  col = 0;
  for (int k = 0; k < total; ++k) {
    for (int s = 0; s < cfg.per_class_z; ++s, ++col) {
      Vector t(d);
      for (Index r = 0; r < d; ++r) t(r) = means(r, k) + cfg.noise * z_rng.normal();
      z.col(col) = warp(std::move(t));
      lz.push_back(k + 1);
    }
  }
  return CrossViewDataset(ViewMatrix(std::move(x)), ViewMatrix(std::move(z)), std::move(lx), std::move(lz));
}

// ---------------------------------------------------------------------------
// Half split by identity

struct Split {
  CrossViewDataset train;
  CrossViewDataset test;
  std::vector<int> train_ids;  // original labels, ascending
  std::vector<int> test_ids;   // original labels, ascending (includes gallery-only ids)
};

/// Identities with at least one X sample are shuffled and floor(c/2) of them
/// go to training; the rest, together with every gallery-only identity, form
/// the test half. Both halves are relabelled 1..k in ascending original id.
inline Split split_protocol(const CrossViewDataset& ds, std::uint64_t trial_seed) {
  const ClassStats st = class_stats(ds);
  std::vector<int> pool, gallery_only;
  for (int k = 1; k <= ds.class_count(); ++k)
    (st.per_class_x[k - 1] > 0 ? pool : gallery_only).push_back(k);
  require(pool.size() >= 2, ErrorKind::ConfigError, "split needs at least 2 query identities");

  Rng rng(trial_seed);
  rng.shuffle(pool);
  const std::size_t n_train = pool.size() / 2;

  Split out;
  out.train_ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_ids.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
  out.test_ids.insert(out.test_ids.end(), gallery_only.begin(), gallery_only.end());
  std::sort(out.train_ids.begin(), out.train_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());

  auto build = [&](const std::vector<int>& ids) {
    std::vector<int> relabel(static_cast<std::size_t>(ds.class_count()), 0);
    for (std::size_t i = 0; i < ids.size(); ++i) relabel[ids[i] - 1] = static_cast<int>(i + 1);
    return relabel_subset(ds, relabel);
  };
  out.train = build(out.train_ids);
  out.test = build(out.test_ids);
  return out;
}

}  // namespace kxqda

#endif  // KXQDA_DATASET_HPP
