#ifndef KXQDA_EVAL_HPP
#define KXQDA_EVAL_HPP

// Re-identification evaluation: query x gallery distance matrices, CMC
// curves and the repeated half-split protocol.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/kernels.hpp"
#include "kxqda/kissme.hpp"
#include "kxqda/rng.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda {

struct DistanceMatrix {
  Matrix values;  // queries x gallery
  std::vector<int> query_labels;
  std::vector<int> gallery_labels;
};

struct CmcCurve {
  std::vector<double> accuracy;  // accuracy[r - 1] = rank-r accuracy
  Index evaluated = 0;           // queries whose identity is in the gallery
  Index excluded = 0;            // queries without a gallery match

  /// Rank-r accuracy; ranks past the end of the curve saturate.
  double at(std::size_t rank) const {
    if (accuracy.empty()) return 0.0;
    return accuracy[std::min(rank, accuracy.size()) - 1];
  }

  bool operator==(const CmcCurve&) const = default;
};

/// Rank of the best same-identity gallery entry for every query; gallery
/// entries are ordered by distance with ties kept in gallery index order.
inline CmcCurve cmc(const DistanceMatrix& dm) {
  const Index nq = dm.values.rows();
  const Index ng = dm.values.cols();
  require(nq > 0 && ng > 0, ErrorKind::EmptyEval, "distance matrix is empty");
  require(static_cast<Index>(dm.query_labels.size()) == nq && static_cast<Index>(dm.gallery_labels.size()) == ng,
          ErrorKind::ShapeError, "label counts do not match the distance matrix");

  CmcCurve curve;
  std::vector<Index> hits(static_cast<std::size_t>(ng), 0);
  std::vector<Index> order(static_cast<std::size_t>(ng));
  for (Index q = 0; q < nq; ++q) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return dm.values(q, a) < dm.values(q, b); });
    const int target = dm.query_labels[q];
    const auto it = std::find_if(order.begin(), order.end(), [&](Index g) { return dm.gallery_labels[g] == target; });
    if (it == order.end()) {
      ++curve.excluded;
      continue;
    }
    ++curve.evaluated;
    ++hits[static_cast<std::size_t>(it - order.begin())];
  }
  require(curve.evaluated > 0, ErrorKind::EmptyEval, "no query has a match in the gallery");
  curve.accuracy.resize(static_cast<std::size_t>(ng));
  Index running = 0;
  for (std::size_t r = 0; r < hits.size(); ++r) {
    running += hits[r];
    curve.accuracy[r] = double(running) / double(curve.evaluated);
  }
  return curve;
}

enum class MultishotPolicy { Min, Mean };

inline MultishotPolicy parse_multishot(const std::string& s) {
  if (s == "min") return MultishotPolicy::Min;
  if (s == "mean") return MultishotPolicy::Mean;
  fail(ErrorKind::ConfigError, "unknown multi-shot policy '" + s + "' (expected min|mean)");
}

/// One column per gallery identity (ascending label) holding the min or mean
/// distance over that identity's gallery images.
inline DistanceMatrix multishot_reduce(const DistanceMatrix& dm, MultishotPolicy policy = MultishotPolicy::Min) {
  std::map<int, std::vector<Index>> columns;
  for (std::size_t g = 0; g < dm.gallery_labels.size(); ++g)
    columns[dm.gallery_labels[g]].push_back(static_cast<Index>(g));
  DistanceMatrix out;
  out.query_labels = dm.query_labels;
  out.values.resize(dm.values.rows(), static_cast<Index>(columns.size()));
  Index c = 0;
  for (const auto& [label, cols] : columns) {
    out.gallery_labels.push_back(label);
    for (Index q = 0; q < dm.values.rows(); ++q) {
      double acc = policy == MultishotPolicy::Min ? dm.values(q, cols[0]) : 0.0;
      for (Index g : cols)
        acc = policy == MultishotPolicy::Min ? std::min(acc, dm.values(q, g)) : acc + dm.values(q, g);
      out.values(q, c) = policy == MultishotPolicy::Min ? acc : acc / double(cols.size());
    }
    ++c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model dispatch

enum class Method { Kissme, Xqda, Kxqda };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Kissme: return "kissme";
    case Method::Xqda: return "xqda";
    case Method::Kxqda: return "kxqda";
  }
  return "";
}

inline Method parse_method(const std::string& s) {
  if (s == "kissme") return Method::Kissme;
  if (s == "xqda") return Method::Xqda;
  if (s == "kxqda") return Method::Kxqda;
  fail(ErrorKind::ConfigError, "unknown method '" + s + "' (expected kissme|xqda|kxqda)");
}

struct ModelConfig {
  Method method = Method::Xqda;
  KernelConfig kernel;
  double lambda = kDefaultRidge;
  std::optional<Index> max_b;
  std::optional<int> pca_dim;  // KISSME only
  bool kissme_normalize = true;
};

using FittedModel = std::variant<KissmeModel, XqdaModel, KxqdaModel>;

inline FittedModel fit_model(const CrossViewDataset& train, const ModelConfig& cfg, std::uint64_t seed = 0) {
  switch (cfg.method) {
    case Method::Kissme:
      return kissme_train(train, KissmeOptions{cfg.kissme_normalize, cfg.pca_dim, cfg.lambda});
    case Method::Xqda:
      return xqda_fit(train, XqdaOptions{cfg.lambda, cfg.max_b, XqdaSolver::Auto});
    case Method::Kxqda:
      return kxqda_fit(train, cfg.kernel.resolve(train, seed), KxqdaOptions{cfg.lambda, cfg.max_b});
  }
  fail(ErrorKind::ConfigError, "unknown method");
}

/// Column j of the result is the metric embedding of sample j.
inline Matrix embed(const FittedModel& model, const Matrix& samples) {
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KxqdaModel>) {
          return kxqda_embed(m, samples);
        } else {
          require(samples.rows() == m.dim(), ErrorKind::ShapeError, "sample dimension does not match the model");
          return m.embedding.transpose() * samples;
        }
      },
      model);
}

/// b for the subspace methods, the metric rank for KISSME.
inline Index subspace_dim(const FittedModel& model) {
  return std::visit(
      [](const auto& m) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, KissmeModel>) return m.embedding.cols();
        else return m.b;
      },
      model);
}

/// Pairwise squared distances between embedded queries and gallery entries.
inline Matrix embedded_distances(const Matrix& eq, const Matrix& eg) {
  Matrix out(eq.cols(), eg.cols());
  for (Index j = 0; j < eg.cols(); ++j)
    out.col(j) = (eq.colwise() - eg.col(j)).colwise().squaredNorm().transpose();
  return out;
}

inline DistanceMatrix distance_matrix(const FittedModel& model, const ViewMatrix& queries,
                                      const std::vector<int>& query_labels, const ViewMatrix& gallery,
                                      const std::vector<int>& gallery_labels) {
  return {embedded_distances(embed(model, queries.samples()), embed(model, gallery.samples())), query_labels,
          gallery_labels};
}

// ---------------------------------------------------------------------------
// Repeated half-split protocol

struct ProtocolConfig {
  int trials = 10;
  std::uint64_t seed = 0;
  bool swap_views = false;  // default: X queries, Z gallery
  MultishotPolicy multishot = MultishotPolicy::Min;
};

struct TrialResult {
  int index = 0;
  bool ok = false;
  std::string error;
  CmcCurve cmc;
  Index b = 0;
  double fit_seconds = 0.0;
  double distance_seconds = 0.0;
  double cmc_seconds = 0.0;
  std::optional<ErrorKind> error_kind;
  std::string kernel;  // resolved kernel of a k-XQDA trial
};

struct EvalReport {
  std::vector<TrialResult> trials;
  CmcCurve mean;  // per-rank mean over successful trials
  ModelConfig model;
  ProtocolConfig protocol;

  Index failed() const {
    return std::count_if(trials.begin(), trials.end(), [](const TrialResult& t) { return !t.ok; });
  }
};

/// Per-rank arithmetic mean; shorter curves are extended with their last value.
inline CmcCurve mean_curve(const std::vector<const CmcCurve*>& curves) {
  CmcCurve mean;
  if (curves.empty()) return mean;
  std::size_t len = 0;
  for (const auto* c : curves) len = std::max(len, c->accuracy.size());
  mean.accuracy.assign(len, 0.0);
  for (const auto* c : curves) {
    for (std::size_t r = 0; r < len; ++r) mean.accuracy[r] += c->at(r + 1);
    mean.evaluated += c->evaluated;
    mean.excluded += c->excluded;
  }
  for (double& v : mean.accuracy) v /= double(curves.size());
  return mean;
}

inline EvalReport run_protocol(const CrossViewDataset& ds, const ModelConfig& model_cfg,
                               const ProtocolConfig& cfg = {}) {
  require(ds.class_count() >= 4, ErrorKind::ConfigError, "protocol needs at least 4 identities");
  require(cfg.trials >= 1, ErrorKind::ConfigError, "trials must be >= 1");
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  EvalReport report;
  report.model = model_cfg;
  report.protocol = cfg;
  for (int t = 0; t < cfg.trials; ++t) {
    TrialResult trial;
    trial.index = t;
    try {
      const Split split = split_protocol(ds, derive_seed(cfg.seed, "protocol/split", std::uint64_t(t)));
      const auto t0 = clock::now();
      const FittedModel model = fit_model(split.train, model_cfg, derive_seed(cfg.seed, "protocol/fit", std::uint64_t(t)));
      const auto t1 = clock::now();
      const CrossViewDataset& test = split.test;
      DistanceMatrix dm = cfg.swap_views
                              ? distance_matrix(model, test.z(), test.labels_z(), test.x(), test.labels_x())
                              : distance_matrix(model, test.x(), test.labels_x(), test.z(), test.labels_z());
      const auto t2 = clock::now();
      trial.cmc = cmc(multishot_reduce(dm, cfg.multishot));
      const auto t3 = clock::now();
      trial.b = subspace_dim(model);
      if (const auto* km = std::get_if<KxqdaModel>(&model)) trial.kernel = to_string(km->kernel);
      trial.fit_seconds = seconds(t0, t1);
      trial.distance_seconds = seconds(t1, t2);
      trial.cmc_seconds = seconds(t2, t3);
      trial.ok = true;
    } catch (const Error& e) {
      trial.error = e.what();
      trial.error_kind = e.kind();
    }
    report.trials.push_back(std::move(trial));
  }
  std::vector<const CmcCurve*> ok;
  for (const auto& t : report.trials)
    if (t.ok) ok.push_back(&t.cmc);
  report.mean = mean_curve(ok);
  return report;
}

}  // namespace kxqda

#endif  // KXQDA_EVAL_HPP
