#ifndef KXQDA_BENCH_HPP
#define KXQDA_BENCH_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/rng.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda {

/// Benchmark data: total / 4 identities with two samples per view, class
/// mean plus noise, every sample scaled to unit length (as descriptor
/// pipelines usually do).
inline CrossViewDataset bench_dataset(Index d, Index total, std::uint64_t seed) {
  require(d >= 1 && total >= 8, ErrorKind::ConfigError, "bench cell needs d >= 1 and n + m >= 8");
  const Index classes = total / 4;
  const Index n = total / 2;
  const Index m = total - n;
  Rng rng(seed, "bench/data", std::uint64_t(d) * 1'000'003ULL + std::uint64_t(total));
  Matrix means(d, classes);
  for (Index k = 0; k < classes; ++k)
    for (Index r = 0; r < d; ++r) means(r, k) = rng.normal();
  auto draw = [&](Index count, std::vector<int>& labels) {
    Matrix s(d, count);
    for (Index i = 0; i < count; ++i) {
      const Index k = std::min(i / 2, classes - 1);
      for (Index r = 0; r < d; ++r) s(r, i) = means(r, k) + 0.7 * rng.normal();
      s.col(i).normalize();
      labels.push_back(int(k) + 1);
    }
    return s;
  };
  std::vector<int> lx, lz;
  Matrix x = draw(n, lx);
  Matrix z = draw(m, lz);
  return CrossViewDataset(ViewMatrix(std::move(x)), ViewMatrix(std::move(z)), std::move(lx), std::move(lz));
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct BenchCell {
  Index d = 0;
  Index total = 0;
  std::vector<double> xqda_seconds;
  std::vector<double> kxqda_seconds;
  std::string xqda_error;   // set when xqda_fit failed
  std::string kxqda_error;  // set when kxqda_fit failed

  double xqda_median() const { return median(xqda_seconds); }
  double kxqda_median() const { return median(kxqda_seconds); }
};

/// Wall-clock of xqda_fit and linear-kernel kxqda_fit on the same data,
/// `reps` runs each (interleaved).
inline BenchCell bench_cell(Index d, Index total, int reps, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  const CrossViewDataset ds = bench_dataset(d, total, seed);
  BenchCell cell{d, total, {}, {}, {}, {}};
  for (int r = 0; r < reps; ++r) {
    try {
      const auto t0 = clock::now();
      const XqdaModel xm = xqda_fit(ds);
      cell.xqda_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    } catch (const Error& e) {
      cell.xqda_error = e.what();
    }
    try {
      const auto t0 = clock::now();
      const KxqdaModel km = kxqda_fit(ds, KernelSpec::linear());
      cell.kxqda_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    } catch (const Error& e) {
      cell.kxqda_error = e.what();
    }
  }
  return cell;
}

}  // namespace kxqda

#endif  // KXQDA_BENCH_HPP
