#ifndef KXQDA_SUBSPACE_HPP
#define KXQDA_SUBSPACE_HPP

#include <algorithm>
#include <optional>
#include <string>

#include "kxqda/error.hpp"
#include "kxqda/linalg.hpp"

namespace kxqda {

enum class DimensionRule { EigenvaluesAboveOne, FlooredToOne, Capped };

inline std::string to_string(DimensionRule r) {
  switch (r) {
    case DimensionRule::EigenvaluesAboveOne: return "eigenvalues>1";
    case DimensionRule::FlooredToOne: return "floored-to-1";
    case DimensionRule::Capped: return "capped-by-max-b";
  }
  return "";
}

/// Result of maximizing t^T D t / t^T (S + ridge I) t and building the
/// quadratic core on the retained directions.
struct RayleighSubspace {
  Matrix directions;  // dim x b, (S + ridge I)-orthonormal
  SymMatrix core;     // ((P^T (S+ridge) P)^-1 - (P^T D P)^-1)_+, b x b
  Vector eigenvalues; // every Rayleigh value, descending
  Index b = 0;
  DimensionRule rule = DimensionRule::EigenvaluesAboveOne;
};

/// The subspace dimension is the number of Rayleigh values above 1, never
/// less than 1 and never more than `max_b`.
inline RayleighSubspace fit_rayleigh_subspace(const SymMatrix& similar, const SymMatrix& dissimilar, double ridge,
                                              std::optional<Index> max_b = std::nullopt) {
  const EigPairs eig = gen_eig_ratio(dissimilar, similar, ridge);
  RayleighSubspace out;
  out.eigenvalues = eig.values;
  out.b = (eig.values.array() > 1.0).count();
  if (out.b == 0) {
    out.b = 1;
    out.rule = DimensionRule::FlooredToOne;
  }
  if (max_b && out.b > *max_b) {
    require(*max_b >= 1, ErrorKind::ConfigError, "max_b must be >= 1");
    out.b = *max_b;
    out.rule = DimensionRule::Capped;
  }
  out.directions = eig.vectors.leftCols(out.b);

  Matrix ridged = similar.matrix();
  ridged.diagonal().array() += ridge;
  const SymMatrix proj_s(out.directions.transpose() * ridged * out.directions);
  const SymMatrix proj_d(out.directions.transpose() * dissimilar.matrix() * out.directions);
  out.core = psd_project(spd_inverse(proj_s) - spd_inverse(proj_d));
  return out;
}

}  // namespace kxqda

#endif  // KXQDA_SUBSPACE_HPP
