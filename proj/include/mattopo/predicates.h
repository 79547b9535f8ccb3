#pragma once

#include <array>
#include <cstdint>

#include "mattopo/common.h"

namespace mattopo {

/// Weighted point; the lifted height is |p|^2 - weight.
struct WeightedPoint {
  Vec3 p = Vec3::Zero();
  double weight = 0.0;
  Index id = kInvalidIndex;  // symbolic perturbation priority, smaller wins
};

/// Sign of det[b - a; c - a; d - a] (positive for a right-handed tet).
/// Floating-point filter with an exact rational fallback.
int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// True when p lies strictly inside the orthosphere of the positively
/// oriented weighted tet (a, b, c, d), i.e. p's power to the orthosphere is
/// negative. Exact ties are broken by a symbolic perturbation of the weights
/// in increasing id order, so the answer is never ambiguous.
bool power_conflict(const WeightedPoint& a, const WeightedPoint& b, const WeightedPoint& c,
                    const WeightedPoint& d, const WeightedPoint& p);

/// Raw sign of the 5x5 lifted determinant without perturbation (0 on ties).
int power_test_raw(const WeightedPoint& a, const WeightedPoint& b, const WeightedPoint& c,
                   const WeightedPoint& d, const WeightedPoint& p);

/// Counters for how often the exact fallback ran.
struct PredicateStats {
  std::uint64_t orient_exact = 0;
  std::uint64_t power_exact = 0;
  std::uint64_t power_sos = 0;
};
PredicateStats predicate_stats();

}  // namespace mattopo
