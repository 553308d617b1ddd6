#pragma once

// Independent brute-force oracles used to freeze expected values. These
// deliberately avoid the library's solver code paths.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "apg/features.hpp"

namespace oracles {

struct ExhaustiveAttack {
  bool feasible = false;
  size_t min_cardinality = 0;
  double best_score_at_min_cardinality = 0.0;
  double min_score_overall = 0.0;  // over all admissible subsets
};

// Enumerates every subset of the addable, absent positions (k <= ~20).
inline ExhaustiveAttack exhaustive_attack(const apg::LinearModel& m, const apg::FeatureVector& x,
                                          const apg::OmegaConstraints& omega, double kappa) {
  std::vector<uint32_t> cand = omega.addable.difference(x).positions();
  double h0 = apg::discriminant(m, x);

  ExhaustiveAttack out;
  out.min_score_overall = h0;

  const uint64_t total = 1ull << cand.size();
  for (uint64_t mask = 0; mask < total; ++mask) {
    double h = h0;
    size_t card = 0;
    for (size_t i = 0; i < cand.size(); ++i) {
      if (mask & (1ull << i)) {
        h += m.weights[cand[i]];
        ++card;
      }
    }
    out.min_score_overall = std::min(out.min_score_overall, h);
    if (h < -kappa) {
      if (!out.feasible || card < out.min_cardinality) {
        out.feasible = true;
        out.min_cardinality = card;
        out.best_score_at_min_cardinality = h;
      } else if (card == out.min_cardinality) {
        out.best_score_at_min_cardinality = std::min(out.best_score_at_min_cardinality, h);
      }
    }
  }
  return out;
}

}  // namespace oracles
