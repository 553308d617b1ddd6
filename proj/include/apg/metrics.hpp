#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "apg/common.hpp"
#include "apg/features.hpp"

namespace apg {

// AUROC via the Mann-Whitney rank statistic, ties averaged.
inline double auroc(const std::vector<double>& scores, const std::vector<int8_t>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw MetricError("auroc: empty or mismatched inputs");
  size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double rank_pos = 0.0;
  size_t n_pos = 0;
  for (size_t k = 0; k < n; ++k) {
    if (labels[k] > 0) {
      rank_pos += rank[k];
      ++n_pos;
    }
  }
  size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auroc undefined on a single-class corpus");
  double u = rank_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double auroc(const LinearModel& m, const std::vector<FeatureVector>& xs,
                    const std::vector<int8_t>& labels) {
  std::vector<double> s(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) s[i] = discriminant(m, xs[i]);
  return auroc(s, labels);
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC curve swept over decreasing score thresholds, one point per distinct
// score plus the (0,0) and (1,1) endpoints.
inline std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                        const std::vector<int8_t>& labels) {
  size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  double n_pos = 0, n_neg = 0;
  for (auto l : labels) (l > 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw MetricError("roc undefined on a single-class corpus");

  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0});
  double tp = 0, fp = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] > 0) tp += 1;
      else fp += 1;
      ++j;
    }
    pts.push_back({fp / n_neg, tp / n_pos});
    i = j;
  }
  return pts;
}

// Shannon entropy of the normalized |w| distribution; higher means flatter.
inline double weight_entropy(const LinearModel& m) {
  double total = 0.0;
  for (double w : m.weights) total += std::abs(w);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (double w : m.weights) {
    double p = std::abs(w) / total;
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// Linear-interpolation quantile, q in [0,1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw MetricError("quantile of empty set");
  std::sort(v.begin(), v.end());
  double idx = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(idx);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace apg
