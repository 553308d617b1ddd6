#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "apg/common.hpp"
#include "apg/features.hpp"
#include "apg/metrics.hpp"

namespace apg {

// Labels: +1 malware, -1 goodware.
struct LabeledCorpus {
  std::vector<FeatureVector> samples;
  std::vector<int8_t> labels;
  size_t vocab_size = 0;

  size_t size() const { return samples.size(); }

  bool both_classes() const {
    bool pos = false, neg = false;
    for (auto l : labels) (l > 0 ? pos : neg) = true;
    return pos && neg;
  }
};

struct SgdConfig {
  int batch = 1024;
  double lr = 1e-4;
  int epochs = 75;
  uint64_t seed = 1;
};

struct SecSvmConfig {
  int batch = 1024;
  double lr = 1e-4;
  int epochs = 75;
  double k;  // max absolute weight; no default, always chosen explicitly
  double c = 1.0;
  uint64_t seed = 1;
};

namespace detail {

// Mini-batch subgradient descent on the L2-regularized hinge loss,
//   J(w,b) = (1/N) sum_i max(0, 1 - y_i (w.x_i + b)) + (lambda/2) ||w||^2
// with lambda = 1/(c*N). When clip_k > 0 every weight is clamped to
// [-clip_k, clip_k] after each optimization step, the bias excluded.
inline LinearModel sgd_hinge(const LabeledCorpus& ds, double c, const SgdConfig& cfg,
                             double clip_k) {
  if (!ds.both_classes()) throw TrainingError("training corpus must contain both classes");
  if (c <= 0) throw TrainingError("svm hyperparameter c must be positive");

  const size_t n = ds.size();
  const size_t dim = ds.vocab_size;
  const double lambda = 1.0 / (c * static_cast<double>(n));
  const size_t batch = std::max<size_t>(1, static_cast<size_t>(cfg.batch));

  LinearModel m;
  m.weights.assign(dim, 0.0);
  m.bias = 0.0;
  m.kind = clip_k > 0 ? ModelKind::SecSvm : ModelKind::PlainSvm;
  m.clip_k = clip_k;

  Rng rng(cfg.seed);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(dim, 0.0);
  std::vector<uint32_t> touched;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t start = 0; start < n; start += batch) {
      size_t end = std::min(n, start + batch);
      double inv_b = 1.0 / static_cast<double>(end - start);
      touched.clear();
      double gb = 0.0;
      for (size_t t = start; t < end; ++t) {
        size_t i = order[t];
        double margin = static_cast<double>(ds.labels[i]) * discriminant(m, ds.samples[i]);
        if (margin < 1.0) {
          double y = static_cast<double>(ds.labels[i]);
          for (uint32_t p : ds.samples[i].positions()) {
            grad[p] -= y;
            touched.push_back(p);
          }
          gb -= y;
        }
      }
      double shrink = 1.0 - cfg.lr * lambda;
      for (double& w : m.weights) w *= shrink;
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (uint32_t p : touched) {
        m.weights[p] -= cfg.lr * inv_b * grad[p];
        grad[p] = 0.0;
      }
      m.bias -= cfg.lr * inv_b * gb;
      if (clip_k > 0)
        for (uint32_t p : touched) m.weights[p] = std::clamp(m.weights[p], -clip_k, clip_k);
    }
    // Clip again after the dense shrink so the invariant holds exactly.
    if (clip_k > 0)
      for (double& w : m.weights) w = std::clamp(w, -clip_k, clip_k);
    if (!std::isfinite(m.bias))
      throw TrainingError("training diverged: bias is not finite at epoch " +
                          std::to_string(epoch));
  }
  for (double w : m.weights)
    if (!std::isfinite(w)) throw TrainingError("training diverged: non-finite weight");
  return m;
}

}  // namespace detail

inline LinearModel train_svm(const LabeledCorpus& ds, double c = 1.0, const SgdConfig& cfg = {}) {
  return detail::sgd_hinge(ds, c, cfg, 0.0);
}

inline LinearModel train_secsvm(const LabeledCorpus& ds, const SecSvmConfig& cfg) {
  if (cfg.k <= 0) throw TrainingError("sec-svm clip bound k must be positive");
  SgdConfig sgd{cfg.batch, cfg.lr, cfg.epochs, cfg.seed};
  return detail::sgd_hinge(ds, cfg.c, sgd, cfg.k);
}

// Starting from k0 = max|w_i| of the plain SVM, shrink k geometrically
// (factor 0.8) and keep the smallest k whose AUROC on the evaluation split
// stays within loss_budget of the plain SVM. AUROC is scale-invariant, so
// the sweep additionally stops once the detection rate at the zero
// threshold falls more than the budget below the plain SVM: past that point
// the clipped weights cannot reach the hinge margin any more and the model
// stops being a usable detector even though its ranking is intact. Sweep
// floored at k0 * 1e-3.
struct GridSearchResult {
  double k = 0.0;
  LinearModel model;
  double auroc_svm = 0.0;
  double auroc_secsvm = 0.0;
};

namespace detail {

inline double detection_rate(const LinearModel& m, const LabeledCorpus& ds) {
  int malware = 0, detected = 0;
  for (size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] <= 0) continue;
    ++malware;
    if (discriminant(m, ds.samples[i]) > 0) ++detected;
  }
  return malware ? static_cast<double>(detected) / malware : 0.0;
}

}  // namespace detail

inline GridSearchResult grid_search_k(const LabeledCorpus& train, const LabeledCorpus& eval,
                                      double loss_budget, double c = 1.0,
                                      const SgdConfig& cfg = {}) {
  if (loss_budget <= 0 || loss_budget >= 1)
    throw ContractViolation("loss_budget must lie in (0,1)");
  LinearModel svm = train_svm(train, c, cfg);
  double auc0 = auroc(svm, eval.samples, eval.labels);
  double tpr0 = detail::detection_rate(svm, eval);

  double k0 = 0.0;
  for (double w : svm.weights) k0 = std::max(k0, std::abs(w));
  if (k0 == 0.0) throw TrainingError("plain svm learned all-zero weights");

  SecSvmConfig sec{cfg.batch, cfg.lr, cfg.epochs, k0, c, cfg.seed};
  GridSearchResult best;
  best.k = k0;
  best.model = train_secsvm(train, sec);
  best.auroc_svm = auc0;
  best.auroc_secsvm = auroc(best.model, eval.samples, eval.labels);

  for (double k = 0.8 * k0; k >= 1e-3 * k0; k *= 0.8) {
    sec.k = k;
    LinearModel cand = train_secsvm(train, sec);
    double auc = auroc(cand, eval.samples, eval.labels);
    if (auc0 - auc > loss_budget) break;
    if (tpr0 - detail::detection_rate(cand, eval) > loss_budget) break;
    best.k = k;
    best.model = std::move(cand);
    best.auroc_secsvm = auc;
  }
  return best;
}

// Rank features by |w| of an L2-regularized linear fit and keep the top n,
// preserving the original entry order. Returns the reduced vocabulary and
// the old->new position map (one entry per kept position).
struct FeatureSelection {
  FeatureVocabulary vocab;
  std::vector<std::pair<uint32_t, uint32_t>> mapping;  // (old, new), old ascending
};

inline FeatureSelection feature_select_topn(const LabeledCorpus& ds,
                                            const FeatureVocabulary& vocab, size_t n,
                                            double c = 1.0, const SgdConfig& cfg = {}) {
  if (n > vocab.size()) throw ContractViolation("n exceeds vocabulary size");
  LinearModel m = train_svm(ds, c, cfg);

  std::vector<uint32_t> order(vocab.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    double wa = std::abs(m.weights[a]), wb = std::abs(m.weights[b]);
    if (wa != wb) return wa > wb;
    return a < b;
  });
  order.resize(n);
  std::sort(order.begin(), order.end());

  FeatureSelection out;
  std::vector<std::pair<std::string, FeatureFamily>> entries;
  entries.reserve(n);
  for (uint32_t i = 0; i < order.size(); ++i) {
    entries.emplace_back(vocab.name(order[i]), vocab.family(order[i]));
    out.mapping.emplace_back(order[i], i);
  }
  out.vocab = FeatureVocabulary::from_entries(std::move(entries));
  return out;
}

inline FeatureVector project(const FeatureVector& x, const FeatureSelection& sel) {
  std::vector<uint32_t> pos;
  auto it = sel.mapping.begin();
  for (uint32_t p : x.positions()) {
    while (it != sel.mapping.end() && it->first < p) ++it;
    if (it == sel.mapping.end()) break;
    if (it->first == p) pos.push_back(it->second);
  }
  return FeatureVector::from_positions(std::move(pos));
}

}  // namespace apg
