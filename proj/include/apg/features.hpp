#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "apg/common.hpp"

namespace apg {

enum class FeatureFamily { ManifestCapability, Component, ApiCall, StringEndpoint };

inline const char* family_name(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::ManifestCapability: return "manifest-capability";
    case FeatureFamily::Component: return "component";
    case FeatureFamily::ApiCall: return "api-call";
    case FeatureFamily::StringEndpoint: return "string-endpoint";
  }
  return "?";
}

inline std::optional<FeatureFamily> family_from_name(const std::string& s) {
  if (s == "manifest-capability") return FeatureFamily::ManifestCapability;
  if (s == "component") return FeatureFamily::Component;
  if (s == "api-call") return FeatureFamily::ApiCall;
  if (s == "string-endpoint") return FeatureFamily::StringEndpoint;
  return std::nullopt;
}

// Ordered, closed feature name space shared by every vector and model of one
// experiment. Positions are dense 0..n-1 in entry order.
class FeatureVocabulary {
 public:
  FeatureVocabulary() = default;

  static FeatureVocabulary from_entries(std::vector<std::pair<std::string, FeatureFamily>> entries) {
    FeatureVocabulary v;
    v.entries_ = std::move(entries);
    for (uint32_t i = 0; i < v.entries_.size(); ++i) {
      auto [it, fresh] = v.index_.emplace(v.entries_[i].first, i);
      if (!fresh) throw ContractViolation("duplicate feature name: " + v.entries_[i].first);
    }
    return v;
  }

  size_t size() const { return entries_.size(); }
  const std::string& name(uint32_t i) const { return entries_.at(i).first; }
  FeatureFamily family(uint32_t i) const { return entries_.at(i).second; }
  const std::vector<std::pair<std::string, FeatureFamily>>& entries() const { return entries_; }

  std::optional<uint32_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  uint64_t hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [n, f] : entries_) {
      h = fnv1a64(n, h);
      h = fnv1a64(family_name(f), h);
    }
    return h;
  }

 private:
  std::vector<std::pair<std::string, FeatureFamily>> entries_;
  std::unordered_map<std::string, uint32_t> index_;
};

// Sparse binary vector: the sorted set of positions holding 1.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector from_positions(std::vector<uint32_t> pos) {
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    FeatureVector v;
    v.bits_ = std::move(pos);
    return v;
  }

  bool test(uint32_t p) const { return std::binary_search(bits_.begin(), bits_.end(), p); }

  void set(uint32_t p) {
    auto it = std::lower_bound(bits_.begin(), bits_.end(), p);
    if (it == bits_.end() || *it != p) bits_.insert(it, p);
  }

  size_t count() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  const std::vector<uint32_t>& positions() const { return bits_; }

  // Set union.
  FeatureVector operator|(const FeatureVector& o) const {
    FeatureVector r;
    r.bits_.reserve(bits_.size() + o.bits_.size());
    std::set_union(bits_.begin(), bits_.end(), o.bits_.begin(), o.bits_.end(),
                   std::back_inserter(r.bits_));
    return r;
  }

  // this AND NOT o.
  FeatureVector difference(const FeatureVector& o) const {
    FeatureVector r;
    std::set_difference(bits_.begin(), bits_.end(), o.bits_.begin(), o.bits_.end(),
                        std::back_inserter(r.bits_));
    return r;
  }

  bool contains_all(const FeatureVector& o) const {
    return std::includes(bits_.begin(), bits_.end(), o.bits_.begin(), o.bits_.end());
  }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::vector<uint32_t> bits_;
};

enum class ModelKind { PlainSvm, SecSvm };

// Linear discriminant over the vocabulary: h(x) = w.x + b. Positive score
// means malware, negative goodware (fixed convention).
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  ModelKind kind = ModelKind::PlainSvm;
  double clip_k = 0.0;  // Sec-SVM only; 0 when unset
  uint64_t vocab_hash = 0;

  size_t dim() const { return weights.size(); }
};

inline std::string model_fingerprint(const LinearModel& m) {
  uint64_t h = fnv1a64_bytes(m.weights.data(), m.weights.size() * sizeof(double));
  h = fnv1a64_bytes(&m.bias, sizeof(double), h);
  h = fnv1a64_bytes(&m.clip_k, sizeof(double), h);
  h = fnv1a64(std::string_view(m.kind == ModelKind::SecSvm ? "sec-svm" : "plain-svm"), h);
  return to_hex(h);
}

inline double discriminant(const LinearModel& m, const FeatureVector& x) {
  if (!x.positions().empty() && x.positions().back() >= m.dim())
    throw ContractViolation("feature vector is not over the model's vocabulary");
  double s = m.bias;
  for (uint32_t p : x.positions()) s += m.weights[p];
  return s;
}

// Attacker capability in feature space: positions that may be flipped 0->1.
struct OmegaConstraints {
  FeatureVector addable;
  bool removals_allowed = false;  // always false in this artifact
};

// f_t(x) for target class goodware collapses to h(x) in the binary setting.
// The attack succeeds iff the returned value is < -kappa.
inline double attack_objective(const LinearModel& m, const FeatureVector& x, double kappa) {
  if (kappa < 0) throw ContractViolation("kappa must be nonnegative");
  return discriminant(m, x);
}

inline bool attack_successful(const LinearModel& m, const FeatureVector& x, double kappa) {
  return attack_objective(m, x, kappa) < -kappa;
}

// Minimum achievable score under addition-only constraints: h(x) plus every
// negative weight over addable, absent features. A lower bound on h(x+delta)
// for every admissible delta, and the gate for attempting any attack.
inline double feasibility_bound(const LinearModel& m, const FeatureVector& x,
                                const OmegaConstraints& omega) {
  double s = discriminant(m, x);
  FeatureVector absent = omega.addable.difference(x);
  for (uint32_t p : absent.positions())
    if (m.weights[p] < 0) s += m.weights[p];
  return s;
}

// Greedy minimum-cardinality addition set achieving h(x+delta) < -kappa.
// Exact for linear models under addition-only constraints: each added
// feature contributes its weight independently, so taking absent addable
// features in increasing weight order dominates every other subset of equal
// size. Returns nullopt when even adding all negative-weight addable
// features leaves h >= -kappa.
inline std::optional<FeatureVector> solve_feature_space_attack(const LinearModel& m,
                                                               const FeatureVector& x,
                                                               const OmegaConstraints& omega,
                                                               double kappa) {
  if (kappa < 0) throw ContractViolation("kappa must be nonnegative");
  double h = discriminant(m, x);
  if (h < -kappa) return FeatureVector{};

  std::vector<uint32_t> cand = omega.addable.difference(x).positions();
  std::erase_if(cand, [&](uint32_t p) { return m.weights[p] >= 0; });
  std::sort(cand.begin(), cand.end(), [&](uint32_t a, uint32_t b) {
    if (m.weights[a] != m.weights[b]) return m.weights[a] < m.weights[b];
    return a < b;
  });

  std::vector<uint32_t> chosen;
  for (uint32_t p : cand) {
    h += m.weights[p];
    chosen.push_back(p);
    if (h < -kappa) return FeatureVector::from_positions(std::move(chosen));
  }
  return std::nullopt;
}

}  // namespace apg
