#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apg/attack/gamma.hpp"
#include "apg/common.hpp"
#include "apg/features.hpp"
#include "apg/lang/extract.hpp"
#include "apg/sat/predicate.hpp"
#include "apg/transplant/gadget.hpp"
#include "apg/transplant/implant.hpp"

namespace apg {

struct AttackConfig {
  double kappa = 0.0;  // 0 = low confidence
  int max_new_capabilities_per_gadget = 1;
  std::set<std::string> dangerous_capabilities;
  std::vector<std::pair<int64_t, uint64_t>> upsilon_inputs;
  uint64_t fuel = lang::kDefaultFuel;
  int retry_rounds = 3;  // realized-score re-ranking rounds
  sat::PredicateParams predicate;
};

enum class AttackOutcome { Success, Infeasible, ImplantFailed, ConstraintViolation };

inline const char* outcome_name(AttackOutcome o) {
  switch (o) {
    case AttackOutcome::Success: return "success";
    case AttackOutcome::Infeasible: return "infeasible";
    case AttackOutcome::ImplantFailed: return "implant_error";
    case AttackOutcome::ConstraintViolation: return "constraint_violation";
  }
  return "?";
}

struct AttackResult {
  AttackOutcome outcome = AttackOutcome::Infeasible;
  GammaResult gamma;
  std::string violation;
  double score_before = 0.0;
  double score_simulated = 0.0;  // feature-space score of the planned variant
  double score_after = 0.0;      // realized score; equals before when no implant
  int features_added = 0;
  std::vector<std::string> gadget_ids;
  std::vector<sat::Cnf3> predicates;  // one per implanted gadget, for audit
  std::optional<lang::Program> adversarial;
  double wall_ms = 0.0;
  uint64_t statements_executed = 0;  // deterministic work metric
};

struct RankedGadget {
  const Gadget* gadget = nullptr;
  double score = 0.0;     // w . (r AND NOT x)
  FeatureVector contribution;
};

// Gadget ordering per the greedy search: contribution d_j = r_j AND NOT x,
// score_j = w.d_j, ascending (most negative first). Gadgets whose target
// feature is already present are skipped; ties prefer fewer side effects,
// then the stable id.
inline std::vector<RankedGadget> rank_gadgets(const IceBox& box, const FeatureVector& x,
                                              const LinearModel& model) {
  if (box.model_fingerprint != model_fingerprint(model))
    throw StaleIceboxError("ice-box was harvested under a different model");
  std::vector<RankedGadget> out;
  for (const auto& [feature, gadgets] : box.by_feature) {
    if (x.test(feature)) continue;  // feature already present
    for (const Gadget& g : gadgets) {
      RankedGadget rg;
      rg.gadget = &g;
      rg.contribution = g.r.difference(x);
      rg.score = 0.0;
      for (uint32_t p : rg.contribution.positions()) rg.score += model.weights[p];
      out.push_back(std::move(rg));
    }
  }
  std::sort(out.begin(), out.end(), [](const RankedGadget& a, const RankedGadget& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.gadget->r.count() != b.gadget->r.count())
      return a.gadget->r.count() < b.gadget->r.count();
    return a.gadget->id < b.gadget->id;
  });
  return out;
}

// Practical feasibility: a gadget may introduce at most the configured number
// of new capabilities and none from the dangerous registry.
inline bool check_feasibility(const std::set<std::string>& host_capabilities, const Gadget& g,
                              const AttackConfig& cfg) {
  int fresh = 0;
  for (const auto& cap : g.manifest_delta.capabilities) {
    if (host_capabilities.count(cap)) continue;
    if (cfg.dangerous_capabilities.count(cap)) return false;
    ++fresh;
  }
  return fresh <= cfg.max_new_capabilities_per_gadget;
}

namespace attack_detail {

struct Plan {
  std::vector<const Gadget*> chosen;
  double simulated_score = 0.0;
  bool reached = false;
};

// Greedy selection in feature space: walk the ranked list, re-evaluating
// each candidate against the running vector so a stale contribution can
// never push the score up, until the confidence target is met. A gadget is
// eligible only when every feature it would add is admissible under Omega,
// keeping problem-space moves inside the feature-space constraint set.
inline Plan simulate_selection(const IceBox& box, const FeatureVector& x0,
                               const std::set<std::string>& host_caps, const LinearModel& model,
                               const OmegaConstraints& omega, const AttackConfig& cfg) {
  Plan plan;
  FeatureVector x = x0;
  std::set<std::string> caps = host_caps;
  double h = discriminant(model, x);
  plan.simulated_score = h;
  if (h < -cfg.kappa) {
    plan.reached = true;
    return plan;
  }
  for (const RankedGadget& rg : rank_gadgets(box, x0, model)) {
    if (x.test(rg.gadget->target_feature)) continue;
    if (!check_feasibility(caps, *rg.gadget, cfg)) continue;
    FeatureVector d = rg.gadget->r.difference(x);
    if (!omega.addable.contains_all(d)) continue;
    double contribution = 0.0;
    for (uint32_t p : d.positions()) contribution += model.weights[p];
    if (contribution >= 0.0) continue;  // monotone progress only
    x = x | rg.gadget->r;
    h += contribution;
    for (const auto& cap : rg.gadget->manifest_delta.capabilities) caps.insert(cap);
    plan.chosen.push_back(rg.gadget);
    if (h < -cfg.kappa) break;
  }
  plan.simulated_score = h;
  plan.reached = h < -cfg.kappa;
  return plan;
}

}  // namespace attack_detail

// The end-to-end attack: feature-space feasibility gate, greedy gadget
// selection, batch implantation, realized-score re-check with bounded
// re-ranking rounds, and the problem-space constraint verifier.
inline AttackResult run_attack(const lang::Program& z, const LinearModel& model,
                               const IceBox& icebox, const OmegaConstraints& omega,
                               const AttackConfig& cfg, const FeatureVocabulary& vocab,
                               uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  AttackResult res;
  FeatureVector x0 = lang::extract_features(z, vocab);
  res.score_before = discriminant(model, x0);
  res.score_after = res.score_before;
  if (res.score_before <= 0)
    throw ContractViolation("attacks target true positives: h(phi(z)) must be > 0");

  auto finish = [&](AttackOutcome outcome) {
    res.outcome = outcome;
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return res;
  };

  // Necessary-condition gate: no problem-space attempt unless the
  // feature-space attack is feasible.
  if (feasibility_bound(model, x0, omega) >= -cfg.kappa) return finish(AttackOutcome::Infeasible);

  Rng rng(seed);
  lang::Program current = z;
  FeatureVector x = x0;

  for (int round = 0; round < cfg.retry_rounds; ++round) {
    attack_detail::Plan plan = attack_detail::simulate_selection(
        icebox, x, current.manifest.capabilities, model, omega, cfg);
    res.score_simulated = plan.simulated_score;
    if (!plan.reached) return finish(AttackOutcome::Infeasible);  // ice-box insufficient

    try {
      for (const Gadget* g : plan.chosen) {
        sat::Cnf3 cnf;
        lang::Program next = implant(current, *g, rng, cfg.predicate, &cnf);
        res.gadget_ids.push_back(g->id);
        res.predicates.push_back(std::move(cnf));
        current = std::move(next);
      }
    } catch (const ImplantError&) {
      return finish(AttackOutcome::ImplantFailed);
    }

    x = lang::extract_features(current, vocab);
    res.score_after = discriminant(model, x);
    if (res.score_after < -cfg.kappa) break;  // realized side effects settled
  }
  if (res.score_after >= -cfg.kappa) return finish(AttackOutcome::Infeasible);

  GammaConfig gcfg{cfg.upsilon_inputs, cfg.fuel};
  res.gamma = verify_gamma(z, current, vocab, gcfg, &res.statements_executed);
  res.features_added = static_cast<int>(x.difference(x0).count());
  if (!res.gamma.pass()) {
    res.violation = res.gamma.violation();
    return finish(AttackOutcome::ConstraintViolation);
  }
  res.adversarial = std::move(current);
  return finish(AttackOutcome::Success);
}

}  // namespace apg
