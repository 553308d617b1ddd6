#pragma once

#include <string>
#include <vector>

#include "apg/features.hpp"
#include "apg/lang/analyze.hpp"
#include "apg/lang/dce.hpp"
#include "apg/lang/extract.hpp"
#include "apg/lang/interp.hpp"
#include "apg/lang/parse.hpp"
#include "apg/lang/render.hpp"

namespace apg {

// The four problem-space constraint classes gating every reported success.
struct GammaResult {
  bool transformations = false;  // addition-only
  bool semantics = false;        // traces equal on the test suite
  bool plausibility = false;     // parses, well-formed, runs to completion
  bool preprocessing = false;    // feature-identical under dead-code elimination

  bool pass() const { return transformations && semantics && plausibility && preprocessing; }

  std::string violation() const {
    if (!transformations) return "T";
    if (!semantics) return "Upsilon";
    if (!plausibility) return "Pi";
    if (!preprocessing) return "Lambda";
    return "";
  }
};

struct GammaConfig {
  std::vector<std::pair<int64_t, uint64_t>> upsilon_inputs;  // (input, seed)
  uint64_t fuel = lang::kDefaultFuel;
};

inline GammaResult verify_gamma(const lang::Program& original, const lang::Program& adversarial,
                                const FeatureVocabulary& vocab, const GammaConfig& cfg,
                                uint64_t* executed = nullptr) {
  GammaResult r;

  // T: every change is an addition.
  FeatureVector x0 = lang::extract_features(original, vocab);
  FeatureVector x1 = lang::extract_features(adversarial, vocab);
  r.transformations = x1.contains_all(x0) &&
                      lang::stats(adversarial).size >= lang::stats(original).size;

  // Upsilon: identical traces on every test; timeouts and faults count as
  // inequality.
  r.semantics = true;
  for (const auto& [input, seed] : cfg.upsilon_inputs) {
    try {
      if (lang::interpret(original, input, seed, cfg.fuel, executed) !=
          lang::interpret(adversarial, input, seed, cfg.fuel, executed)) {
        r.semantics = false;
        break;
      }
    } catch (const std::runtime_error&) {
      r.semantics = false;
      break;
    }
  }

  // Pi: the install-and-start analog. The text form parses back, the
  // program is well-formed, and main runs without faulting.
  r.plausibility = false;
  try {
    if (lang::parse(lang::render(adversarial)) == adversarial &&
        lang::is_well_formed(adversarial)) {
      r.plausibility = true;
      for (const auto& [input, seed] : cfg.upsilon_inputs)
        lang::interpret(adversarial, input, seed, cfg.fuel, executed);
    }
  } catch (const std::runtime_error&) {
    r.plausibility = false;
  }

  // Lambda: preprocessing-stable at the feature level, and the pass strips
  // no capability.
  lang::Program cleaned = lang::eliminate_dead_code(adversarial);
  r.preprocessing = lang::extract_features(cleaned, vocab) == x1 &&
                    cleaned.manifest.capabilities == adversarial.manifest.capabilities;

  return r;
}

}  // namespace apg
