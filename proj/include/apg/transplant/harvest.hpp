#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "apg/common.hpp"
#include "apg/features.hpp"
#include "apg/lang/analyze.hpp"
#include "apg/lang/ast.hpp"
#include "apg/lang/extract.hpp"
#include "apg/transplant/gadget.hpp"
#include "apg/transplant/implant.hpp"

namespace apg {

namespace transplant_detail {

struct Occurrence {
  std::string cls, fn;         // function containing the reference
  const lang::Stmt* api = nullptr;  // the referencing api statement, if any
};

inline bool expr_contains_string(const lang::Expr& e, const std::string& s) {
  bool found = false;
  lang::detail::walk_exprs(e, [&](const lang::Expr& x) {
    if (x.kind == lang::ExprKind::StrLit && x.str_val == s) found = true;
  });
  return found;
}

// Callee closure of (cls, fn) over the call graph; api statements are
// built-ins and contribute no edges.
inline std::set<std::string> callee_closure(const lang::Program& p, const std::string& cls,
                                            const std::string& fn) {
  std::set<std::string> seen;
  std::deque<std::pair<std::string, std::string>> work{{cls, fn}};
  while (!work.empty()) {
    auto [c, f] = work.front();
    work.pop_front();
    const lang::Function* func = p.find_function(c, f);
    if (!func) continue;
    if (!seen.insert(lang::qualified(c, f)).second) continue;
    lang::detail::walk_stmts(func->body, [&](const lang::Stmt& s) {
      if (s.kind == lang::StmtKind::Call) work.emplace_back(s.cls, s.fn);
    });
  }
  return seen;
}

inline std::vector<lang::Class> restrict_classes(const lang::Program& p,
                                                 const std::set<std::string>& fns) {
  std::vector<lang::Class> out;
  for (const lang::Class& c : p.classes) {
    lang::Class kept;
    kept.name = c.name;
    for (const lang::Function& f : c.functions)
      if (fns.count(lang::qualified(c.name, f.name))) kept.functions.push_back(f);
    if (!kept.functions.empty()) out.push_back(std::move(kept));
  }
  return out;
}

// Backward slice inside one block: walking up from the call, include the
// assignments that produce the needed variables, transitively. Fails (and
// the occurrence is skipped) when a needed variable comes from outside the
// block, e.g. a parameter or a branch.
inline std::optional<lang::Block> slice_args(const lang::Block& block, size_t call_idx) {
  std::set<std::string> needed;
  for (const lang::Expr& a : block[call_idx].args) lang::detail::collect_uses(a, needed);

  std::vector<const lang::Stmt*> picked;
  for (size_t i = call_idx; i-- > 0;) {
    const lang::Stmt& s = block[i];
    std::string defines;
    if (s.kind == lang::StmtKind::Assign) defines = s.target;
    else if (!s.dst.empty()) defines = s.dst;
    if (defines.empty() || !needed.count(defines)) continue;
    if (s.kind == lang::StmtKind::If || s.kind == lang::StmtKind::While) return std::nullopt;
    picked.push_back(&s);
    needed.erase(defines);
    for (const lang::Expr& a : s.args) lang::detail::collect_uses(a, needed);
  }
  if (!needed.empty()) return std::nullopt;

  lang::Block vein;
  for (auto it = picked.rbegin(); it != picked.rend(); ++it) vein.push_back(**it);
  return vein;
}

struct CallSite {
  const lang::Block* block = nullptr;
  size_t index = 0;
};

// All call statements targeting the class (optionally one function).
inline std::vector<CallSite> find_call_sites(const lang::Program& p, const std::string& cls,
                                             const std::string& fn = "") {
  std::vector<CallSite> sites;
  std::function<void(const lang::Block&)> scan = [&](const lang::Block& b) {
    for (size_t i = 0; i < b.size(); ++i) {
      const lang::Stmt& s = b[i];
      if (s.kind == lang::StmtKind::Call && s.cls == cls && (fn.empty() || s.fn == fn))
        sites.push_back({&b, i});
      scan(s.block_a);
      scan(s.block_b);
    }
  };
  for (const lang::Class& c : p.classes)
    for (const lang::Function& f : c.functions) scan(f.body);
  return sites;
}

inline lang::Manifest manifest_delta_for(const lang::Program& donor,
                                         const std::vector<lang::Class>& organ,
                                         const lang::Block& vein, const lang::Stmt& entry) {
  lang::Program probe;
  probe.classes = organ;
  lang::Class vein_cls;
  vein_cls.name = "__vein";
  lang::Function vf;
  vf.name = "__v";
  vf.body = vein;
  vf.body.push_back(entry);
  vein_cls.functions.push_back(std::move(vf));
  probe.classes.push_back(std::move(vein_cls));

  lang::Manifest delta;
  for (const auto& api : lang::api_names(probe)) {
    std::string cap = lang::capability_for_api(api);
    if (donor.manifest.capabilities.count(cap)) delta.capabilities.insert(cap);
  }
  std::set<std::string> strings;
  for (const auto& c : probe.classes)
    for (const auto& f : c.functions)
      for (const auto& s : lang::string_literals(f.body)) strings.insert(s);
  for (const auto& s : strings)
    if (donor.manifest.endpoints.count(s)) delta.endpoints.insert(s);
  return delta;
}

inline lang::SoftwareStats gadget_stats(const Gadget& g) {
  lang::Program probe;
  probe.manifest = g.manifest_delta;
  probe.classes = g.organ;
  lang::SoftwareStats s = lang::stats(probe);
  lang::Block payload = g.vein;
  payload.push_back(g.entry);
  s.size += lang::detail::count_stmts(payload);
  s.api_calls += lang::detail::count_api_stmts(payload);
  return s;
}

// Synthesized minimal construct-and-invoke block for organs with no donor
// call site: one literal-valued variable per parameter, then the call.
inline void make_adapted_vein(const lang::Function& callee, const std::string& cls, Gadget& g) {
  std::vector<lang::Expr> args;
  for (size_t i = 0; i < callee.params.size(); ++i) {
    std::string var = "av" + std::to_string(i);
    g.vein.push_back(lang::Stmt::make_assign(var, lang::Expr::make_int(0)));
    args.push_back(lang::Expr::make_var(var));
  }
  g.entry = lang::Stmt::make_call(cls, callee.name, std::move(args));
  g.adapted_vein = true;
}

// Extend the organ with the closure of any function the vein itself calls.
inline void widen_organ(const lang::Program& donor, const lang::Block& vein,
                        std::set<std::string>& fns) {
  for (const lang::Stmt& s : vein)
    if (s.kind == lang::StmtKind::Call)
      for (const auto& fq : callee_closure(donor, s.cls, s.fn)) fns.insert(fq);
}

inline std::optional<Gadget> build_from_function(const lang::Program& donor,
                                                 const std::string& cls, const std::string& fn,
                                                 Rng& rng) {
  Gadget g;
  std::set<std::string> fns = callee_closure(donor, cls, fn);

  auto sites = find_call_sites(donor, cls, fn);
  std::optional<lang::Block> vein;
  size_t entry_idx = 0;
  const lang::Block* entry_block = nullptr;
  std::vector<size_t> order(sites.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (size_t i : order) {
    vein = slice_args(*sites[i].block, sites[i].index);
    if (vein) {
      entry_block = sites[i].block;
      entry_idx = sites[i].index;
      break;
    }
  }

  if (vein) {
    g.vein = std::move(*vein);
    g.entry = (*entry_block)[entry_idx];
    g.entry.dst.clear();
    widen_organ(donor, g.vein, fns);
  } else {
    const lang::Function* callee = donor.find_function(cls, fn);
    if (!callee) return std::nullopt;
    make_adapted_vein(*callee, cls, g);
  }
  g.organ = restrict_classes(donor, fns);
  if (g.organ.empty()) return std::nullopt;
  g.manifest_delta = manifest_delta_for(donor, g.organ, g.vein, g.entry);
  return g;
}

}  // namespace transplant_detail

// Locate an occurrence of the feature in the donor, slice out organ and
// vein, and package the manifest delta. Components with no in-code
// invocation get an adapted vein; intent features are never harvested.
inline std::optional<Gadget> extract_gadget(const lang::Program& donor, uint32_t feature,
                                            const FeatureVocabulary& vocab, Rng& rng) {
  const std::string& name = vocab.name(feature);
  auto sep = name.find("::");
  if (sep == std::string::npos) return std::nullopt;
  std::string family = name.substr(0, sep);
  std::string payload = name.substr(sep + 2);

  if (family == "intent") return std::nullopt;

  std::optional<Gadget> g;
  if (family == "activity" || family == "service" || family == "receiver" ||
      family == "provider") {
    if (!donor.manifest.components.count({*lang::component_kind_from(family), payload}))
      return std::nullopt;
    const lang::Class* target = donor.find_class(payload);
    if (!target || target->functions.empty()) return std::nullopt;

    // Candidate entry functions: those the donor itself invokes, falling
    // back to the first declared one (adapted vein).
    auto sites = transplant_detail::find_call_sites(donor, payload);
    std::vector<std::string> fns;
    for (const auto& site : sites) {
      const std::string& fn = (*site.block)[site.index].fn;
      if (std::find(fns.begin(), fns.end(), fn) == fns.end()) fns.push_back(fn);
    }
    if (fns.empty()) fns.push_back(target->functions.front().name);
    for (const auto& fn : fns) {
      auto cand = transplant_detail::build_from_function(donor, payload, fn, rng);
      if (!cand) continue;
      if (!g || (g->adapted_vein && !cand->adapted_vein)) g = std::move(cand);
      if (!g->adapted_vein) break;
    }
    if (!g) return std::nullopt;
    g->manifest_delta.components.emplace(*lang::component_kind_from(family), payload);
  } else if (family == "api" || family == "cap" || family == "url") {
    // The entry-point statement is an api reference; transplant its whole
    // containing function. Occurrences in the donor entry function rank
    // last since their closure tends to swallow the donor.
    std::vector<transplant_detail::Occurrence> occs;
    for (const lang::Class& c : donor.classes) {
      for (const lang::Function& f : c.functions) {
        bool hit = false;
        lang::detail::walk_stmts(f.body, [&](const lang::Stmt& s) {
          if (hit || s.kind != lang::StmtKind::Api) return;
          if (family == "api") {
            hit = s.target == payload;
          } else if (family == "cap") {
            hit = lang::capability_for_api(s.target) == payload;
          } else {
            for (const lang::Expr& a : s.args)
              if (transplant_detail::expr_contains_string(a, payload)) hit = true;
          }
        });
        if (hit) occs.push_back({c.name, f.name, nullptr});
      }
    }
    if (occs.empty()) return std::nullopt;
    std::string entry_fq = lang::qualified(donor.entry_class, donor.entry_fn);
    std::stable_sort(occs.begin(), occs.end(),
                     [&](const auto& a, const auto& b) {
                       return (lang::qualified(a.cls, a.fn) != entry_fq) >
                              (lang::qualified(b.cls, b.fn) != entry_fq);
                     });
    for (const auto& occ : occs) {
      auto cand = transplant_detail::build_from_function(donor, occ.cls, occ.fn, rng);
      if (!cand) continue;
      if (!g || (g->adapted_vein && !cand->adapted_vein)) g = std::move(cand);
      if (!g->adapted_vein) break;
    }
    if (!g) return std::nullopt;
    if (family == "cap") g->manifest_delta.capabilities.insert(payload);
    if (family == "url") g->manifest_delta.endpoints.insert(payload);
  } else {
    return std::nullopt;
  }

  g->target_feature = feature;
  g->target_name = name;
  g->stats = transplant_detail::gadget_stats(*g);
  return g;
}

// Implant into the minimal host and read the feature delta: r = phi(z') with
// the baseline features subtracted. Also the gadget's stored r.
inline FeatureVector estimate_side_effects(Gadget& g, const lang::Program& z_min,
                                           const FeatureVocabulary& vocab, Rng& rng) {
  lang::Program implanted = implant(z_min, g, rng);
  FeatureVector x_min = lang::extract_features(z_min, vocab);
  g.r = lang::extract_features(implanted, vocab).difference(x_min);
  return g.r;
}

struct IceboxParams {
  int n_f = 500;  // most-negative features to cover
  int n_d = 5;    // gadgets per feature
};

// Harvest gadgets for the n_f most negative features from donors exhibiting
// them. Gadgets whose estimated contribution scores positive are discarded;
// original veins are preferred over adapted ones.
inline IceBox build_icebox(const std::vector<lang::Program>& donors, const LinearModel& model,
                           const FeatureVocabulary& vocab, const IceboxParams& params,
                           uint64_t seed) {
  IceBox box;
  box.model_fingerprint = model_fingerprint(model);
  lang::Program z_min = lang::minimal_program();

  std::vector<FeatureVector> donor_features(donors.size());
  for (size_t i = 0; i < donors.size(); ++i)
    donor_features[i] = lang::extract_features(donors[i], vocab);

  std::vector<uint32_t> order(model.dim());
  for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    if (model.weights[a] != model.weights[b]) return model.weights[a] < model.weights[b];
    return a < b;
  });
  if (order.size() > static_cast<size_t>(params.n_f)) order.resize(params.n_f);
  std::erase_if(order, [&](uint32_t f) { return model.weights[f] >= 0; });

  for (uint32_t feature : order) {
    if (vocab.name(feature).rfind("intent::", 0) == 0) continue;  // never transplantable
    std::vector<size_t> pool;
    for (size_t i = 0; i < donors.size(); ++i)
      if (donor_features[i].test(feature)) pool.push_back(i);
    if (pool.empty()) {
      box.by_feature[feature];  // logged as empty
      continue;
    }
    Rng rng(Rng::mix(seed, feature));
    rng.shuffle(pool);

    std::vector<Gadget> found;
    int originals = 0;
    for (size_t donor_idx : pool) {
      if (originals >= params.n_d) break;
      if (found.size() >= static_cast<size_t>(3 * params.n_d)) break;
      auto g = extract_gadget(donors[donor_idx], feature, vocab, rng);
      if (!g) continue;
      try {
        estimate_side_effects(*g, z_min, vocab, rng);
      } catch (const ImplantError&) {
        continue;  // gadget discarded
      }
      if (!g->r.test(feature)) continue;  // renaming lost the target
      if (discriminant(model, g->r) > 0) continue;  // discard: scores malicious
      g->id = "f" + std::to_string(feature) + "_d" + std::to_string(donor_idx);
      if (!g->adapted_vein) ++originals;
      found.push_back(std::move(*g));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const Gadget& a, const Gadget& b) {
                       return a.adapted_vein < b.adapted_vein;
                     });
    if (found.size() > static_cast<size_t>(params.n_d)) found.resize(params.n_d);
    box.by_feature[feature] = std::move(found);
  }
  return box;
}

}  // namespace apg
