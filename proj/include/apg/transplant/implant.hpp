#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "apg/common.hpp"
#include "apg/lang/analyze.hpp"
#include "apg/lang/ast.hpp"
#include "apg/sat/predicate.hpp"
#include "apg/transplant/gadget.hpp"

namespace apg {

namespace transplant_detail {

inline void rename_calls(lang::Block& b, const std::map<std::string, std::string>& cls_map) {
  for (lang::Stmt& s : b) {
    if (s.kind == lang::StmtKind::Call) {
      auto it = cls_map.find(s.cls);
      if (it != cls_map.end()) s.cls = it->second;
    }
    rename_calls(s.block_a, cls_map);
    rename_calls(s.block_b, cls_map);
  }
}

inline void rename_vars_expr(lang::Expr& e, const std::map<std::string, std::string>& var_map) {
  if (e.kind == lang::ExprKind::Var) {
    auto it = var_map.find(e.str_val);
    if (it != var_map.end()) e.str_val = it->second;
  }
  for (lang::Expr& k : e.kids) rename_vars_expr(k, var_map);
}

inline void rename_vars(lang::Block& b, const std::map<std::string, std::string>& var_map) {
  for (lang::Stmt& s : b) {
    for (lang::Expr& a : s.args) rename_vars_expr(a, var_map);
    if (s.kind == lang::StmtKind::Assign) {
      auto it = var_map.find(s.target);
      if (it != var_map.end()) s.target = it->second;
    }
    if (!s.dst.empty()) {
      auto it = var_map.find(s.dst);
      if (it != var_map.end()) s.dst = it->second;
    }
    rename_vars(s.block_a, var_map);
    rename_vars(s.block_b, var_map);
  }
}

inline std::set<std::string> function_var_names(const lang::Function& f) {
  std::set<std::string> names(f.params.begin(), f.params.end());
  lang::detail::walk_stmts(f.body, [&](const lang::Stmt& s) {
    if (s.kind == lang::StmtKind::Assign) names.insert(s.target);
    if (!s.dst.empty()) names.insert(s.dst);
    for (const lang::Expr& a : s.args)
      lang::detail::walk_exprs(a, [&](const lang::Expr& e) {
        if (e.kind == lang::ExprKind::Var) names.insert(e.str_val);
      });
  });
  return names;
}

inline double variance(const std::vector<int>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (int v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (int v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

// Insertion boundaries run up to the first top-level return so the guard is
// never parked in unreachable tail position.
inline size_t insertable_limit(const lang::Block& body) {
  for (size_t i = 0; i < body.size(); ++i)
    if (body[i].kind == lang::StmtKind::Return) return i;
  return body.size();
}

}  // namespace transplant_detail

struct ImplantSite {
  std::string cls;
  std::string fn;
  size_t position = 0;
};

// Injection-point selection: the host class whose per-function cyclomatic
// complexity variance moves least when one of its functions gains the
// guard's decision point, averaged over that class's candidate functions.
inline ImplantSite select_implant_site(const lang::Program& host, const Gadget& g, Rng& rng) {
  std::set<std::string> reachable = lang::reachable_functions(host);

  std::vector<int> base_cc;
  for (const auto& c : host.classes)
    for (const auto& f : c.functions) base_cc.push_back(lang::cyclomatic_complexity(f));
  double var_before = transplant_detail::variance(base_cc);
  std::vector<int> organ_cc;
  for (const auto& c : g.organ)
    for (const auto& f : c.functions) organ_cc.push_back(lang::cyclomatic_complexity(f));

  std::string best_cls;
  double best_delta = 0.0;
  std::vector<std::string> best_fns;
  for (const auto& c : host.classes) {
    std::vector<std::string> fns;
    double sum = 0.0;
    for (const auto& f : c.functions) {
      if (!reachable.count(lang::qualified(c.name, f.name))) continue;
      std::vector<int> after = base_cc;
      after.insert(after.end(), organ_cc.begin(), organ_cc.end());
      // Bump this function's entry by the guard's single decision point.
      int cc = lang::cyclomatic_complexity(f);
      for (int& v : after) {
        if (v == cc) {
          ++v;
          break;
        }
      }
      sum += std::abs(transplant_detail::variance(after) - var_before);
      fns.push_back(f.name);
    }
    if (fns.empty()) continue;
    double mean = sum / static_cast<double>(fns.size());
    if (best_cls.empty() || mean < best_delta) {
      best_cls = c.name;
      best_delta = mean;
      best_fns = std::move(fns);
    }
  }
  if (best_cls.empty()) throw ImplantError("host has no reachable insertion site");

  ImplantSite site;
  site.cls = best_cls;
  site.fn = best_fns[static_cast<size_t>(rng.below(best_fns.size()))];
  const lang::Function* f = host.find_function(site.cls, site.fn);
  site.position = static_cast<size_t>(
      rng.below(transplant_detail::insertable_limit(f->body) + 1));
  return site;
}

// Merge the gadget into the host: rename colliding organ classes (call sites
// and manifest delta follow), freshen vein variables, wrap [vein; entry] in
// a new opaque predicate, insert at the selected site, and union the
// manifest delta. The result must pass well-formedness.
inline lang::Program implant(const lang::Program& host, const Gadget& g, Rng& rng,
                             const sat::PredicateParams& pred_params = {},
                             sat::Cnf3* predicate_out = nullptr) {
  lang::Program out = host;

  // Class collision renaming, applied consistently across the gadget.
  std::map<std::string, std::string> cls_map;
  std::set<std::string> taken;
  for (const auto& c : out.classes) taken.insert(c.name);
  std::vector<lang::Class> organ = g.organ;
  for (auto& c : organ) {
    if (!taken.count(c.name)) {
      taken.insert(c.name);
      continue;
    }
    std::string fresh;
    do {
      fresh = c.name + "_t" + to_hex(rng.next()).substr(12);
    } while (taken.count(fresh));
    cls_map[c.name] = fresh;
    taken.insert(fresh);
    c.name = fresh;
  }
  lang::Block vein = g.vein;
  lang::Stmt entry = g.entry;
  if (!cls_map.empty()) {
    for (auto& c : organ)
      for (auto& f : c.functions) transplant_detail::rename_calls(f.body, cls_map);
    transplant_detail::rename_calls(vein, cls_map);
    lang::Block entry_wrap{entry};
    transplant_detail::rename_calls(entry_wrap, cls_map);
    entry = entry_wrap[0];
  }

  ImplantSite site = select_implant_site(out, g, rng);
  lang::Function* target_fn = nullptr;
  if (lang::Class* c = out.find_class(site.cls)) {
    for (auto& f : c->functions)
      if (f.name == site.fn) target_fn = &f;
  }
  if (!target_fn) throw ImplantError("implant site vanished");

  // Fresh names for everything the guard executes.
  std::set<std::string> used = transplant_detail::function_var_names(*target_fn);
  std::string prefix;
  do {
    prefix = "op_" + to_hex(rng.next()).substr(11);
  } while (used.count(prefix + "_bits") || used.count(prefix + "_ok"));

  std::map<std::string, std::string> var_map;
  for (const lang::Stmt& s : vein) {
    if (s.kind == lang::StmtKind::Assign && !var_map.count(s.target))
      var_map[s.target] = prefix + "_v" + std::to_string(var_map.size());
    if (!s.dst.empty() && !var_map.count(s.dst))
      var_map[s.dst] = prefix + "_v" + std::to_string(var_map.size());
  }
  transplant_detail::rename_vars(vein, var_map);
  lang::Block entry_wrap{entry};
  transplant_detail::rename_vars(entry_wrap, var_map);
  entry = entry_wrap[0];
  entry.dst.clear();  // the organ's return value has no consumer in the host

  sat::OpaquePredicate pred = sat::generate_opaque_predicate(pred_params, rng, prefix);
  if (predicate_out) *predicate_out = pred.cnf;
  lang::Block payload = vein;
  payload.push_back(entry);
  lang::Block guarded = sat::emit_guarded(pred, std::move(payload));

  if (site.position > transplant_detail::insertable_limit(target_fn->body))
    throw ImplantError("insertion position out of range");
  target_fn->body.insert(target_fn->body.begin() + static_cast<long>(site.position),
                         guarded.begin(), guarded.end());

  for (auto& c : organ) {
    if (out.find_class(c.name)) throw ImplantError("class rename failed to deduplicate");
    out.classes.push_back(std::move(c));
  }
  for (const auto& cap : g.manifest_delta.capabilities) out.manifest.capabilities.insert(cap);
  for (const auto& url : g.manifest_delta.endpoints) out.manifest.endpoints.insert(url);
  for (auto comp : g.manifest_delta.components) {
    auto it = cls_map.find(comp.second);
    if (it != cls_map.end()) comp.second = it->second;
    out.manifest.components.insert(std::move(comp));
  }
  // Intent entries register externally triggered entry points and are never
  // transplanted.
  if (!g.manifest_delta.intents.empty())
    throw ImplantError("gadget carries intent manifest entries");

  if (!lang::is_well_formed(out)) throw ImplantError("implantation broke well-formedness");
  return out;
}

}  // namespace apg
