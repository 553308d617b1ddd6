#pragma once

#include <string>
#include <vector>

#include "apg/features.hpp"
#include "apg/lang/analyze.hpp"
#include "apg/lang/ast.hpp"

namespace apg::lang {

// Feature names are family-prefixed: cap::X, activity::X, service::X,
// receiver::X, provider::X, intent::X (all manifest entries), api::ns.op
// (static occurrence in code), url::https://... (manifest endpoint).
inline std::string feature_capability(const std::string& cap) { return "cap::" + cap; }
inline std::string feature_component(ComponentKind k, const std::string& name) {
  return std::string(component_kind_name(k)) + "::" + name;
}
inline std::string feature_intent(const std::string& intent) { return "intent::" + intent; }
inline std::string feature_api(const std::string& api) { return "api::" + api; }
inline std::string feature_endpoint(const std::string& url) { return "url::" + url; }

// The feature mapping: purely syntactic presence bits over a closed
// vocabulary; names outside the vocabulary are ignored.
inline FeatureVector extract_features(const Program& p, const FeatureVocabulary& vocab) {
  std::vector<uint32_t> pos;
  auto add = [&](const std::string& name) {
    if (auto i = vocab.find(name)) pos.push_back(*i);
  };
  for (const auto& c : p.manifest.capabilities) add(feature_capability(c));
  for (const auto& [kind, name] : p.manifest.components) add(feature_component(kind, name));
  for (const auto& i : p.manifest.intents) add(feature_intent(i));
  for (const auto& e : p.manifest.endpoints) add(feature_endpoint(e));
  for (const auto& a : api_names(p)) add(feature_api(a));
  return FeatureVector::from_positions(std::move(pos));
}

struct SoftwareStats {
  int size = 0;  // statement count, nested included
  double avg_cc = 1.0;
  int capabilities = 0;
  int api_calls = 0;  // api statement occurrences
  int endpoints = 0;
  int activities = 0;
  int services_receivers = 0;
  int intents = 0;
  int providers = 0;

  bool operator==(const SoftwareStats&) const = default;
};

namespace detail {

inline int count_stmts(const Block& b) {
  int n = 0;
  walk_stmts(b, [&](const Stmt&) { ++n; });
  return n;
}

inline int count_api_stmts(const Block& b) {
  int n = 0;
  walk_stmts(b, [&](const Stmt& s) {
    if (s.kind == StmtKind::Api) ++n;
  });
  return n;
}

}  // namespace detail

inline SoftwareStats stats(const Program& p) {
  SoftwareStats s;
  s.capabilities = static_cast<int>(p.manifest.capabilities.size());
  s.endpoints = static_cast<int>(p.manifest.endpoints.size());
  s.intents = static_cast<int>(p.manifest.intents.size());
  for (const auto& [kind, name] : p.manifest.components) {
    switch (kind) {
      case ComponentKind::Activity: ++s.activities; break;
      case ComponentKind::Service:
      case ComponentKind::Receiver: ++s.services_receivers; break;
      case ComponentKind::Provider: ++s.providers; break;
    }
  }
  int functions = 0, cc_sum = 0;
  for (const Class& c : p.classes) {
    for (const Function& f : c.functions) {
      ++functions;
      cc_sum += cyclomatic_complexity(f);
      s.size += detail::count_stmts(f.body);
      s.api_calls += detail::count_api_stmts(f.body);
    }
  }
  s.avg_cc = functions ? static_cast<double>(cc_sum) / functions : 1.0;
  return s;
}

// The minimal injection host: one activity, the launcher intents, and a main
// that echoes its input. Its features are exactly the three baseline entries.
inline Program minimal_program() {
  Program p;
  p.manifest.components.emplace(ComponentKind::Activity, "Main");
  p.manifest.intents.insert("MAIN");
  p.manifest.intents.insert("LAUNCHER");
  Class main_cls;
  main_cls.name = "Main";
  Function f;
  f.name = "main";
  f.params = {"input"};
  f.body.push_back(Stmt::make_emit(Expr::make_var("input")));
  main_cls.functions.push_back(std::move(f));
  p.classes.push_back(std::move(main_cls));
  p.entry_class = "Main";
  p.entry_fn = "main";
  return p;
}

}  // namespace apg::lang
