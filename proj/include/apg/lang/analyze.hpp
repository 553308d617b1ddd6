#pragma once

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "apg/lang/ast.hpp"

namespace apg::lang {

// Convention: an api call `ns.op(...)` references capability CAP_<NS>.
inline std::string api_namespace(const std::string& api_name) {
  auto dot = api_name.find('.');
  return dot == std::string::npos ? api_name : api_name.substr(0, dot);
}

inline std::string capability_for_namespace(const std::string& ns) {
  std::string cap = "CAP_";
  for (char c : ns) cap += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return cap;
}

inline std::string capability_for_api(const std::string& api_name) {
  return capability_for_namespace(api_namespace(api_name));
}

namespace detail {

template <class Fn>
void walk_stmts(const Block& b, Fn&& fn) {
  for (const Stmt& s : b) {
    fn(s);
    walk_stmts(s.block_a, fn);
    walk_stmts(s.block_b, fn);
  }
}

template <class Fn>
void walk_exprs(const Expr& e, Fn&& fn) {
  fn(e);
  for (const Expr& k : e.kids) walk_exprs(k, fn);
}

template <class Fn>
void walk_stmt_exprs(const Stmt& s, Fn&& fn) {
  for (const Expr& a : s.args) walk_exprs(a, fn);
}

}  // namespace detail

// 1 + number of decision points (if, while), the decision-point form of
// cyclomatic complexity.
inline int cyclomatic_complexity(const Function& f) {
  int decisions = 0;
  detail::walk_stmts(f.body, [&](const Stmt& s) {
    if (s.kind == StmtKind::If || s.kind == StmtKind::While) ++decisions;
  });
  return 1 + decisions;
}

inline std::string qualified(const std::string& cls, const std::string& fn) {
  return cls + "." + fn;
}

// Statement ids are (function, path) pairs; the path indexes nested blocks.
struct StmtRef {
  std::string function;        // qualified Class.fn
  std::vector<int> path;       // child indices from the body root
  auto operator<=>(const StmtRef&) const = default;
};

struct DepGraph {
  std::map<std::string, std::set<std::string>> call_edges;      // fn -> callees
  std::map<std::string, std::string> manifest_refs;             // component name -> class
  std::map<std::string, std::vector<std::pair<StmtRef, StmtRef>>> def_use;  // per function

  bool has_call_edge(const std::string& from, const std::string& to) const {
    auto it = call_edges.find(from);
    return it != call_edges.end() && it->second.count(to) > 0;
  }
};

namespace detail {

inline void collect_uses(const Expr& e, std::set<std::string>& out) {
  walk_exprs(e, [&](const Expr& x) {
    if (x.kind == ExprKind::Var) out.insert(x.str_val);
  });
}

inline void def_use_block(const Block& b, const std::string& fq, StmtRef prefix,
                          std::map<std::string, StmtRef>& last_def,
                          std::vector<std::pair<StmtRef, StmtRef>>& edges) {
  for (int i = 0; i < static_cast<int>(b.size()); ++i) {
    const Stmt& s = b[i];
    StmtRef ref = prefix;
    ref.path.push_back(i);
    std::set<std::string> uses;
    for (const Expr& a : s.args) collect_uses(a, uses);
    for (const auto& v : uses) {
      auto it = last_def.find(v);
      if (it != last_def.end()) edges.emplace_back(it->second, ref);
    }
    // Nested blocks see the defs so far; their defs are treated as visible
    // afterwards (over-approximation, fine for slicing and reachability).
    if (s.kind == StmtKind::If || s.kind == StmtKind::While) {
      def_use_block(s.block_a, fq, ref, last_def, edges);
      def_use_block(s.block_b, fq, ref, last_def, edges);
    }
    if (s.kind == StmtKind::Assign) last_def[s.target] = ref;
    if ((s.kind == StmtKind::Call || s.kind == StmtKind::Api) && !s.dst.empty())
      last_def[s.dst] = ref;
  }
}

}  // namespace detail

inline DepGraph dependency_graph(const Program& p) {
  DepGraph g;
  for (const auto& [kind, name] : p.manifest.components)
    if (p.find_class(name)) g.manifest_refs[name] = name;
  for (const Class& c : p.classes) {
    for (const Function& f : c.functions) {
      std::string fq = qualified(c.name, f.name);
      g.call_edges[fq];  // ensure node
      detail::walk_stmts(f.body, [&](const Stmt& s) {
        if (s.kind == StmtKind::Call) g.call_edges[fq].insert(qualified(s.cls, s.fn));
      });
      std::map<std::string, StmtRef> last_def;
      for (const auto& param : f.params) last_def[param] = StmtRef{fq, {-1}};
      detail::def_use_block(f.body, fq, StmtRef{fq, {}}, last_def, g.def_use[fq]);
    }
  }
  return g;
}

// Functions transitively callable from the entry point.
inline std::set<std::string> reachable_functions(const Program& p) {
  DepGraph g = dependency_graph(p);
  std::set<std::string> seen;
  std::deque<std::string> work;
  std::string entry = qualified(p.entry_class, p.entry_fn);
  if (p.find_function(p.entry_class, p.entry_fn)) {
    seen.insert(entry);
    work.push_back(entry);
  }
  while (!work.empty()) {
    std::string cur = work.front();
    work.pop_front();
    auto it = g.call_edges.find(cur);
    if (it == g.call_edges.end()) continue;
    for (const auto& next : it->second) {
      auto dot = next.find('.');
      if (!p.find_function(next.substr(0, dot), next.substr(dot + 1))) continue;
      if (seen.insert(next).second) work.push_back(next);
    }
  }
  return seen;
}

inline std::set<std::string> reachable_classes(const Program& p) {
  std::set<std::string> out;
  for (const auto& fq : reachable_functions(p)) out.insert(fq.substr(0, fq.find('.')));
  return out;
}

// Static scans used by feature extraction and transplantation.
inline std::set<std::string> api_names(const Block& b) {
  std::set<std::string> out;
  detail::walk_stmts(b, [&](const Stmt& s) {
    if (s.kind == StmtKind::Api) out.insert(s.target);
  });
  return out;
}

inline std::set<std::string> api_names(const Program& p) {
  std::set<std::string> out;
  for (const Class& c : p.classes)
    for (const Function& f : c.functions)
      for (auto& n : api_names(f.body)) out.insert(n);
  return out;
}

inline std::set<std::string> string_literals(const Block& b) {
  std::set<std::string> out;
  detail::walk_stmts(b, [&](const Stmt& s) {
    detail::walk_stmt_exprs(s, [&](const Expr& e) {
      if (e.kind == ExprKind::StrLit) out.insert(e.str_val);
    });
  });
  return out;
}

inline bool capability_referenced(const Program& p, const std::string& cap) {
  for (const auto& name : api_names(p))
    if (capability_for_api(name) == cap) return true;
  return false;
}

struct Issue {
  std::string where;
  std::string what;
};

namespace detail {

// Forward must-define analysis: a variable is usable only where it has been
// assigned on every path. If-branch defs survive only when both branches
// define; while bodies may run zero times so their defs do not escape.
inline void check_defined(const Block& b, std::set<std::string> defined,
                          const std::string& where, std::vector<Issue>& issues,
                          std::set<std::string>* defined_out) {
  for (const Stmt& s : b) {
    std::set<std::string> uses;
    for (const Expr& a : s.args) collect_uses(a, uses);
    for (const auto& v : uses)
      if (!defined.count(v)) issues.push_back({where, "variable '" + v + "' may be undefined"});
    if (s.kind == StmtKind::If) {
      std::set<std::string> then_out, else_out;
      check_defined(s.block_a, defined, where, issues, &then_out);
      check_defined(s.block_b, defined, where, issues, &else_out);
      for (const auto& v : then_out)
        if (else_out.count(v)) defined.insert(v);
    } else if (s.kind == StmtKind::While) {
      check_defined(s.block_a, defined, where, issues, nullptr);
    } else if (s.kind == StmtKind::Assign) {
      defined.insert(s.target);
    } else if ((s.kind == StmtKind::Call || s.kind == StmtKind::Api) && !s.dst.empty()) {
      defined.insert(s.dst);
    }
  }
  if (defined_out) *defined_out = std::move(defined);
}

}  // namespace detail

inline std::vector<Issue> validate(const Program& p) {
  std::vector<Issue> issues;
  for (const auto& [kind, name] : p.manifest.components)
    if (!p.find_class(name))
      issues.push_back({"manifest", std::string(component_kind_name(kind)) + " '" + name +
                                        "' has no declared class"});
  const Function* entry = p.find_function(p.entry_class, p.entry_fn);
  if (!entry) {
    issues.push_back({"entry", "entry function " + qualified(p.entry_class, p.entry_fn) +
                                   " is not declared"});
  } else if (entry->params.size() != 1) {
    issues.push_back({"entry", "entry function must take exactly the program input"});
  }
  for (const Class& c : p.classes) {
    for (const Function& f : c.functions) {
      std::string fq = qualified(c.name, f.name);
      detail::walk_stmts(f.body, [&](const Stmt& s) {
        if (s.kind != StmtKind::Call) return;
        const Function* callee = p.find_function(s.cls, s.fn);
        if (!callee)
          issues.push_back({fq, "call to undeclared function " + qualified(s.cls, s.fn)});
        else if (callee->params.size() != s.args.size())
          issues.push_back({fq, "arity mismatch calling " + qualified(s.cls, s.fn)});
      });
      std::set<std::string> defined(f.params.begin(), f.params.end());
      detail::check_defined(f.body, std::move(defined), fq, issues, nullptr);
    }
  }
  return issues;
}

inline bool is_well_formed(const Program& p) { return validate(p).empty(); }

}  // namespace apg::lang
