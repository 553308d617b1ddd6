#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "apg/common.hpp"
#include "apg/lang/ast.hpp"
#include "apg/sat/cnf.hpp"
#include "apg/sat/dpll.hpp"

namespace apg::sat {

struct PredicateParams {
  int n = 40;
  int m = 184;  // clause/variable ratio ~4.6, above the unsat threshold
  double jitter = 0.10;
  uint64_t dpll_budget = 4'000'000;
};

// An always-false guard: a DPLL-verified unsatisfiable random 3-SAT formula
// baked into minilang statements. At runtime the guard fills a boolean array
// from the random source, evaluates each clause against constant indices and
// polarities, ANDs the results and branches on the final flag; since the
// formula has no model the branch can never be taken.
struct OpaquePredicate {
  Cnf3 cnf;
  std::string bits_var;
  std::string flag_var;
  lang::Block setup;  // array fill + clause conjunction, sans the branch
};

namespace detail {

inline lang::Expr literal_expr(const std::string& bits_var, const Lit& l) {
  lang::Expr idx = lang::Expr::make_index(lang::Expr::make_var(bits_var),
                                          lang::Expr::make_int(l.var));
  return l.neg ? lang::Expr::make_unary(lang::UnOp::Not, std::move(idx)) : idx;
}

inline int jittered(int base, double jitter, Rng& rng) {
  int span = static_cast<int>(base * jitter);
  return static_cast<int>(rng.range(base - span, base + span));
}

}  // namespace detail

inline lang::Block predicate_setup(const Cnf3& cnf, const std::string& bits_var,
                                   const std::string& flag_var) {
  lang::Block setup;
  setup.push_back(lang::Stmt::make_assign(
      bits_var, lang::Expr::make_rnd_bools(lang::Expr::make_int(cnf.n))));
  setup.push_back(lang::Stmt::make_assign(flag_var, lang::Expr::make_bool(true)));
  for (const Clause3& c : cnf.clauses) {
    lang::Expr clause = lang::Expr::make_binary(
        lang::BinOp::Or,
        lang::Expr::make_binary(lang::BinOp::Or, detail::literal_expr(bits_var, c.lits[0]),
                                detail::literal_expr(bits_var, c.lits[1])),
        detail::literal_expr(bits_var, c.lits[2]));
    setup.push_back(lang::Stmt::make_assign(
        flag_var, lang::Expr::make_binary(lang::BinOp::And, lang::Expr::make_var(flag_var),
                                          std::move(clause))));
  }
  return setup;
}

// Draw formulas at the jittered parameters until one passes every filter:
// not Horn, not 2-SAT-reducible, and DPLL-verified unsatisfiable. At ratio
// ~4.6 nearly every raw draw is already unsatisfiable, so the loop is short.
inline OpaquePredicate generate_opaque_predicate(const PredicateParams& params, Rng& rng,
                                                 const std::string& var_prefix) {
  int n = detail::jittered(params.n, params.jitter, rng);
  int m = detail::jittered(params.m, params.jitter, rng);
  OpaquePredicate p;
  while (true) {
    Cnf3 f = generate_random_3sat(n, m, rng);
    if (is_horn(f) || two_sat_reducible(f)) continue;
    if (is_satisfiable(f, params.dpll_budget).verdict != SatVerdict::Unsat) continue;
    p.cnf = std::move(f);
    break;
  }
  p.bits_var = var_prefix + "_bits";
  p.flag_var = var_prefix + "_ok";
  p.setup = predicate_setup(p.cnf, p.bits_var, p.flag_var);
  return p;
}

inline lang::Block emit_guarded(const OpaquePredicate& p, lang::Block body) {
  lang::Block out = p.setup;
  out.push_back(lang::Stmt::make_if(lang::Expr::make_var(p.flag_var), std::move(body)));
  return out;
}

// Mirror of what the interpreter computes for an emitted guard when the
// guard is the first consumer of the runtime random source: draw cnf.n
// booleans in index order, then evaluate the formula.
inline bool guard_branch_taken(const Cnf3& cnf, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> assign(static_cast<size_t>(cnf.n));
  for (auto& b : assign) b = static_cast<uint8_t>(rng() & 1);
  return eval_cnf(cnf, assign);
}

// Fraction of raw (unfiltered) draws that are unsatisfiable at m =
// round(ratio*n). Exhaustive evaluation below 21 variables, DPLL above.
inline double measure_unsat_fraction(int n, double ratio, int trials, uint64_t seed) {
  int m = static_cast<int>(ratio * n + 0.5);
  Rng rng(seed);
  int unsat = 0;
  for (int t = 0; t < trials; ++t) {
    Cnf3 f = generate_random_3sat(n, m, rng);
    bool sat;
    if (n <= 20) {
      sat = exhaustive_satisfiable(f);
    } else {
      auto r = is_satisfiable(f, uint64_t{50'000'000});
      if (r.verdict == SatVerdict::BudgetExceeded)
        throw ContractViolation("solver budget exceeded while measuring");
      sat = r.verdict == SatVerdict::Sat;
    }
    if (!sat) ++unsat;
  }
  return static_cast<double>(unsat) / static_cast<double>(trials);
}

}  // namespace apg::sat
