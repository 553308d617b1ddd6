#pragma once

#include <cstdint>
#include <vector>

#include "apg/sat/cnf.hpp"

namespace apg::sat {

enum class SatVerdict { Sat, Unsat, BudgetExceeded };

struct SatResult {
  SatVerdict verdict = SatVerdict::BudgetExceeded;
  std::vector<uint8_t> model;  // populated on Sat, verified by evaluation
};

namespace detail {

// Classic DPLL with unit propagation and pure-literal elimination. The
// budget bounds branch decisions; formulas here are tiny (n around 40)
// so no watched-literal machinery is needed.
class Dpll {
 public:
  Dpll(const Cnf3& f, uint64_t budget) : f_(f), budget_(budget) {
    assign_.assign(static_cast<size_t>(f.n), Unset);
  }

  SatResult run() {
    SatResult r;
    switch (search()) {
      case Outcome::Sat: {
        r.verdict = SatVerdict::Sat;
        r.model.assign(assign_.size(), 0);
        for (size_t i = 0; i < assign_.size(); ++i) r.model[i] = assign_[i] == True ? 1 : 0;
        if (!eval_cnf(f_, r.model))
          throw std::logic_error("dpll produced a non-model");  // checked before returning
        return r;
      }
      case Outcome::Unsat: r.verdict = SatVerdict::Unsat; return r;
      case Outcome::Budget: r.verdict = SatVerdict::BudgetExceeded; return r;
    }
    return r;
  }

 private:
  enum State : int8_t { False = 0, True = 1, Unset = -1 };
  enum class Outcome { Sat, Unsat, Budget };
  enum class ClauseState { Satisfied, Falsified, Unit, Open };

  ClauseState clause_state(const Clause3& c, Lit* unit) const {
    int unassigned = 0;
    for (const Lit& l : c.lits) {
      State s = assign_[l.var];
      if (s == Unset) {
        ++unassigned;
        *unit = l;
      } else if ((s == True) != l.neg) {
        return ClauseState::Satisfied;  // literal true
      }
    }
    if (unassigned == 0) return ClauseState::Falsified;
    if (unassigned == 1) return ClauseState::Unit;
    return ClauseState::Open;
  }

  // Unit propagation to fixpoint; records the trail for backtracking.
  bool propagate(std::vector<uint16_t>& trail) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Clause3& c : f_.clauses) {
        Lit unit;
        switch (clause_state(c, &unit)) {
          case ClauseState::Falsified: return false;
          case ClauseState::Unit:
            assign_[unit.var] = unit.neg ? False : True;
            trail.push_back(unit.var);
            changed = true;
            break;
          default: break;
        }
      }
    }
    return true;
  }

  // Assign variables that appear with a single polarity among clauses not
  // yet satisfied.
  void pure_literals(std::vector<uint16_t>& trail) {
    std::vector<uint8_t> pos(assign_.size(), 0), neg(assign_.size(), 0);
    for (const Clause3& c : f_.clauses) {
      Lit unit;
      if (clause_state(c, &unit) == ClauseState::Satisfied) continue;
      for (const Lit& l : c.lits) {
        if (assign_[l.var] != Unset) continue;
        (l.neg ? neg : pos)[l.var] = 1;
      }
    }
    for (uint16_t v = 0; v < assign_.size(); ++v) {
      if (assign_[v] != Unset) continue;
      if (pos[v] && !neg[v]) {
        assign_[v] = True;
        trail.push_back(v);
      } else if (neg[v] && !pos[v]) {
        assign_[v] = False;
        trail.push_back(v);
      }
    }
  }

  int pick_branch_var() const {
    // Most occurrences among unresolved clauses.
    std::vector<int> count(assign_.size(), 0);
    for (const Clause3& c : f_.clauses) {
      Lit unit;
      if (clause_state(c, &unit) == ClauseState::Satisfied) continue;
      for (const Lit& l : c.lits)
        if (assign_[l.var] == Unset) ++count[l.var];
    }
    int best = -1, best_count = 0;
    for (size_t v = 0; v < count.size(); ++v) {
      if (assign_[v] == Unset && count[v] > best_count) {
        best = static_cast<int>(v);
        best_count = count[v];
      }
    }
    return best;
  }

  bool all_satisfied() const {
    for (const Clause3& c : f_.clauses) {
      Lit unit;
      if (clause_state(c, &unit) != ClauseState::Satisfied) return false;
    }
    return true;
  }

  Outcome search() {
    std::vector<uint16_t> trail;
    if (!propagate(trail)) {
      undo(trail);
      return Outcome::Unsat;
    }
    pure_literals(trail);
    if (all_satisfied()) {
      // Leftover unset variables are free; fix them false.
      for (auto& s : assign_)
        if (s == Unset) s = False;
      return Outcome::Sat;
    }
    int v = pick_branch_var();
    if (v < 0) {
      undo(trail);
      return Outcome::Unsat;  // unresolved clauses but nothing to assign
    }
    if (budget_ == 0) {
      undo(trail);
      return Outcome::Budget;
    }
    --budget_;
    for (State s : {True, False}) {
      assign_[v] = s;
      Outcome o = search();
      if (o == Outcome::Sat || o == Outcome::Budget) {
        if (o == Outcome::Budget) {
          assign_[v] = Unset;
          undo(trail);
        }
        return o;
      }
      assign_[v] = Unset;
    }
    undo(trail);
    return Outcome::Unsat;
  }

  void undo(std::vector<uint16_t>& trail) {
    for (uint16_t v : trail) assign_[v] = Unset;
    trail.clear();
  }

  const Cnf3& f_;
  uint64_t budget_;
  std::vector<State> assign_;
};

}  // namespace detail

inline SatResult is_satisfiable(const Cnf3& f, uint64_t budget = 1'000'000) {
  return detail::Dpll(f, budget).run();
}

}  // namespace apg::sat
