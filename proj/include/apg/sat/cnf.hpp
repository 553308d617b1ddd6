#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "apg/common.hpp"

namespace apg::sat {

struct Lit {
  uint16_t var = 0;
  bool neg = false;
  bool operator==(const Lit&) const = default;
};

struct Clause3 {
  std::array<Lit, 3> lits;
  bool operator==(const Clause3&) const = default;
};

struct Cnf3 {
  int n = 0;  // variable count
  std::vector<Clause3> clauses;
  bool operator==(const Cnf3&) const = default;
};

// Fixed clause-length model: each clause draws 3 distinct variables
// uniformly without replacement, each literal negated with probability 1/2.
inline Cnf3 generate_random_3sat(int n, int m, Rng& rng) {
  if (n < 3) throw ContractViolation("random 3-sat needs at least 3 variables");
  Cnf3 f;
  f.n = n;
  f.clauses.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    Clause3 c;
    int a = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
    int b = static_cast<int>(rng.below(static_cast<uint64_t>(n - 1)));
    if (b >= a) ++b;
    int d = static_cast<int>(rng.below(static_cast<uint64_t>(n - 2)));
    if (d >= std::min(a, b)) ++d;
    if (d >= std::max(a, b)) ++d;
    c.lits[0] = {static_cast<uint16_t>(a), rng.chance(0.5)};
    c.lits[1] = {static_cast<uint16_t>(b), rng.chance(0.5)};
    c.lits[2] = {static_cast<uint16_t>(d), rng.chance(0.5)};
    f.clauses.push_back(c);
  }
  return f;
}

// Horn formula: at most one positive literal per clause (linear-time SAT).
inline bool is_horn(const Cnf3& f) {
  for (const Clause3& c : f.clauses) {
    int positives = 0;
    for (const Lit& l : c.lits)
      if (!l.neg) ++positives;
    if (positives > 1) return false;
  }
  return true;
}

// Degenerate clauses with fewer than 3 distinct variables collapse towards
// 2CNF, which is polynomially solvable; such formulas are rejected.
inline bool two_sat_reducible(const Cnf3& f) {
  for (const Clause3& c : f.clauses) {
    if (c.lits[0].var == c.lits[1].var || c.lits[0].var == c.lits[2].var ||
        c.lits[1].var == c.lits[2].var)
      return true;
  }
  return false;
}

inline bool eval_clause(const Clause3& c, const std::vector<uint8_t>& assign) {
  for (const Lit& l : c.lits) {
    bool v = assign[l.var] != 0;
    if (l.neg ? !v : v) return true;
  }
  return false;
}

inline bool eval_cnf(const Cnf3& f, const std::vector<uint8_t>& assign) {
  for (const Clause3& c : f.clauses)
    if (!eval_clause(c, assign)) return false;
  return true;
}

// Exhaustive satisfiability over all 2^n assignments via per-variable bit
// masks: one bit per assignment, accumulated with word-wide ANDs.
inline bool exhaustive_satisfiable(const Cnf3& f) {
  if (f.n > 24) throw ContractViolation("exhaustive check limited to n <= 24");
  const size_t bits = size_t{1} << f.n;
  const size_t words = (bits + 63) / 64;

  // var_mask[v] has bit a set iff assignment a sets variable v true:
  // variable v toggles with period 2^(v+1).
  std::vector<std::vector<uint64_t>> var_mask(static_cast<size_t>(f.n));
  for (int v = 0; v < f.n; ++v) {
    auto& mask = var_mask[static_cast<size_t>(v)];
    mask.assign(words, 0);
    if (v < 6) {
      uint64_t pattern = 0;
      for (int bit = 0; bit < 64; ++bit)
        if ((bit >> v) & 1) pattern |= uint64_t{1} << bit;
      for (auto& w : mask) w = pattern;
    } else {
      // Whole words alternate in runs of 2^(v-6).
      size_t run = size_t{1} << (v - 6);
      for (size_t w = 0; w < words; ++w)
        if ((w / run) & 1) mask[w] = ~uint64_t{0};
    }
  }

  std::vector<uint64_t> sat(words, ~uint64_t{0});
  if (bits < 64) sat[0] = (uint64_t{1} << bits) - 1;
  std::vector<uint64_t> clause(words);
  for (const Clause3& c : f.clauses) {
    for (size_t w = 0; w < words; ++w) {
      uint64_t acc = 0;
      for (const Lit& l : c.lits) {
        uint64_t m = var_mask[l.var][w];
        acc |= l.neg ? ~m : m;
      }
      sat[w] &= acc;
    }
    bool any = false;
    for (uint64_t w : sat) any |= (w != 0);
    if (!any) return false;
  }
  for (uint64_t w : sat)
    if (w) return true;
  return false;
}

inline std::string to_dimacs(const Cnf3& f) {
  std::ostringstream out;
  out << "p cnf " << f.n << " " << f.clauses.size() << "\n";
  for (const Clause3& c : f.clauses) {
    for (const Lit& l : c.lits) out << (l.neg ? "-" : "") << (l.var + 1) << " ";
    out << "0\n";
  }
  return out.str();
}

inline Cnf3 from_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  Cnf3 f;
  size_t m = 0;
  while (in >> tok) {
    if (tok == "c") {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (tok == "p") {
      in >> tok;  // "cnf"
      in >> f.n >> m;
      break;
    }
    throw IoError("bad DIMACS header");
  }
  for (size_t i = 0; i < m; ++i) {
    Clause3 c;
    for (int j = 0; j < 3; ++j) {
      long long v;
      if (!(in >> v) || v == 0) throw IoError("DIMACS clause is not 3-ary");
      c.lits[j] = {static_cast<uint16_t>(std::abs(v) - 1), v < 0};
    }
    long long z;
    if (!(in >> z) || z != 0) throw IoError("missing clause terminator");
    f.clauses.push_back(c);
  }
  return f;
}

}  // namespace apg::sat
