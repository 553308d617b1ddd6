#pragma once

#include <set>
#include <string>
#include <vector>

#include "apg/lang/analyze.hpp"
#include "apg/lang/ast.hpp"

namespace apg::lang {

namespace detail {

inline bool is_literal(const Expr& e) {
  return e.kind == ExprKind::IntLit || e.kind == ExprKind::BoolLit || e.kind == ExprKind::StrLit;
}

// Bottom-up folding over literals only. No variable propagation; the
// runtime random source is opaque and never evaluated statically.
inline Expr fold_expr(Expr e) {
  for (Expr& k : e.kids) k = fold_expr(std::move(k));
  switch (e.kind) {
    case ExprKind::Unary: {
      const Expr& a = e.kids[0];
      if (e.un == UnOp::Not && a.kind == ExprKind::BoolLit) return Expr::make_bool(!a.bool_val);
      if (e.un == UnOp::Neg && a.kind == ExprKind::IntLit) return Expr::make_int(-a.int_val);
      return e;
    }
    case ExprKind::Binary: {
      const Expr& a = e.kids[0];
      const Expr& b = e.kids[1];
      // Short-circuit folds are exact: the right side is never evaluated.
      if (e.bin == BinOp::And && a.kind == ExprKind::BoolLit && !a.bool_val)
        return Expr::make_bool(false);
      if (e.bin == BinOp::Or && a.kind == ExprKind::BoolLit && a.bool_val)
        return Expr::make_bool(true);
      if (!is_literal(a) || !is_literal(b)) return e;
      if ((e.bin == BinOp::Eq || e.bin == BinOp::Ne) && a.kind == b.kind) {
        bool eq = a == b;
        return Expr::make_bool(e.bin == BinOp::Eq ? eq : !eq);
      }
      if (a.kind != ExprKind::IntLit || b.kind != ExprKind::IntLit) return e;
      int64_t x = a.int_val, y = b.int_val;
      switch (e.bin) {
        case BinOp::Add: return Expr::make_int(x + y);
        case BinOp::Sub: return Expr::make_int(x - y);
        case BinOp::Mul: return Expr::make_int(x * y);
        case BinOp::Div:
          if (y == 0) return e;  // keep the runtime fault
          return Expr::make_int(x / y);
        case BinOp::Mod:
          if (y == 0) return e;
          return Expr::make_int(x % y);
        case BinOp::Lt: return Expr::make_bool(x < y);
        case BinOp::Le: return Expr::make_bool(x <= y);
        case BinOp::Gt: return Expr::make_bool(x > y);
        case BinOp::Ge: return Expr::make_bool(x >= y);
        default: return e;
      }
    }
    default: return e;
  }
}

inline bool literal_condition(const Expr& e, bool& value) {
  if (e.kind == ExprKind::BoolLit) {
    value = e.bool_val;
    return true;
  }
  if (e.kind == ExprKind::IntLit) {
    value = e.int_val != 0;
    return true;
  }
  return false;
}

inline Block simplify_block(const Block& in) {
  Block out;
  for (const Stmt& s0 : in) {
    Stmt s = s0;
    for (Expr& a : s.args) a = fold_expr(std::move(a));
    if (s.kind == StmtKind::If) {
      s.block_a = simplify_block(s.block_a);
      s.block_b = simplify_block(s.block_b);
      bool cond;
      if (literal_condition(s.expr(), cond)) {
        const Block& taken = cond ? s.block_a : s.block_b;
        out.insert(out.end(), taken.begin(), taken.end());
        continue;
      }
    } else if (s.kind == StmtKind::While) {
      s.block_a = simplify_block(s.block_a);
      bool cond;
      if (literal_condition(s.expr(), cond) && !cond) continue;
    }
    out.push_back(std::move(s));
    if (out.back().kind == StmtKind::Return) break;  // trailing statements are unreachable
  }
  return out;
}

// An expression safe to drop: pure and free of runtime faults and random
// draws. Indexing and division stay because they can fault; random calls
// stay because removing them would shift the seeded stream.
inline bool removable(const Expr& e) {
  switch (e.kind) {
    case ExprKind::RndBools:
    case ExprKind::RndInt:
    case ExprKind::Index: return false;
    case ExprKind::Binary:
      if (e.bin == BinOp::Div || e.bin == BinOp::Mod) return false;
      break;
    default: break;
  }
  for (const Expr& k : e.kids)
    if (!removable(k)) return false;
  return true;
}

inline void collect_reads(const Block& b, std::set<std::string>& reads) {
  walk_stmts(b, [&](const Stmt& s) {
    for (const Expr& a : s.args) collect_uses(a, reads);
  });
}

inline Block drop_dead_assigns(const Block& in, const std::set<std::string>& reads) {
  Block out;
  for (const Stmt& s : in) {
    if (s.kind == StmtKind::Assign && !reads.count(s.target) && removable(s.expr())) continue;
    Stmt t = s;
    t.block_a = drop_dead_assigns(t.block_a, reads);
    t.block_b = drop_dead_assigns(t.block_b, reads);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

// Fixpoint preprocessing pass: folds literal expressions, strips branches
// with statically false conditions, removes functions and classes not
// reachable from the entry point, drops manifest component entries whose
// class is gone, deletes capabilities no remaining api statement references,
// and removes assignments to variables the function never reads.
inline Program eliminate_dead_code(const Program& input) {
  Program p = input;
  for (int round = 0; round < 64; ++round) {
    Program before = p;

    for (Class& c : p.classes)
      for (Function& f : c.functions) {
        f.body = detail::simplify_block(f.body);
        std::set<std::string> reads;
        detail::collect_reads(f.body, reads);
        f.body = detail::drop_dead_assigns(f.body, reads);
      }

    std::set<std::string> live = reachable_functions(p);
    for (Class& c : p.classes)
      std::erase_if(c.functions,
                    [&](const Function& f) { return !live.count(qualified(c.name, f.name)); });
    std::erase_if(p.classes, [](const Class& c) { return c.functions.empty(); });

    std::erase_if(p.manifest.components,
                  [&](const auto& comp) { return p.find_class(comp.second) == nullptr; });

    std::set<std::string> referenced;
    for (const auto& name : api_names(p)) referenced.insert(capability_for_api(name));
    std::erase_if(p.manifest.capabilities,
                  [&](const std::string& cap) { return !referenced.count(cap); });

    if (p == before) break;
  }
  return p;
}

}  // namespace apg::lang
