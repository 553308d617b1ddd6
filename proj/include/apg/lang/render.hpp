#pragma once

#include <string>

#include "apg/lang/ast.hpp"

namespace apg::lang {

namespace detail {

inline int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 3;
    case BinOp::Add:
    case BinOp::Sub: return 4;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 5;
  }
  return 0;
}

inline const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
  }
  return "?";
}

inline int expr_prec(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Binary: return binop_prec(e.bin);
    case ExprKind::Unary: return 6;
    case ExprKind::IntLit:
      // A negative literal prints with a leading minus, so as an indexing
      // base it needs parens to re-parse into the same tree.
      return e.int_val < 0 ? 6 : 8;
    default: return 8;  // literals, vars, indexing, random calls self-delimit
  }
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_expr(const Expr& e);

inline std::string child(const Expr& c, int parent_prec, bool tight) {
  std::string s = render_expr(c);
  int p = expr_prec(c);
  if (p < parent_prec || (tight && p == parent_prec)) return "(" + s + ")";
  return s;
}

inline std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::IntLit: return std::to_string(e.int_val);
    case ExprKind::BoolLit: return e.bool_val ? "true" : "false";
    case ExprKind::StrLit: return "\"" + escape(e.str_val) + "\"";
    case ExprKind::Var: return e.str_val;
    case ExprKind::Binary: {
      int p = binop_prec(e.bin);
      // Left-associative: the right child needs parens at equal precedence.
      // Comparisons do not chain, so both sides wrap at equal precedence.
      bool cmp = p == 3;
      return child(e.kids[0], p, cmp) + " " + binop_text(e.bin) + " " + child(e.kids[1], p, true);
    }
    case ExprKind::Unary: {
      std::string op = e.un == UnOp::Not ? "not " : "-";
      return op + child(e.kids[0], 6, false);
    }
    case ExprKind::Index:
      return child(e.kids[0], 8, false) + "[" + render_expr(e.kids[1]) + "]";
    case ExprKind::RndBools: return "rnd_bools(" + render_expr(e.kids[0]) + ")";
    case ExprKind::RndInt: return "rnd_int(" + render_expr(e.kids[0]) + ")";
  }
  return "?";
}

inline std::string render_args(const std::vector<Expr>& args) {
  std::string out = "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += render_expr(args[i]);
  }
  return out + ")";
}

inline void render_block(std::string& out, const Block& b, int depth);

inline void render_stmt(std::string& out, const Stmt& s, int depth) {
  std::string ind(static_cast<size_t>(depth) * 2, ' ');
  switch (s.kind) {
    case StmtKind::Assign:
      out += ind + s.target + " = " + render_expr(s.expr()) + "\n";
      break;
    case StmtKind::Call:
      out += ind + (s.dst.empty() ? "" : s.dst + " = ") + "call " + s.cls + "." + s.fn +
             render_args(s.args) + "\n";
      break;
    case StmtKind::Api:
      out += ind + (s.dst.empty() ? "" : s.dst + " = ") + "api " + s.target +
             render_args(s.args) + "\n";
      break;
    case StmtKind::Emit:
      out += ind + "emit " + render_expr(s.expr()) + "\n";
      break;
    case StmtKind::Return:
      out += ind + "return " + render_expr(s.expr()) + "\n";
      break;
    case StmtKind::If:
      out += ind + "if " + render_expr(s.expr()) + " {\n";
      render_block(out, s.block_a, depth + 1);
      if (!s.block_b.empty()) {
        out += ind + "} else {\n";
        render_block(out, s.block_b, depth + 1);
      }
      out += ind + "}\n";
      break;
    case StmtKind::While:
      out += ind + "while " + render_expr(s.expr()) + " {\n";
      render_block(out, s.block_a, depth + 1);
      out += ind + "}\n";
      break;
  }
}

inline void render_block(std::string& out, const Block& b, int depth) {
  for (const Stmt& s : b) render_stmt(out, s, depth);
}

inline void render_manifest(std::string& out, const Manifest& m) {
  out += "manifest {\n";
  for (const auto& c : m.capabilities) out += "  capability " + c + "\n";
  for (const auto& [kind, name] : m.components)
    out += std::string("  component ") + component_kind_name(kind) + " " + name + "\n";
  for (const auto& i : m.intents) out += "  intent " + i + "\n";
  for (const auto& e : m.endpoints) out += "  endpoint \"" + escape(e) + "\"\n";
  out += "}\n";
}

inline void render_class(std::string& out, const Class& c) {
  out += "class " + c.name + " {\n";
  for (const auto& f : c.functions) {
    out += "  fn " + f.name + "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) out += ", ";
      out += f.params[i];
    }
    out += ") {\n";
    render_block(out, f.body, 2);
    out += "  }\n";
  }
  out += "}\n";
}

}  // namespace detail

inline std::string render(const Program& p) {
  std::string out = "program\n";
  detail::render_manifest(out, p.manifest);
  for (const auto& c : p.classes) detail::render_class(out, c);
  out += "entry " + p.entry_class + "." + p.entry_fn + "\n";
  return out;
}

inline std::string render_stmt(const Stmt& s) {
  std::string out;
  detail::render_stmt(out, s, 0);
  return out;
}

inline std::string render_block(const Block& b, int depth = 0) {
  std::string out;
  detail::render_block(out, b, depth);
  return out;
}

}  // namespace apg::lang
