#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace apg::lang {

enum class BinOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp { Neg, Not };

enum class ExprKind {
  IntLit,
  BoolLit,
  StrLit,
  Var,
  Binary,
  Unary,
  Index,     // kids[0][kids[1]]
  RndBools,  // kids[0]-length array from the runtime random source
  RndInt,    // uniform in [0, kids[0]) from the runtime random source
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  int64_t int_val = 0;
  bool bool_val = false;
  std::string str_val;  // string literal or variable name
  BinOp bin = BinOp::Add;
  UnOp un = UnOp::Neg;
  std::vector<Expr> kids;

  bool operator==(const Expr&) const = default;

  static Expr make_int(int64_t v) {
    Expr e;
    e.kind = ExprKind::IntLit;
    e.int_val = v;
    return e;
  }
  static Expr make_bool(bool v) {
    Expr e;
    e.kind = ExprKind::BoolLit;
    e.bool_val = v;
    return e;
  }
  static Expr make_str(std::string v) {
    Expr e;
    e.kind = ExprKind::StrLit;
    e.str_val = std::move(v);
    return e;
  }
  static Expr make_var(std::string name) {
    Expr e;
    e.kind = ExprKind::Var;
    e.str_val = std::move(name);
    return e;
  }
  static Expr make_binary(BinOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = ExprKind::Binary;
    e.bin = op;
    e.kids.push_back(std::move(lhs));
    e.kids.push_back(std::move(rhs));
    return e;
  }
  static Expr make_unary(UnOp op, Expr operand) {
    // Canonical form: negation of an integer literal is a negative literal.
    if (op == UnOp::Neg && operand.kind == ExprKind::IntLit)
      return make_int(-operand.int_val);
    Expr e;
    e.kind = ExprKind::Unary;
    e.un = op;
    e.kids.push_back(std::move(operand));
    return e;
  }
  static Expr make_index(Expr arr, Expr idx) {
    Expr e;
    e.kind = ExprKind::Index;
    e.kids.push_back(std::move(arr));
    e.kids.push_back(std::move(idx));
    return e;
  }
  static Expr make_rnd_bools(Expr n) {
    Expr e;
    e.kind = ExprKind::RndBools;
    e.kids.push_back(std::move(n));
    return e;
  }
  static Expr make_rnd_int(Expr bound) {
    Expr e;
    e.kind = ExprKind::RndInt;
    e.kids.push_back(std::move(bound));
    return e;
  }
};

enum class StmtKind { Assign, Call, Api, Emit, If, While, Return };

struct Stmt {
  StmtKind kind = StmtKind::Assign;
  std::string target;        // Assign: variable; Api: dotted api name
  std::string cls, fn;       // Call target
  std::string dst;           // optional result variable for Call/Api
  std::vector<Expr> args;    // Call/Api arguments; single expr for the rest
  std::vector<Stmt> block_a; // If-then / While body
  std::vector<Stmt> block_b; // If-else

  bool operator==(const Stmt&) const = default;

  const Expr& expr() const { return args.front(); }

  static Stmt make_assign(std::string var, Expr e) {
    Stmt s;
    s.kind = StmtKind::Assign;
    s.target = std::move(var);
    s.args.push_back(std::move(e));
    return s;
  }
  static Stmt make_call(std::string cls, std::string fn, std::vector<Expr> args,
                        std::string dst = "") {
    Stmt s;
    s.kind = StmtKind::Call;
    s.cls = std::move(cls);
    s.fn = std::move(fn);
    s.args = std::move(args);
    s.dst = std::move(dst);
    return s;
  }
  static Stmt make_api(std::string name, std::vector<Expr> args, std::string dst = "") {
    Stmt s;
    s.kind = StmtKind::Api;
    s.target = std::move(name);
    s.args = std::move(args);
    s.dst = std::move(dst);
    return s;
  }
  static Stmt make_emit(Expr e) {
    Stmt s;
    s.kind = StmtKind::Emit;
    s.args.push_back(std::move(e));
    return s;
  }
  static Stmt make_if(Expr cond, std::vector<Stmt> then_block, std::vector<Stmt> else_block = {}) {
    Stmt s;
    s.kind = StmtKind::If;
    s.args.push_back(std::move(cond));
    s.block_a = std::move(then_block);
    s.block_b = std::move(else_block);
    return s;
  }
  static Stmt make_while(Expr cond, std::vector<Stmt> body) {
    Stmt s;
    s.kind = StmtKind::While;
    s.args.push_back(std::move(cond));
    s.block_a = std::move(body);
    return s;
  }
  static Stmt make_return(Expr e) {
    Stmt s;
    s.kind = StmtKind::Return;
    s.args.push_back(std::move(e));
    return s;
  }
};

using Block = std::vector<Stmt>;

struct Function {
  std::string name;
  std::vector<std::string> params;
  Block body;
  bool operator==(const Function&) const = default;
};

struct Class {
  std::string name;
  std::vector<Function> functions;
  bool operator==(const Class&) const = default;

  const Function* find(const std::string& fn) const {
    for (const auto& f : functions)
      if (f.name == fn) return &f;
    return nullptr;
  }
};

enum class ComponentKind { Activity, Service, Receiver, Provider };

inline const char* component_kind_name(ComponentKind k) {
  switch (k) {
    case ComponentKind::Activity: return "activity";
    case ComponentKind::Service: return "service";
    case ComponentKind::Receiver: return "receiver";
    case ComponentKind::Provider: return "provider";
  }
  return "?";
}

inline std::optional<ComponentKind> component_kind_from(const std::string& s) {
  if (s == "activity") return ComponentKind::Activity;
  if (s == "service") return ComponentKind::Service;
  if (s == "receiver") return ComponentKind::Receiver;
  if (s == "provider") return ComponentKind::Provider;
  return std::nullopt;
}

struct Manifest {
  std::set<std::string> capabilities;
  std::set<std::pair<ComponentKind, std::string>> components;
  std::set<std::string> intents;
  std::set<std::string> endpoints;
  bool operator==(const Manifest&) const = default;
};

struct Program {
  Manifest manifest;
  std::vector<Class> classes;  // source order, unique names
  std::string entry_class;
  std::string entry_fn;

  bool operator==(const Program&) const = default;

  const Class* find_class(const std::string& name) const {
    for (const auto& c : classes)
      if (c.name == name) return &c;
    return nullptr;
  }
  Class* find_class(const std::string& name) {
    for (auto& c : classes)
      if (c.name == name) return &c;
    return nullptr;
  }
  const Function* find_function(const std::string& cls, const std::string& fn) const {
    const Class* c = find_class(cls);
    return c ? c->find(fn) : nullptr;
  }
};

}  // namespace apg::lang
