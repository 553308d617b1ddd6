#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "apg/lang/ast.hpp"

namespace apg::lang {

struct RuntimeFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FuelExhausted : std::runtime_error {
  FuelExhausted() : std::runtime_error("statement fuel exhausted") {}
};

using BoolArray = std::vector<uint8_t>;
using Value = std::variant<int64_t, bool, std::string, BoolArray>;

inline std::string value_repr(const Value& v) {
  if (std::holds_alternative<int64_t>(v)) return std::to_string(std::get<int64_t>(v));
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  std::string out = "b:";
  for (uint8_t b : std::get<BoolArray>(v)) out += b ? '1' : '0';
  return out;
}

// Everything observable about one execution: emitted values and the ordered
// api invocations with argument summaries.
struct Trace {
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> api_calls;
  bool operator==(const Trace&) const = default;
};

namespace detail {

constexpr int64_t kMaxArrayLen = 1 << 16;

class Interp {
 public:
  Interp(const Program& p, uint64_t seed, uint64_t fuel, uint64_t* executed)
      : prog_(p), rng_(seed), fuel_(fuel), executed_(executed) {}

  Trace run(int64_t input) {
    const Function* entry = prog_.find_function(prog_.entry_class, prog_.entry_fn);
    if (!entry) throw RuntimeFault("entry function not found");
    if (entry->params.size() != 1) throw RuntimeFault("entry function must take one input");
    call_function(*entry, {Value{input}});
    return std::move(trace_);
  }

 private:
  using Scope = std::map<std::string, Value>;

  Value call_function(const Function& f, std::vector<Value> args) {
    if (args.size() != f.params.size())
      throw RuntimeFault("arity mismatch calling " + f.name);
    if (++depth_ > 256) throw RuntimeFault("call depth limit exceeded");
    Scope scope;
    for (size_t i = 0; i < args.size(); ++i) scope[f.params[i]] = std::move(args[i]);
    std::optional<Value> ret = exec_block(f.body, scope);
    --depth_;
    return ret ? std::move(*ret) : Value{int64_t{0}};
  }

  // Returns a value iff a return statement fired.
  std::optional<Value> exec_block(const Block& b, Scope& scope) {
    for (const Stmt& s : b) {
      if (auto r = exec_stmt(s, scope)) return r;
    }
    return std::nullopt;
  }

  std::optional<Value> exec_stmt(const Stmt& s, Scope& scope) {
    if (fuel_ == 0) throw FuelExhausted();
    --fuel_;
    if (executed_) ++*executed_;
    switch (s.kind) {
      case StmtKind::Assign:
        scope[s.target] = eval(s.expr(), scope);
        return std::nullopt;
      case StmtKind::Call: {
        const Function* f = prog_.find_function(s.cls, s.fn);
        if (!f) throw RuntimeFault("call to unknown function " + s.cls + "." + s.fn);
        std::vector<Value> args;
        args.reserve(s.args.size());
        for (const Expr& a : s.args) args.push_back(eval(a, scope));
        Value r = call_function(*f, std::move(args));
        if (!s.dst.empty()) scope[s.dst] = std::move(r);
        return std::nullopt;
      }
      case StmtKind::Api: {
        std::string summary;
        uint64_t h = 0xcbf29ce484222325ull;
        for (size_t i = 0; i < s.args.size(); ++i) {
          std::string r = value_repr(eval(s.args[i], scope));
          if (i) summary += ",";
          summary += r;
          for (char c : r) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
          }
        }
        for (char c : s.target) {
          h ^= static_cast<unsigned char>(c);
          h *= 0x100000001b3ull;
        }
        trace_.api_calls.emplace_back(s.target, summary);
        // Built-ins return a deterministic function of name and arguments.
        if (!s.dst.empty()) scope[s.dst] = Value{static_cast<int64_t>(h & 0x7fffffff)};
        return std::nullopt;
      }
      case StmtKind::Emit:
        trace_.outputs.push_back(value_repr(eval(s.expr(), scope)));
        return std::nullopt;
      case StmtKind::If:
        return exec_block(truthy(eval(s.expr(), scope)) ? s.block_a : s.block_b, scope);
      case StmtKind::While:
        while (truthy(eval(s.expr(), scope))) {
          if (auto r = exec_block(s.block_a, scope)) return r;
          if (fuel_ == 0) throw FuelExhausted();
          --fuel_;  // each loop iteration re-checks the condition
          if (executed_) ++*executed_;
        }
        return std::nullopt;
      case StmtKind::Return:
        return eval(s.expr(), scope);
    }
    return std::nullopt;
  }

  static bool truthy(const Value& v) {
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
    if (std::holds_alternative<int64_t>(v)) return std::get<int64_t>(v) != 0;
    throw RuntimeFault("condition is neither bool nor int");
  }

  static int64_t as_int(const Value& v, const char* what) {
    if (!std::holds_alternative<int64_t>(v)) throw RuntimeFault(std::string(what) + ": not an int");
    return std::get<int64_t>(v);
  }

  Value eval(const Expr& e, Scope& scope) {
    switch (e.kind) {
      case ExprKind::IntLit: return e.int_val;
      case ExprKind::BoolLit: return e.bool_val;
      case ExprKind::StrLit: return e.str_val;
      case ExprKind::Var: {
        auto it = scope.find(e.str_val);
        if (it == scope.end()) throw RuntimeFault("undefined variable " + e.str_val);
        return it->second;
      }
      case ExprKind::Unary: {
        if (e.un == UnOp::Not) {
          Value v = eval(e.kids[0], scope);
          if (!std::holds_alternative<bool>(v)) throw RuntimeFault("not: operand is not a bool");
          return !std::get<bool>(v);
        }
        return -as_int(eval(e.kids[0], scope), "negation");
      }
      case ExprKind::Binary: return eval_binary(e, scope);
      case ExprKind::Index: {
        Value arr = eval(e.kids[0], scope);
        if (!std::holds_alternative<BoolArray>(arr)) throw RuntimeFault("indexing a non-array");
        int64_t i = as_int(eval(e.kids[1], scope), "array index");
        const auto& a = std::get<BoolArray>(arr);
        if (i < 0 || static_cast<size_t>(i) >= a.size())
          throw RuntimeFault("array index out of bounds");
        return static_cast<bool>(a[static_cast<size_t>(i)]);
      }
      case ExprKind::RndBools: {
        int64_t n = as_int(eval(e.kids[0], scope), "rnd_bools length");
        if (n < 0 || n > kMaxArrayLen) throw RuntimeFault("rnd_bools length out of range");
        BoolArray a(static_cast<size_t>(n));
        for (auto& b : a) b = static_cast<uint8_t>(rng_() & 1);
        return a;
      }
      case ExprKind::RndInt: {
        int64_t bound = as_int(eval(e.kids[0], scope), "rnd_int bound");
        if (bound <= 0) throw RuntimeFault("rnd_int bound must be positive");
        return static_cast<int64_t>(rng_() % static_cast<uint64_t>(bound));
      }
    }
    throw RuntimeFault("bad expression");
  }

  Value eval_binary(const Expr& e, Scope& scope) {
    if (e.bin == BinOp::And || e.bin == BinOp::Or) {
      Value l = eval(e.kids[0], scope);
      if (!std::holds_alternative<bool>(l)) throw RuntimeFault("logic op: operand is not a bool");
      bool lv = std::get<bool>(l);
      if (e.bin == BinOp::And && !lv) return false;  // short-circuit
      if (e.bin == BinOp::Or && lv) return true;
      Value r = eval(e.kids[1], scope);
      if (!std::holds_alternative<bool>(r)) throw RuntimeFault("logic op: operand is not a bool");
      return std::get<bool>(r);
    }
    Value l = eval(e.kids[0], scope);
    Value r = eval(e.kids[1], scope);
    if (e.bin == BinOp::Eq || e.bin == BinOp::Ne) {
      if (l.index() != r.index()) throw RuntimeFault("equality between different types");
      bool eq = l == r;
      return e.bin == BinOp::Eq ? eq : !eq;
    }
    int64_t a = as_int(l, "arithmetic"), b = as_int(r, "arithmetic");
    switch (e.bin) {
      case BinOp::Add: return a + b;
      case BinOp::Sub: return a - b;
      case BinOp::Mul: return a * b;
      case BinOp::Div:
        if (b == 0) throw RuntimeFault("division by zero");
        return a / b;
      case BinOp::Mod:
        if (b == 0) throw RuntimeFault("modulo by zero");
        return a % b;
      case BinOp::Lt: return a < b;
      case BinOp::Le: return a <= b;
      case BinOp::Gt: return a > b;
      case BinOp::Ge: return a >= b;
      default: throw RuntimeFault("bad binary op");
    }
  }

  const Program& prog_;
  std::mt19937_64 rng_;
  uint64_t fuel_;
  uint64_t* executed_;
  Trace trace_;
  int depth_ = 0;
};

}  // namespace detail

constexpr uint64_t kDefaultFuel = 1'000'000;

// Deterministic given (program, input, seed): the runtime random source is
// seeded, and api results are pure functions of their arguments.
inline Trace interpret(const Program& p, int64_t input, uint64_t seed,
                       uint64_t fuel = kDefaultFuel, uint64_t* executed = nullptr) {
  return detail::Interp(p, seed, fuel, executed).run(input);
}

}  // namespace apg::lang
