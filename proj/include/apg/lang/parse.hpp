#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apg/lang/ast.hpp"

namespace apg::lang {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

namespace detail {

enum class Tok { Ident, Int, Str, Punct, Newline, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int64_t ival = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blanks();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        if (!out.empty() && out.back().kind != Tok::Newline) {
          t.kind = Tok::Newline;
          out.push_back(t);
          t.line = line_;
        }
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (c == '\n') {
        advance();
        // Collapse runs of blank lines into one newline token.
        if (!out.empty() && out.back().kind != Tok::Newline) {
          t.kind = Tok::Newline;
          out.push_back(t);
        }
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
        out.push_back(t);
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Int;
        std::string digits;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          digits += take();
        try {
          t.ival = std::stoll(digits);
        } catch (const std::out_of_range&) {
          throw ParseError(t.line, t.col, "integer literal out of range");
        }
        out.push_back(t);
        continue;
      }
      if (c == '"') {
        t.kind = Tok::Str;
        advance();
        while (true) {
          if (pos_ >= src_.size() || src_[pos_] == '\n')
            throw ParseError(t.line, t.col, "unterminated string literal");
          char d = take();
          if (d == '"') break;
          if (d == '\\') {
            if (pos_ >= src_.size()) throw ParseError(t.line, t.col, "bad escape");
            char e = take();
            switch (e) {
              case 'n': t.text += '\n'; break;
              case 't': t.text += '\t'; break;
              case '"': t.text += '"'; break;
              case '\\': t.text += '\\'; break;
              default: throw ParseError(line_, col_, "unknown escape sequence");
            }
          } else {
            t.text += d;
          }
        }
        out.push_back(t);
        continue;
      }
      // Punctuation, longest match first.
      static const char* two[] = {"==", "!=", "<=", ">="};
      t.kind = Tok::Punct;
      bool matched = false;
      for (const char* p : two) {
        if (src_.compare(pos_, 2, p) == 0) {
          t.text = p;
          advance();
          advance();
          matched = true;
          break;
        }
      }
      if (!matched) {
        static const std::string singles = "{}()[]=.,<>+-*/%";
        if (singles.find(c) == std::string::npos)
          throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, take());
      }
      out.push_back(t);
    }
  }

 private:
  void skip_blanks() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r'))
      advance();
  }
  char take() {
    char c = src_[pos_];
    advance();
    return c;
  }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(Lexer(src).run()) {}

  Program parse_program() {
    Program p;
    expect_ident("program");
    expect_newline();
    p.manifest = parse_manifest();
    while (at_ident("class")) {
      Class c = parse_class();
      if (p.find_class(c.name)) err("duplicate class name '" + c.name + "'");
      p.classes.push_back(std::move(c));
    }
    expect_ident("entry");
    p.entry_class = expect(Tok::Ident).text;
    expect_punct(".");
    p.entry_fn = expect(Tok::Ident).text;
    expect_newline();
    expect(Tok::End);
    return p;
  }

  // Gadget files share the grammar: manifest, classes, then a vein block
  // whose last statement invokes the organ.
  struct GadgetText {
    Manifest manifest_delta;
    std::vector<Class> organ;
    Block vein_and_entry;
  };

  GadgetText parse_gadget() {
    GadgetText g;
    expect_ident("gadget");
    expect_newline();
    g.manifest_delta = parse_manifest();
    while (at_ident("class")) g.organ.push_back(parse_class());
    expect_ident("vein");
    expect_punct("{");
    expect_newline();
    g.vein_and_entry = parse_block_body();
    expect_newline();
    expect(Tok::End);
    return g;
  }

 private:
  Manifest parse_manifest() {
    Manifest m;
    expect_ident("manifest");
    expect_punct("{");
    expect_newline();
    while (!at_punct("}")) {
      Token head = expect(Tok::Ident);
      if (head.text == "capability") {
        m.capabilities.insert(expect(Tok::Ident).text);
      } else if (head.text == "component") {
        Token kind = expect(Tok::Ident);
        auto k = component_kind_from(kind.text);
        if (!k) err("unknown component kind '" + kind.text + "'");
        m.components.emplace(*k, expect(Tok::Ident).text);
      } else if (head.text == "intent") {
        m.intents.insert(expect(Tok::Ident).text);
      } else if (head.text == "endpoint") {
        m.endpoints.insert(expect(Tok::Str).text);
      } else {
        err("expected manifest entry, got '" + head.text + "'");
      }
      expect_newline();
    }
    expect_punct("}");
    expect_newline();
    return m;
  }

  Class parse_class() {
    Class c;
    expect_ident("class");
    c.name = expect(Tok::Ident).text;
    expect_punct("{");
    expect_newline();
    while (at_ident("fn")) {
      Function f = parse_function();
      if (c.find(f.name)) err("duplicate function '" + f.name + "' in class " + c.name);
      c.functions.push_back(std::move(f));
    }
    expect_punct("}");
    expect_newline();
    return c;
  }

  Function parse_function() {
    Function f;
    expect_ident("fn");
    f.name = expect(Tok::Ident).text;
    expect_punct("(");
    if (!at_punct(")")) {
      f.params.push_back(expect(Tok::Ident).text);
      while (at_punct(",")) {
        next();
        f.params.push_back(expect(Tok::Ident).text);
      }
    }
    expect_punct(")");
    expect_punct("{");
    expect_newline();
    f.body = parse_block_body();
    expect_newline();
    return f;
  }

  // Statements up to (and consuming) the closing brace.
  Block parse_block_body() {
    Block b;
    while (!at_punct("}")) b.push_back(parse_stmt());
    expect_punct("}");
    return b;
  }

  Stmt parse_stmt() {
    Token head = peek();
    if (head.kind != Tok::Ident) err("expected a statement");
    if (head.text == "emit") {
      next();
      Stmt s = Stmt::make_emit(parse_expr());
      expect_newline();
      return s;
    }
    if (head.text == "return") {
      next();
      Stmt s = Stmt::make_return(parse_expr());
      expect_newline();
      return s;
    }
    if (head.text == "if") {
      next();
      Expr cond = parse_expr();
      expect_punct("{");
      expect_newline();
      Block then_block = parse_block_body();
      Block else_block;
      if (at_ident("else")) {
        next();
        expect_punct("{");
        expect_newline();
        else_block = parse_block_body();
      }
      expect_newline();
      return Stmt::make_if(std::move(cond), std::move(then_block), std::move(else_block));
    }
    if (head.text == "while") {
      next();
      Expr cond = parse_expr();
      expect_punct("{");
      expect_newline();
      Block body = parse_block_body();
      expect_newline();
      return Stmt::make_while(std::move(cond), std::move(body));
    }
    if (head.text == "call") return parse_call("");
    if (head.text == "api") return parse_api("");

    // Assignment: var = expr | var = call ... | var = api ...
    next();
    expect_punct("=");
    if (at_ident("call")) return parse_call(head.text);
    if (at_ident("api")) return parse_api(head.text);
    Stmt s = Stmt::make_assign(head.text, parse_expr());
    expect_newline();
    return s;
  }

  Stmt parse_call(std::string dst) {
    expect_ident("call");
    std::string cls = expect(Tok::Ident).text;
    expect_punct(".");
    std::string fn = expect(Tok::Ident).text;
    std::vector<Expr> args = parse_args();
    expect_newline();
    return Stmt::make_call(std::move(cls), std::move(fn), std::move(args), std::move(dst));
  }

  Stmt parse_api(std::string dst) {
    expect_ident("api");
    std::string name = expect(Tok::Ident).text;
    while (at_punct(".")) {
      next();
      name += "." + expect(Tok::Ident).text;
    }
    std::vector<Expr> args = parse_args();
    expect_newline();
    return Stmt::make_api(std::move(name), std::move(args), std::move(dst));
  }

  std::vector<Expr> parse_args() {
    expect_punct("(");
    std::vector<Expr> args;
    if (!at_punct(")")) {
      args.push_back(parse_expr());
      while (at_punct(",")) {
        next();
        args.push_back(parse_expr());
      }
    }
    expect_punct(")");
    return args;
  }

  // Precedence: or < and < comparison < additive < multiplicative < unary
  // < indexing. Comparisons do not chain.
  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr e = parse_and();
    while (at_ident("or")) {
      next();
      e = Expr::make_binary(BinOp::Or, std::move(e), parse_and());
    }
    return e;
  }

  Expr parse_and() {
    Expr e = parse_cmp();
    while (at_ident("and")) {
      next();
      e = Expr::make_binary(BinOp::And, std::move(e), parse_cmp());
    }
    return e;
  }

  Expr parse_cmp() {
    Expr e = parse_add();
    static const std::pair<const char*, BinOp> ops[] = {
        {"==", BinOp::Eq}, {"!=", BinOp::Ne}, {"<=", BinOp::Le},
        {">=", BinOp::Ge}, {"<", BinOp::Lt},  {">", BinOp::Gt}};
    for (const auto& [txt, op] : ops) {
      if (at_punct(txt)) {
        next();
        return Expr::make_binary(op, std::move(e), parse_add());
      }
    }
    return e;
  }

  Expr parse_add() {
    Expr e = parse_mul();
    while (at_punct("+") || at_punct("-")) {
      BinOp op = peek().text == "+" ? BinOp::Add : BinOp::Sub;
      next();
      e = Expr::make_binary(op, std::move(e), parse_mul());
    }
    return e;
  }

  Expr parse_mul() {
    Expr e = parse_unary();
    while (at_punct("*") || at_punct("/") || at_punct("%")) {
      BinOp op = peek().text == "*" ? BinOp::Mul : (peek().text == "/" ? BinOp::Div : BinOp::Mod);
      next();
      e = Expr::make_binary(op, std::move(e), parse_unary());
    }
    return e;
  }

  Expr parse_unary() {
    if (at_ident("not")) {
      next();
      return Expr::make_unary(UnOp::Not, parse_unary());
    }
    if (at_punct("-")) {
      next();
      Expr inner = parse_unary();
      // Fold negated integer literals so negative constants round-trip.
      if (inner.kind == ExprKind::IntLit) {
        inner.int_val = -inner.int_val;
        return inner;
      }
      return Expr::make_unary(UnOp::Neg, std::move(inner));
    }
    return parse_postfix();
  }

  Expr parse_postfix() {
    Expr e = parse_primary();
    while (at_punct("[")) {
      next();
      Expr idx = parse_expr();
      expect_punct("]");
      e = Expr::make_index(std::move(e), std::move(idx));
    }
    return e;
  }

  Expr parse_primary() {
    Token t = peek();
    if (t.kind == Tok::Int) {
      next();
      return Expr::make_int(t.ival);
    }
    if (t.kind == Tok::Str) {
      next();
      return Expr::make_str(t.text);
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      next();
      Expr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      next();
      if (t.text == "true") return Expr::make_bool(true);
      if (t.text == "false") return Expr::make_bool(false);
      if (t.text == "rnd_bools" || t.text == "rnd_int") {
        expect_punct("(");
        Expr arg = parse_expr();
        expect_punct(")");
        return t.text == "rnd_bools" ? Expr::make_rnd_bools(std::move(arg))
                                     : Expr::make_rnd_int(std::move(arg));
      }
      return Expr::make_var(t.text);
    }
    err("expected an expression");
  }

  const Token& peek() const { return toks_[idx_]; }
  void next() { ++idx_; }

  bool at_ident(const char* s) const {
    return peek().kind == Tok::Ident && peek().text == s;
  }
  bool at_punct(const char* s) const {
    return peek().kind == Tok::Punct && peek().text == s;
  }

  Token expect(Tok kind) {
    if (peek().kind != kind) {
      static const char* names[] = {"identifier", "integer", "string", "symbol",
                                    "end of line", "end of input"};
      err(std::string("expected ") + names[static_cast<int>(kind)]);
    }
    Token t = peek();
    next();
    return t;
  }
  void expect_ident(const char* s) {
    if (!at_ident(s)) err(std::string("expected '") + s + "'");
    next();
  }
  void expect_punct(const char* s) {
    if (!at_punct(s)) err(std::string("expected '") + s + "'");
    next();
  }
  void expect_newline() { expect(Tok::Newline); }

  [[noreturn]] void err(const std::string& msg) const {
    throw ParseError(peek().line, peek().col, msg);
  }

  std::vector<Token> toks_;
  size_t idx_ = 0;
};

}  // namespace detail

inline Program parse(const std::string& text) { return detail::Parser(text).parse_program(); }

using GadgetText = detail::Parser::GadgetText;

inline GadgetText parse_gadget_text(const std::string& text) {
  return detail::Parser(text).parse_gadget();
}

}  // namespace apg::lang
