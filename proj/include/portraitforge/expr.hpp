#pragma once

// Scalar expressions in x, y, z: parsing, printing, evaluation and
// structural differentiation. Exponents are integer literals only.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace portraitforge::expr {

enum class Op { Const, Var, Neg, Sin, Cos, Sqrt, Exp, Add, Sub, Mul, Div, Pow };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int var = 0;         // Var: 0 = x, 1 = y, 2 = z
  int exponent = 0;    // Pow
  Expr a, b;
  int column = 0;      // 1-based source column, 0 for synthesized nodes
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, int column)
      : std::runtime_error(what + " at column " + std::to_string(column)),
        column_(column) {}
  int column() const { return column_; }

private:
  int column_;
};

class DomainError : public std::runtime_error {
public:
  DomainError(const std::string& what, int column)
      : std::runtime_error(column > 0 ? what + " (node at column " + std::to_string(column) + ")"
                                      : what),
        column_(column) {}
  int column() const { return column_; }

private:
  int column_;
};

// ---------------------------------------------------------------------------
// Builders. These fold constants and drop neutral elements; nothing more.

inline Expr constant(double v, int column = 0) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  n->column = column;
  return n;
}

inline Expr variable(int index, int column = 0) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  n->column = column;
  return n;
}

inline bool is_const(const Expr& e, double v) { return e->op == Op::Const && e->value == v; }
inline bool is_const(const Expr& e) { return e->op == Op::Const; }

namespace detail {
inline Expr make(Op op, Expr a, Expr b = nullptr, int column = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->column = column;
  return n;
}

inline double ipow(double base, int exponent) {
  double r = 1.0;
  const int m = exponent < 0 ? -exponent : exponent;
  for (int i = 0; i < m; ++i) r *= base;
  return exponent < 0 ? 1.0 / r : r;
}
}  // namespace detail

inline Expr neg(const Expr& a) {
  if (is_const(a)) return constant(-a->value);
  if (a->op == Op::Neg) return a->a;
  return detail::make(Op::Neg, a);
}

inline Expr add(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return detail::make(Op::Add, a, b);
}

inline Expr sub(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(b);
  return detail::make(Op::Sub, a, b);
}

inline Expr mul(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(b);
  if (is_const(b, -1.0)) return neg(a);
  return detail::make(Op::Mul, a, b);
}

inline Expr div(const Expr& a, const Expr& b) {
  if (is_const(b, 0.0)) throw std::invalid_argument("division by a constant zero");
  if (is_const(a) && is_const(b)) return constant(a->value / b->value);
  if (is_const(a, 0.0)) return constant(0.0);
  if (is_const(b, 1.0)) return a;
  return detail::make(Op::Div, a, b);
}

inline Expr pow(const Expr& a, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return a;
  if (is_const(a)) {
    if (a->value == 0.0 && exponent < 0) throw std::invalid_argument("zero to a negative power");
    return constant(detail::ipow(a->value, exponent));
  }
  auto n = detail::make(Op::Pow, a);
  std::const_pointer_cast<Node>(n)->exponent = exponent;
  return n;
}

inline Expr unary(Op op, const Expr& a) {
  if (is_const(a)) {
    switch (op) {
      case Op::Sin: return constant(std::sin(a->value));
      case Op::Cos: return constant(std::cos(a->value));
      case Op::Exp: return constant(std::exp(a->value));
      case Op::Sqrt:
        if (a->value >= 0.0) return constant(std::sqrt(a->value));
        break;
      default: break;
    }
  }
  return detail::make(op, a);
}

// ---------------------------------------------------------------------------
// Parser. Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] integer)?
//   primary := number | x | y | z | pi | func '(' expr ')' | '(' expr ')'

namespace detail {

class Parser {
public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr run() {
    skip();
    if (pos_ >= s_.size()) fail("empty expression");
    Expr e = parse_expr();
    skip();
    if (pos_ < s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

private:
  std::string_view s_;
  std::size_t pos_ = 0;

  int column() const { return static_cast<int>(pos_) + 1; }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, column()); }

  void skip() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (true) {
      skip();
      if (pos_ >= s_.size()) return lhs;
      const char c = s_[pos_];
      if (c != '+' && c != '-') return lhs;
      const int col = column();
      ++pos_;
      Expr rhs = parse_term();
      lhs = make(c == '+' ? Op::Add : Op::Sub, lhs, rhs, col);
    }
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    while (true) {
      skip();
      if (pos_ >= s_.size()) return lhs;
      const char c = s_[pos_];
      if (c != '*' && c != '/') return lhs;
      const int col = column();
      ++pos_;
      skip();
      const int rhs_col = column();
      Expr rhs = parse_unary();
      if (c == '/' && is_const(rhs, 0.0)) throw ParseError("division by literal zero", rhs_col);
      lhs = make(c == '*' ? Op::Mul : Op::Div, lhs, rhs, col);
    }
  }

  Expr parse_unary() {
    skip();
    if (pos_ < s_.size() && s_[pos_] == '-') {
      const int col = column();
      ++pos_;
      return make(Op::Neg, parse_unary(), nullptr, col);
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    skip();
    if (pos_ < s_.size() && s_[pos_] == '^') {
      const int col = column();
      ++pos_;
      skip();
      bool negative = false;
      if (pos_ < s_.size() && s_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) {
        pos_ = start;
        fail("exponent must be an integer literal");
      }
      if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E')) {
        fail("exponent must be an integer literal");
      }
      int value = 0;
      auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, value);
      if (ec != std::errc()) throw ParseError("exponent out of range", static_cast<int>(start) + 1);
      auto n = make(Op::Pow, base, nullptr, col);
      std::const_pointer_cast<Node>(n)->exponent = negative ? -value : value;
      skip();
      if (pos_ < s_.size() && s_[pos_] == '^') fail("chained exponents need parentheses");
      return n;
    }
    return base;
  }

  Expr parse_primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    const int col = column();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view name = s_.substr(start, pos_ - start);
      if (name == "x") return variable(0, col);
      if (name == "y") return variable(1, col);
      if (name == "z") return variable(2, col);
      if (name == "pi") return constant(std::numbers::pi, col);
      Op op;
      if (name == "sin") op = Op::Sin;
      else if (name == "cos") op = Op::Cos;
      else if (name == "sqrt") op = Op::Sqrt;
      else if (name == "exp") op = Op::Exp;
      else throw ParseError("unknown identifier '" + std::string(name) + "'", col);
      if (!peek('(')) fail("expected '(' after " + std::string(name));
      ++pos_;
      Expr arg = parse_expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return make(op, arg, nullptr, col);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (ec != std::errc() || ptr != s_.data() + pos_) {
      throw ParseError("malformed number", static_cast<int>(start) + 1);
    }
    return constant(v, static_cast<int>(start) + 1);
  }
};

}  // namespace detail

inline Expr parse(std::string_view text) { return detail::Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printing with minimal parentheses. print(parse(s)) reparses to the same tree.

namespace detail {

inline int precedence(const Expr& e) {
  switch (e->op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return e->value < 0.0 ? 0 : 5;
    default: return 5;
  }
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void print_to(const Expr& e, std::string& out);

inline void print_child(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_to(e, out);
    out += ')';
  } else {
    print_to(e, out);
  }
}

inline void print_to(const Expr& e, std::string& out) {
  switch (e->op) {
    case Op::Const: out += format_double(e->value); return;
    case Op::Var: out += "xyz"[e->var]; return;
    case Op::Neg:
      out += '-';
      print_child(e->a, 4, out);
      return;
    case Op::Sin: out += "sin("; print_to(e->a, out); out += ')'; return;
    case Op::Cos: out += "cos("; print_to(e->a, out); out += ')'; return;
    case Op::Sqrt: out += "sqrt("; print_to(e->a, out); out += ')'; return;
    case Op::Exp: out += "exp("; print_to(e->a, out); out += ')'; return;
    case Op::Add:
    case Op::Sub:
      print_child(e->a, 1, out);
      out += e->op == Op::Add ? " + " : " - ";
      print_child(e->b, 2, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_child(e->a, 2, out);
      out += e->op == Op::Mul ? '*' : '/';
      print_child(e->b, 3, out);
      return;
    case Op::Pow:
      print_child(e->a, 5, out);
      out += '^';
      out += std::to_string(e->exponent);
      return;
  }
}

}  // namespace detail

inline std::string print(const Expr& e) {
  std::string out;
  detail::print_to(e, out);
  return out;
}

inline bool equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b || a->op != b->op) return false;
  switch (a->op) {
    case Op::Const: return a->value == b->value;
    case Op::Var: return a->var == b->var;
    case Op::Pow: return a->exponent == b->exponent && equal(a->a, b->a);
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Sqrt:
    case Op::Exp: return equal(a->a, b->a);
    default: return equal(a->a, b->a) && equal(a->b, b->b);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline double checked_div(double num, double den, int column) {
  if (den == 0.0 || !std::isfinite(num / den)) throw DomainError("division by zero", column);
  return num / den;
}

inline double checked_sqrt(double v, int column) {
  if (v < 0.0) throw DomainError("sqrt of negative value", column);
  return std::sqrt(v);
}

inline double checked_pow(double base, int exponent, int column) {
  if (exponent < 0 && base == 0.0) throw DomainError("zero to a negative power", column);
  return ipow(base, exponent);
}

}  // namespace detail

inline double eval(const Expr& e, double x, double y, double z) {
  switch (e->op) {
    case Op::Const: return e->value;
    case Op::Var: return e->var == 0 ? x : (e->var == 1 ? y : z);
    case Op::Neg: return -eval(e->a, x, y, z);
    case Op::Sin: return std::sin(eval(e->a, x, y, z));
    case Op::Cos: return std::cos(eval(e->a, x, y, z));
    case Op::Exp: return std::exp(eval(e->a, x, y, z));
    case Op::Sqrt: return detail::checked_sqrt(eval(e->a, x, y, z), e->column);
    case Op::Add: return eval(e->a, x, y, z) + eval(e->b, x, y, z);
    case Op::Sub: return eval(e->a, x, y, z) - eval(e->b, x, y, z);
    case Op::Mul: return eval(e->a, x, y, z) * eval(e->b, x, y, z);
    case Op::Div: return detail::checked_div(eval(e->a, x, y, z), eval(e->b, x, y, z), e->column);
    case Op::Pow: return detail::checked_pow(eval(e->a, x, y, z), e->exponent, e->column);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Differentiation

inline Expr diff(const Expr& e, int var) {
  switch (e->op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(e->var == var ? 1.0 : 0.0);
    case Op::Neg: return neg(diff(e->a, var));
    case Op::Add: return add(diff(e->a, var), diff(e->b, var));
    case Op::Sub: return sub(diff(e->a, var), diff(e->b, var));
    case Op::Mul: return add(mul(diff(e->a, var), e->b), mul(e->a, diff(e->b, var)));
    case Op::Div: {
      Expr da = diff(e->a, var), db = diff(e->b, var);
      if (is_const(db, 0.0)) return div(da, e->b);
      return div(sub(mul(da, e->b), mul(e->a, db)), pow(e->b, 2));
    }
    case Op::Pow: {
      Expr da = diff(e->a, var);
      return mul(mul(constant(e->exponent), pow(e->a, e->exponent - 1)), da);
    }
    case Op::Sin: return mul(unary(Op::Cos, e->a), diff(e->a, var));
    case Op::Cos: return neg(mul(unary(Op::Sin, e->a), diff(e->a, var)));
    case Op::Exp: return mul(e, diff(e->a, var));
    case Op::Sqrt: {
      Expr da = diff(e->a, var);
      if (is_const(da, 0.0)) return constant(0.0);
      return div(da, mul(constant(2.0), e));
    }
  }
  return constant(0.0);
}

inline std::array<Expr, 3> grad(const Expr& e) { return {diff(e, 0), diff(e, 1), diff(e, 2)}; }

// ---------------------------------------------------------------------------
// Program: several expressions compiled into one straight-line tape with
// shared subexpressions merged. run() is reentrant; the caller owns scratch.

class Program {
public:
  Program() = default;
  explicit Program(const std::vector<Expr>& outputs) {
    std::map<const Node*, int> seen;
    for (const auto& e : outputs) outputs_.push_back(emit(e, seen));
  }

  std::size_t size() const { return code_.size(); }
  std::size_t output_count() const { return outputs_.size(); }

  // Evaluates every output at (x, y, z). scratch is resized as needed.
  void run(const std::array<double, 3>& p, std::vector<double>& scratch, double* out) const {
    scratch.resize(code_.size());
    double* r = scratch.data();
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Instr& in = code_[i];
      switch (in.op) {
        case Op::Const: r[i] = in.value; break;
        case Op::Var: r[i] = p[in.var]; break;
        case Op::Neg: r[i] = -r[in.a]; break;
        case Op::Sin: r[i] = std::sin(r[in.a]); break;
        case Op::Cos: r[i] = std::cos(r[in.a]); break;
        case Op::Exp: r[i] = std::exp(r[in.a]); break;
        case Op::Sqrt: r[i] = detail::checked_sqrt(r[in.a], in.column); break;
        case Op::Add: r[i] = r[in.a] + r[in.b]; break;
        case Op::Sub: r[i] = r[in.a] - r[in.b]; break;
        case Op::Mul: r[i] = r[in.a] * r[in.b]; break;
        case Op::Div: r[i] = detail::checked_div(r[in.a], r[in.b], in.column); break;
        case Op::Pow: r[i] = detail::checked_pow(r[in.a], in.exponent, in.column); break;
      }
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = r[outputs_[k]];
  }

private:
  struct Instr {
    Op op;
    double value;
    int var, exponent, a, b, column;
  };
  std::vector<Instr> code_;
  std::vector<int> outputs_;
  std::map<std::tuple<int, std::uint64_t, int, int, int, int>, int> interned_;

  int emit(const Expr& e, std::map<const Node*, int>& seen) {
    if (auto it = seen.find(e.get()); it != seen.end()) return it->second;
    const int a = e->a ? emit(e->a, seen) : -1;
    const int b = e->b ? emit(e->b, seen) : -1;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &e->value, sizeof bits);
    auto key = std::make_tuple(static_cast<int>(e->op), bits, e->var, e->exponent, a, b);
    int idx;
    if (auto it = interned_.find(key); it != interned_.end()) {
      idx = it->second;
    } else {
      idx = static_cast<int>(code_.size());
      code_.push_back({e->op, e->value, e->var, e->exponent, a, b, e->column});
      interned_.emplace(key, idx);
    }
    seen.emplace(e.get(), idx);
    return idx;
  }
};

}  // namespace portraitforge::expr
