#ifndef HYTEST_EXPR_HPP_
#define HYTEST_EXPR_HPP_

// Expression trees for invariants, guards, flows and goals, together with the
// ASCII grammar used in model documents:
//
//   or   := and ('||' and)*
//   and  := not ('&&' not)*
//   not  := ('!' | '~') not | cmp
//   cmp  := add (('<' | '<=' | '>' | '>=' | '==' | '!=' | '~=') add)?
//   add  := mul (('+' | '-') mul)*
//   mul  := neg (('*' | '/') neg)*
//   neg  := '-' neg | '+' neg | pow
//   pow  := atom ('^' neg)?
//   atom := number | 'true' | 'false' | ident | ident '(' args ')' | '(' or ')'
//
// A unary minus applied directly to a numeric literal folds into a negative
// literal, so printing and re-parsing is structure preserving.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hytest/error.hpp"

namespace hytest {

enum class ExprKind { Number, Boolean, Variable, Unary, Binary, Call };
enum class UnaryOp { Neg, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Pow, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

inline bool is_comparison(BinaryOp op) {
  return op == BinaryOp::Lt || op == BinaryOp::Le || op == BinaryOp::Gt || op == BinaryOp::Ge ||
         op == BinaryOp::Eq || op == BinaryOp::Ne;
}
inline bool is_logical(BinaryOp op) { return op == BinaryOp::And || op == BinaryOp::Or; }

inline std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

class Expr;

struct ExprNode {
  ExprKind kind = ExprKind::Number;
  double number = 0.0;
  bool boolean = false;
  std::string name;  // Variable / Call
  UnaryOp unary = UnaryOp::Neg;
  BinaryOp binary = BinaryOp::Add;
  std::vector<Expr> args;  // Unary: 1, Binary: 2, Call: n
};

/// Immutable, cheaply copyable handle to an expression tree.
class Expr {
 public:
  Expr() : Expr(boolean(true)) {}

  static Expr number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Number;
    n->number = v;
    return Expr(std::move(n));
  }
  static Expr boolean(bool b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Boolean;
    n->boolean = b;
    return Expr(std::move(n));
  }
  static Expr variable(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Variable;
    n->name = std::move(name);
    return Expr(std::move(n));
  }
  static Expr unary(UnaryOp op, Expr operand) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Unary;
    n->unary = op;
    n->args.push_back(std::move(operand));
    return Expr(std::move(n));
  }
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Binary;
    n->binary = op;
    n->args.push_back(std::move(lhs));
    n->args.push_back(std::move(rhs));
    return Expr(std::move(n));
  }
  static Expr call(std::string name, std::vector<Expr> args) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Call;
    n->name = std::move(name);
    n->args = std::move(args);
    return Expr(std::move(n));
  }

  ExprKind kind() const { return node_->kind; }
  double number_value() const { return node_->number; }
  bool boolean_value() const { return node_->boolean; }
  const std::string& name() const { return node_->name; }
  UnaryOp unary_op() const { return node_->unary; }
  BinaryOp binary_op() const { return node_->binary; }
  const std::vector<Expr>& args() const { return node_->args; }
  const Expr& arg(std::size_t i) const { return node_->args.at(i); }

  bool is_not() const { return kind() == ExprKind::Unary && unary_op() == UnaryOp::Not; }

  /// Structural equality (literal values compared bitwise-exactly).
  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    const ExprNode& x = *a.node_;
    const ExprNode& y = *b.node_;
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case ExprKind::Number: return x.number == y.number;
      case ExprKind::Boolean: return x.boolean == y.boolean;
      case ExprKind::Variable: return x.name == y.name;
      case ExprKind::Unary:
        if (x.unary != y.unary) return false;
        break;
      case ExprKind::Binary:
        if (x.binary != y.binary) return false;
        break;
      case ExprKind::Call:
        if (x.name != y.name) return false;
        break;
    }
    return x.args == y.args;
  }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

// Binding strength used by the printer; higher binds tighter.
enum Prec : int { kOr = 1, kAnd, kNot, kCmp, kAdd, kMul, kNeg, kPow, kAtom };

inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Number: return e.number_value() < 0 || std::signbit(e.number_value()) ? kNeg : kAtom;
    case ExprKind::Boolean:
    case ExprKind::Variable:
    case ExprKind::Call: return kAtom;
    case ExprKind::Unary: return e.unary_op() == UnaryOp::Not ? kNot : kNeg;
    case ExprKind::Binary:
      switch (e.binary_op()) {
        case BinaryOp::Or: return kOr;
        case BinaryOp::And: return kAnd;
        case BinaryOp::Add:
        case BinaryOp::Sub: return kAdd;
        case BinaryOp::Mul:
        case BinaryOp::Div: return kMul;
        case BinaryOp::Pow: return kPow;
        default: return kCmp;
      }
  }
  return kAtom;
}

inline void format_number(double v, std::string& out) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void print(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

// Operands of && / || are parenthesised unless they are a negation (which
// carries its own parentheses) or, on the left, a chain of the same operator.
inline void print_logical_operand(const Expr& operand, BinaryOp parent, bool left, std::string& out) {
  bool bare = operand.is_not() ||
              (left && operand.kind() == ExprKind::Binary && operand.binary_op() == parent);
  print_wrapped(operand, !bare, out);
}

inline void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprKind::Number:
      format_number(e.number_value(), out);
      return;
    case ExprKind::Boolean:
      out += e.boolean_value() ? "true" : "false";
      return;
    case ExprKind::Variable:
      out += e.name();
      return;
    case ExprKind::Call:
      out += e.name();
      out += '(';
      for (std::size_t i = 0; i < e.args().size(); ++i) {
        if (i) out += ",";
        print(e.arg(i), out);
      }
      out += ')';
      return;
    case ExprKind::Unary:
      if (e.unary_op() == UnaryOp::Not) {
        out += "!(";
        print(e.arg(0), out);
        out += ')';
      } else {
        out += '-';
        // Negative literals and nested negations need parentheses so that
        // "--x" and "-(-3)" stay distinct on re-parse.
        print_wrapped(e.arg(0), precedence(e.arg(0)) <= kNeg || e.arg(0).kind() == ExprKind::Number, out);
      }
      return;
    case ExprKind::Binary: {
      BinaryOp op = e.binary_op();
      const Expr& l = e.arg(0);
      const Expr& r = e.arg(1);
      if (is_logical(op)) {
        print_logical_operand(l, op, true, out);
        out += ' ';
        out += to_string(op);
        out += ' ';
        print_logical_operand(r, op, false, out);
        return;
      }
      int p = precedence(e);
      if (op == BinaryOp::Pow) {
        print_wrapped(l, precedence(l) <= kPow || (l.kind() == ExprKind::Number && std::signbit(l.number_value())),
                      out);
        out += '^';
        print_wrapped(r, precedence(r) < kNeg, out);
        return;
      }
      if (is_comparison(op)) {
        print_wrapped(l, precedence(l) <= kCmp, out);
      } else {
        print_wrapped(l, precedence(l) < p, out);
      }
      out += ' ';
      out += to_string(op);
      out += ' ';
      print_wrapped(r, precedence(r) <= p, out);
      return;
    }
  }
}

}  // namespace detail

/// Canonical ASCII rendering; `parse_expr(to_string(e)) == e` for every tree.
inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }

  bool peek(std::string_view tok) {
    skip_ws();
    return text_.substr(pos_, tok.size()) == tok;
  }

  bool accept(std::string_view tok) {
    if (!peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (accept("||")) lhs = Expr::binary(BinaryOp::Or, lhs, parse_and());
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (accept("&&")) lhs = Expr::binary(BinaryOp::And, lhs, parse_not());
    return lhs;
  }

  Expr parse_not() {
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '!' || text_[pos_] == '~') &&
        !(pos_ + 1 < text_.size() && text_[pos_ + 1] == '=')) {
      ++pos_;
      return Expr::unary(UnaryOp::Not, parse_not());
    }
    return parse_cmp();
  }

  Expr parse_cmp() {
    Expr lhs = parse_add();
    static constexpr std::pair<std::string_view, BinaryOp> kOps[] = {
        {"<=", BinaryOp::Le}, {">=", BinaryOp::Ge}, {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne},
        {"~=", BinaryOp::Ne}, {"<", BinaryOp::Lt},  {">", BinaryOp::Gt}};
    for (const auto& [tok, op] : kOps) {
      if (accept(tok)) {
        Expr rhs = parse_add();
        for (const auto& [tok2, op2] : kOps) {
          (void)op2;
          if (peek(tok2)) fail("comparison operators do not chain");
        }
        return Expr::binary(op, lhs, rhs);
      }
    }
    return lhs;
  }

  Expr parse_add() {
    Expr lhs = parse_mul();
    for (;;) {
      if (accept("+")) {
        lhs = Expr::binary(BinaryOp::Add, lhs, parse_mul());
      } else if (peek("-")) {
        ++pos_;
        lhs = Expr::binary(BinaryOp::Sub, lhs, parse_mul());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_mul() {
    Expr lhs = parse_neg();
    for (;;) {
      if (accept("*")) {
        lhs = Expr::binary(BinaryOp::Mul, lhs, parse_neg());
      } else if (accept("/")) {
        lhs = Expr::binary(BinaryOp::Div, lhs, parse_neg());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_neg() {
    if (accept("-")) {
      skip_ws();
      bool literal = pos_ < text_.size() && (digit(text_[pos_]) || text_[pos_] == '.');
      Expr operand = parse_neg();
      if (literal && operand.kind() == ExprKind::Number && !std::signbit(operand.number_value()))
        return Expr::number(-operand.number_value());
      return Expr::unary(UnaryOp::Neg, operand);
    }
    if (accept("+")) return parse_neg();
    return parse_pow();
  }

  Expr parse_pow() {
    Expr base = parse_atom();
    if (accept("^")) return Expr::binary(BinaryOp::Pow, base, parse_neg());
    return base;
  }

  static bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_or();
      expect(")");
      return inner;
    }
    if (c == '|') fail("'|x|' bars are not supported, use abs(x)");
    if (digit(c) || (c == '.' && pos_ + 1 < text_.size() && digit(text_[pos_ + 1]))) return parse_number();
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (name == "true") return Expr::boolean(true);
      if (name == "false") return Expr::boolean(false);
      if (accept("(")) {
        std::vector<Expr> args;
        if (!accept(")")) {
          do {
            args.push_back(parse_or());
          } while (accept(","));
          expect(")");
        }
        return Expr::call(std::move(name), std::move(args));
      }
      return Expr::variable(std::move(name));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && digit(text_[pos_])) {
        while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::number(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `text`; `~` and `~=` are accepted as aliases of `!` and `!=`.
/// Unknown identifiers are not an error here, see `check_expr`.
inline Expr parse_expr(std::string_view text) { return detail::Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Label combinators. None of these simplify their input.

inline Expr negate(const Expr& e) { return Expr::unary(UnaryOp::Not, e); }

inline Expr conjoin(const std::vector<Expr>& es) {
  if (es.empty()) return Expr::boolean(true);
  Expr acc = es.front();
  for (std::size_t i = 1; i < es.size(); ++i) acc = Expr::binary(BinaryOp::And, acc, es[i]);
  return acc;
}

inline Expr disjoin(const std::vector<Expr>& es) {
  if (es.empty()) return Expr::boolean(false);
  Expr acc = es.front();
  for (std::size_t i = 1; i < es.size(); ++i) acc = Expr::binary(BinaryOp::Or, acc, es[i]);
  return acc;
}

/// Identifiers referenced as variables (not call names), in first-use order.
inline void collect_identifiers(const Expr& e, std::vector<std::string>& out) {
  if (e.kind() == ExprKind::Variable) {
    for (const auto& n : out)
      if (n == e.name()) return;
    out.push_back(e.name());
    return;
  }
  for (const auto& a : e.args()) collect_identifiers(a, out);
}

}  // namespace hytest

#endif  // HYTEST_EXPR_HPP_
