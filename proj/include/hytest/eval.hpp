#ifndef HYTEST_EVAL_HPP_
#define HYTEST_EVAL_HPP_

// Typing and evaluation of expressions. Two independent evaluation routes
// exist: `evaluate` walks the tree directly, `CompiledExpr` flattens it into a
// postfix program over a fixed variable slot layout for the hot loops
// (simulation of hybrid flows, condition sweeps over traces and grids).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hytest/error.hpp"
#include "hytest/expr.hpp"

namespace hytest {

/// Absolute tolerance applied by `==` and `!=`.
inline constexpr double kDefaultEqEps = 1e-9;

enum class Type { Real, Bool };

inline const char* to_string(Type t) { return t == Type::Real ? "real" : "boolean"; }

/// A model-defined, non-recursive helper function such as z(th, thd).
struct AuxFunction {
  std::string name;
  std::vector<std::string> params;
  Expr body;
};

/// Named constants and auxiliary functions visible to every expression of a model.
struct Definitions {
  std::map<std::string, double> constants;
  std::vector<AuxFunction> aux;

  const AuxFunction* find_aux(const std::string& name) const {
    for (const auto& f : aux)
      if (f.name == name) return &f;
    return nullptr;
  }
  const double* find_constant(const std::string& name) const {
    auto it = constants.find(name);
    return it == constants.end() ? nullptr : &it->second;
  }
};

namespace detail {

struct Builtin {
  const char* name;
  std::size_t arity;
};

inline constexpr Builtin kBuiltins[] = {{"sin", 1},  {"cos", 1}, {"tan", 1}, {"sqrt", 1},
                                        {"abs", 1},  {"sign", 1}, {"min", 2}, {"max", 2}};

inline const Builtin* find_builtin(const std::string& name) {
  for (const auto& b : kBuiltins)
    if (name == b.name) return &b;
  return nullptr;
}

inline double apply_builtin(const std::string& name, const double* a) {
  if (name == "sin") return std::sin(a[0]);
  if (name == "cos") return std::cos(a[0]);
  if (name == "tan") return std::tan(a[0]);
  if (name == "sqrt") return std::sqrt(a[0]);
  if (name == "abs") return std::fabs(a[0]);
  if (name == "sign") return a[0] > 0 ? 1.0 : (a[0] < 0 ? -1.0 : 0.0);
  if (name == "min") return std::min(a[0], a[1]);
  if (name == "max") return std::max(a[0], a[1]);
  throw EvalError("unknown function '" + name + "'");
}

inline double checked(double v) {
  if (!std::isfinite(v)) throw EvalError("non-finite result");
  return v;
}

inline double arith(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return checked(a + b);
    case BinaryOp::Sub: return checked(a - b);
    case BinaryOp::Mul: return checked(a * b);
    case BinaryOp::Div:
      if (b == 0.0) throw EvalError("division by zero");
      return checked(a / b);
    case BinaryOp::Pow: return checked(std::pow(a, b));
    default: break;
  }
  throw EvalError("not an arithmetic operator");
}

inline bool compare(BinaryOp op, double a, double b, double eps) {
  switch (op) {
    case BinaryOp::Lt: return a < b;
    case BinaryOp::Le: return a <= b;
    case BinaryOp::Gt: return a > b;
    case BinaryOp::Ge: return a >= b;
    case BinaryOp::Eq: return std::fabs(a - b) <= eps;
    case BinaryOp::Ne: return std::fabs(a - b) > eps;
    default: break;
  }
  throw EvalError("not a comparison operator");
}

inline bool is_reserved_word(const std::string& s) { return s == "true" || s == "false"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Type checking

/// Checks name resolution and typing. `variables` are the free real-valued
/// names allowed besides constants. Returns the expression's type.
inline Type check_expr(const Expr& e, const Definitions& defs, const std::vector<std::string>& variables) {
  switch (e.kind()) {
    case ExprKind::Number: return Type::Real;
    case ExprKind::Boolean: return Type::Bool;
    case ExprKind::Variable:
      if (std::find(variables.begin(), variables.end(), e.name()) != variables.end()) return Type::Real;
      if (defs.find_constant(e.name())) return Type::Real;
      throw ValidationError("unknown identifier '" + e.name() + "'");
    case ExprKind::Unary: {
      Type t = check_expr(e.arg(0), defs, variables);
      Type want = e.unary_op() == UnaryOp::Not ? Type::Bool : Type::Real;
      if (t != want)
        throw ValidationError(std::string("operand of '") + (e.unary_op() == UnaryOp::Not ? "!" : "-") +
                              "' must be " + to_string(want) + " in '" + to_string(e) + "'");
      return want;
    }
    case ExprKind::Binary: {
      Type l = check_expr(e.arg(0), defs, variables);
      Type r = check_expr(e.arg(1), defs, variables);
      Type want = is_logical(e.binary_op()) ? Type::Bool : Type::Real;
      if (l != want || r != want)
        throw ValidationError(std::string("operands of '") + std::string(to_string(e.binary_op())) +
                              "' must be " + to_string(want) + " in '" + to_string(e) + "'");
      return (is_logical(e.binary_op()) || is_comparison(e.binary_op())) ? Type::Bool : Type::Real;
    }
    case ExprKind::Call: {
      std::size_t arity = 0;
      Type result = Type::Real;
      if (const auto* b = detail::find_builtin(e.name())) {
        arity = b->arity;
      } else if (const auto* f = defs.find_aux(e.name())) {
        arity = f->params.size();
        result = check_expr(f->body, defs, f->params);
      } else {
        throw ValidationError("unknown function '" + e.name() + "'");
      }
      if (e.args().size() != arity)
        throw ValidationError("function '" + e.name() + "' expects " + std::to_string(arity) + " argument(s)");
      for (const auto& a : e.args())
        if (check_expr(a, defs, variables) != Type::Real)
          throw ValidationError("arguments of '" + e.name() + "' must be real");
      return result;
    }
  }
  return Type::Real;
}

/// Rejects recursive (directly or mutually) auxiliary functions and checks their bodies.
inline void check_definitions(const Definitions& defs) {
  std::set<std::string> names;
  for (const auto& [name, value] : defs.constants) {
    if (!std::isfinite(value)) throw ValidationError("constant '" + name + "' is not finite");
    if (detail::is_reserved_word(name)) throw ValidationError("'" + name + "' is a reserved word");
    names.insert(name);
  }
  for (const auto& f : defs.aux) {
    if (detail::find_builtin(f.name)) throw ValidationError("aux function '" + f.name + "' shadows a builtin");
    if (!names.insert(f.name).second) throw ValidationError("duplicate name '" + f.name + "'");
  }

  // Depth-first search over the call graph.
  std::map<std::string, int> state;  // 0 new, 1 on stack, 2 done
  std::function<void(const AuxFunction&)> visit;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (e.kind() == ExprKind::Call) {
      if (const auto* g = defs.find_aux(e.name())) visit(*g);
    }
    for (const auto& a : e.args()) walk(a);
  };
  visit = [&](const AuxFunction& f) {
    int& s = state[f.name];
    if (s == 1) throw ValidationError("aux function '" + f.name + "' is recursive");
    if (s == 2) return;
    s = 1;
    walk(f.body);
    state[f.name] = 2;
  };
  for (const auto& f : defs.aux) visit(f);
  for (const auto& f : defs.aux) {
    std::set<std::string> seen;
    for (const auto& p : f.params)
      if (!seen.insert(p).second) throw ValidationError("aux function '" + f.name + "' repeats parameter '" + p + "'");
    check_expr(f.body, defs, f.params);
  }
}

// ---------------------------------------------------------------------------
// Direct tree evaluation

/// Result of an evaluation: a real or a boolean, matching the static type.
struct Value {
  Type type = Type::Real;
  double real = 0.0;
  bool boolean = false;

  static Value of(double v) { return {Type::Real, v, false}; }
  static Value of(bool b) { return {Type::Bool, 0.0, b}; }
  friend bool operator==(const Value& a, const Value& b) {
    return a.type == b.type && (a.type == Type::Real ? a.real == b.real : a.boolean == b.boolean);
  }
};

using Lookup = std::function<std::optional<double>(const std::string&)>;

namespace detail {

inline Value evaluate(const Expr& e, const Lookup& lookup, const Definitions& defs, double eps) {
  switch (e.kind()) {
    case ExprKind::Number: return Value::of(e.number_value());
    case ExprKind::Boolean: return Value::of(e.boolean_value());
    case ExprKind::Variable: {
      if (auto v = lookup(e.name())) return Value::of(*v);
      if (const double* c = defs.find_constant(e.name())) return Value::of(*c);
      throw EvalError("unbound variable '" + e.name() + "'");
    }
    case ExprKind::Unary: {
      Value v = evaluate(e.arg(0), lookup, defs, eps);
      if (e.unary_op() == UnaryOp::Not) {
        if (v.type != Type::Bool) throw EvalError("'!' applied to a real");
        return Value::of(!v.boolean);
      }
      if (v.type != Type::Real) throw EvalError("'-' applied to a boolean");
      return Value::of(-v.real);
    }
    case ExprKind::Binary: {
      BinaryOp op = e.binary_op();
      Value l = evaluate(e.arg(0), lookup, defs, eps);
      Value r = evaluate(e.arg(1), lookup, defs, eps);
      if (is_logical(op)) {
        if (l.type != Type::Bool || r.type != Type::Bool) throw EvalError("logic on real operands");
        return Value::of(op == BinaryOp::And ? (l.boolean && r.boolean) : (l.boolean || r.boolean));
      }
      if (l.type != Type::Real || r.type != Type::Real) throw EvalError("arithmetic on boolean operands");
      if (is_comparison(op)) return Value::of(compare(op, l.real, r.real, eps));
      return Value::of(arith(op, l.real, r.real));
    }
    case ExprKind::Call: {
      std::vector<double> args;
      for (const auto& a : e.args()) {
        Value v = evaluate(a, lookup, defs, eps);
        if (v.type != Type::Real) throw EvalError("boolean argument to '" + e.name() + "'");
        args.push_back(v.real);
      }
      if (const auto* b = find_builtin(e.name())) {
        if (args.size() != b->arity) throw EvalError("wrong arity for '" + e.name() + "'");
        return Value::of(checked(apply_builtin(e.name(), args.data())));
      }
      const AuxFunction* f = defs.find_aux(e.name());
      if (!f) throw EvalError("unknown function '" + e.name() + "'");
      if (args.size() != f->params.size()) throw EvalError("wrong arity for '" + e.name() + "'");
      Lookup inner = [&](const std::string& n) -> std::optional<double> {
        for (std::size_t i = 0; i < f->params.size(); ++i)
          if (f->params[i] == n) return args[i];
        return std::nullopt;
      };
      return evaluate(f->body, inner, defs, eps);
    }
  }
  throw EvalError("corrupt expression");
}

}  // namespace detail

/// Evaluates `e` with free variables bound by `env` and names resolved via `defs`.
inline Value evaluate(const Expr& e, const std::map<std::string, double>& env, const Definitions& defs,
                      double eps_eq = kDefaultEqEps) {
  Lookup lookup = [&](const std::string& n) -> std::optional<double> {
    auto it = env.find(n);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  return detail::evaluate(e, lookup, defs, eps_eq);
}

// ---------------------------------------------------------------------------
// Compiled evaluation

/// Replaces every free occurrence of the names in `params` by the matching argument.
inline Expr substitute(const Expr& e, const std::vector<std::string>& params, const std::vector<Expr>& args) {
  switch (e.kind()) {
    case ExprKind::Variable:
      for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i] == e.name()) return args[i];
      return e;
    case ExprKind::Number:
    case ExprKind::Boolean: return e;
    case ExprKind::Unary: return Expr::unary(e.unary_op(), substitute(e.arg(0), params, args));
    case ExprKind::Binary:
      return Expr::binary(e.binary_op(), substitute(e.arg(0), params, args), substitute(e.arg(1), params, args));
    case ExprKind::Call: {
      std::vector<Expr> a;
      for (const auto& x : e.args()) a.push_back(substitute(x, params, args));
      return Expr::call(e.name(), std::move(a));
    }
  }
  return e;
}

/// Postfix program over a slot vector; booleans are encoded as 0.0 / 1.0.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  /// `slots[i]` names the variable read from `values[i]` at evaluation time.
  CompiledExpr(const Expr& e, const std::vector<std::string>& slots, const Definitions& defs,
               double eps_eq = kDefaultEqEps)
      : eps_(eps_eq) {
    std::size_t depth = 0;
    emit(e, slots, defs, depth);
  }

  double eval(const double* values) const {
    double local[64];
    std::vector<double> heap;
    double* st = local;
    if (max_depth_ >= 64) {
      heap.resize(max_depth_ + 1);
      st = heap.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : code_) {
      switch (in.op) {
        case Op::Push: st[sp++] = in.imm; break;
        case Op::Load: st[sp++] = values[in.slot]; break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Not: st[sp - 1] = st[sp - 1] != 0.0 ? 0.0 : 1.0; break;
        case Op::Arith:
          --sp;
          st[sp - 1] = detail::arith(in.bop, st[sp - 1], st[sp]);
          break;
        case Op::Compare:
          --sp;
          st[sp - 1] = detail::compare(in.bop, st[sp - 1], st[sp], eps_) ? 1.0 : 0.0;
          break;
        case Op::And:
          --sp;
          st[sp - 1] = (st[sp - 1] != 0.0 && st[sp] != 0.0) ? 1.0 : 0.0;
          break;
        case Op::Or:
          --sp;
          st[sp - 1] = (st[sp - 1] != 0.0 || st[sp] != 0.0) ? 1.0 : 0.0;
          break;
        case Op::Call1: st[sp - 1] = detail::checked(call1(in.slot, st[sp - 1])); break;
        case Op::Call2:
          --sp;
          st[sp - 1] = in.slot == 0 ? std::min(st[sp - 1], st[sp]) : std::max(st[sp - 1], st[sp]);
          break;
      }
    }
    return st[0];
  }

  double eval(const std::vector<double>& values) const { return eval(values.data()); }
  bool test(const double* values) const { return eval(values) != 0.0; }
  bool test(const std::vector<double>& values) const { return test(values.data()); }

 private:
  enum class Op { Push, Load, Neg, Not, Arith, Compare, And, Or, Call1, Call2 };
  struct Instr {
    Op op;
    BinaryOp bop = BinaryOp::Add;
    double imm = 0.0;
    std::size_t slot = 0;
  };

  static double call1(std::size_t fn, double x) {
    switch (fn) {
      case 0: return std::sin(x);
      case 1: return std::cos(x);
      case 2: return std::tan(x);
      case 3: return std::sqrt(x);
      case 4: return std::fabs(x);
      default: return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    }
  }

  void push(Instr in, std::size_t& depth, int delta) {
    code_.push_back(in);
    depth = static_cast<std::size_t>(static_cast<long>(depth) + delta);
    max_depth_ = std::max(max_depth_, depth);
  }

  void emit(const Expr& e, const std::vector<std::string>& slots, const Definitions& defs, std::size_t& depth) {
    switch (e.kind()) {
      case ExprKind::Number: push({Op::Push, BinaryOp::Add, e.number_value(), 0}, depth, 1); return;
      case ExprKind::Boolean: push({Op::Push, BinaryOp::Add, e.boolean_value() ? 1.0 : 0.0, 0}, depth, 1); return;
      case ExprKind::Variable: {
        auto it = std::find(slots.begin(), slots.end(), e.name());
        if (it != slots.end()) {
          push({Op::Load, BinaryOp::Add, 0.0, static_cast<std::size_t>(it - slots.begin())}, depth, 1);
          return;
        }
        if (const double* c = defs.find_constant(e.name())) {
          push({Op::Push, BinaryOp::Add, *c, 0}, depth, 1);
          return;
        }
        throw ValidationError("unknown identifier '" + e.name() + "'");
      }
      case ExprKind::Unary:
        emit(e.arg(0), slots, defs, depth);
        push({e.unary_op() == UnaryOp::Not ? Op::Not : Op::Neg}, depth, 0);
        return;
      case ExprKind::Binary: {
        emit(e.arg(0), slots, defs, depth);
        emit(e.arg(1), slots, defs, depth);
        BinaryOp op = e.binary_op();
        Op kind = op == BinaryOp::And ? Op::And
                  : op == BinaryOp::Or ? Op::Or
                  : is_comparison(op)  ? Op::Compare
                                       : Op::Arith;
        push({kind, op}, depth, -1);
        return;
      }
      case ExprKind::Call: {
        if (const AuxFunction* f = defs.find_aux(e.name())) {
          if (f->params.size() != e.args().size())
            throw ValidationError("function '" + e.name() + "' expects " + std::to_string(f->params.size()) +
                                  " argument(s)");
          emit(substitute(f->body, f->params, e.args()), slots, defs, depth);
          return;
        }
        static const char* kUnary[] = {"sin", "cos", "tan", "sqrt", "abs", "sign"};
        for (std::size_t i = 0; i < 6; ++i) {
          if (e.name() == kUnary[i]) {
            if (e.args().size() != 1) throw ValidationError("function '" + e.name() + "' expects 1 argument(s)");
            emit(e.arg(0), slots, defs, depth);
            push({Op::Call1, BinaryOp::Add, 0.0, i}, depth, 0);
            return;
          }
        }
        if (e.name() == "min" || e.name() == "max") {
          if (e.args().size() != 2) throw ValidationError("function '" + e.name() + "' expects 2 argument(s)");
          emit(e.arg(0), slots, defs, depth);
          emit(e.arg(1), slots, defs, depth);
          push({Op::Call2, BinaryOp::Add, 0.0, e.name() == "min" ? 0u : 1u}, depth, -1);
          return;
        }
        throw ValidationError("unknown function '" + e.name() + "'");
      }
    }
  }

  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
  double eps_ = kDefaultEqEps;
};

}  // namespace hytest

#endif  // HYTEST_EVAL_HPP_
