#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace hytest;

namespace {

Expr V(const char* n) { return Expr::variable(n); }
Expr N(double v) { return Expr::number(v); }
Expr B(BinaryOp op, Expr a, Expr b) { return Expr::binary(op, std::move(a), std::move(b)); }

// Random trees over every node kind, typed or not; the printer must round-trip all of them.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

  Expr any(int depth) {
    int pick = depth <= 0 ? pick_int(0, 2) : pick_int(0, 6);
    switch (pick) {
      case 0: return N(literal());
      case 1: return pick_int(0, 9) == 0 ? Expr::boolean(pick_int(0, 1) == 1) : V(kVars[pick_int(0, 2)]);
      case 2: return V(kVars[pick_int(0, 2)]);
      case 3: return Expr::unary(pick_int(0, 1) ? UnaryOp::Neg : UnaryOp::Not, any(depth - 1));
      case 4:
      case 5: return B(static_cast<BinaryOp>(pick_int(0, 12)), any(depth - 1), any(depth - 1));
      default: {
        static const char* fns[] = {"sin", "abs", "max", "f"};
        int f = pick_int(0, 3);
        std::vector<Expr> args{any(depth - 1)};
        if (f >= 2) args.push_back(any(depth - 1));
        return Expr::call(fns[f], args);
      }
    }
  }

  // Well-typed real / boolean expressions over x, y and the constant k.
  Expr real(int depth) {
    if (depth <= 0) return pick_int(0, 1) ? N(std::round(literal() * 4) / 4) : V(kVars[pick_int(0, 2)]);
    switch (pick_int(0, 4)) {
      case 0: return Expr::unary(UnaryOp::Neg, real(depth - 1));
      case 1: return B(static_cast<BinaryOp>(pick_int(0, 2)), real(depth - 1), real(depth - 1));  // + - *
      case 2: return Expr::call("abs", {real(depth - 1)});
      case 3: return Expr::call(pick_int(0, 1) ? "min" : "max", {real(depth - 1), real(depth - 1)});
      default: return real(0);
    }
  }

  Expr boolean(int depth) {
    if (depth <= 0) {
      static const BinaryOp cmp[] = {BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne};
      return B(cmp[pick_int(0, 5)], real(1), real(1));
    }
    switch (pick_int(0, 3)) {
      case 0: return Expr::unary(UnaryOp::Not, boolean(depth - 1));
      case 1: return B(BinaryOp::And, boolean(depth - 1), boolean(depth - 1));
      case 2: return B(BinaryOp::Or, boolean(depth - 1), boolean(depth - 1));
      default: return boolean(0);
    }
  }

  double literal() {
    static const double pool[] = {0, 1, 2.5, 3, -3, 0.1, -0.5, 1e-7, 12345.678, -0.0, 1e20};
    return pool[pick_int(0, 10)];
  }

  int pick_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real_value() { return std::uniform_real_distribution<double>(-5, 5)(rng_); }

 private:
  static constexpr const char* kVars[] = {"x", "y", "k"};
  std::mt19937_64 rng_;
};

Definitions defs_k() {
  Definitions d;
  d.constants["k"] = 2.0;
  return d;
}

}  // namespace

TEST(ExprParse, InvariantOfStabilizeMode) {
  Expr e = parse_expr("abs(z(th,thd)) < u_max");
  Expr want = B(BinaryOp::Lt, Expr::call("abs", {Expr::call("z", {V("th"), V("thd")})}), V("u_max"));
  EXPECT_EQ(e, want);
}

TEST(ExprParse, Literal) { EXPECT_EQ(parse_expr("0"), N(0)); }

TEST(ExprParse, UnacceptableCondition) {
  EXPECT_EQ(parse_expr("abs(x) > 3"), B(BinaryOp::Gt, Expr::call("abs", {V("x")}), N(3)));
}

TEST(ExprParse, Precedence) {
  // power binds tighter than unary minus
  EXPECT_EQ(parse_expr("-2^2"), Expr::unary(UnaryOp::Neg, B(BinaryOp::Pow, N(2), N(2))));
  EXPECT_EQ(parse_expr("-2"), N(-2));
  EXPECT_EQ(parse_expr("a + b * c"), B(BinaryOp::Add, V("a"), B(BinaryOp::Mul, V("b"), V("c"))));
  EXPECT_EQ(parse_expr("a - b - c"), B(BinaryOp::Sub, B(BinaryOp::Sub, V("a"), V("b")), V("c")));
  EXPECT_EQ(parse_expr("a ^ b ^ c"), B(BinaryOp::Pow, V("a"), B(BinaryOp::Pow, V("b"), V("c"))));
  EXPECT_EQ(parse_expr("!a < b"), Expr::unary(UnaryOp::Not, B(BinaryOp::Lt, V("a"), V("b"))));
  EXPECT_EQ(parse_expr("p || q && r"), B(BinaryOp::Or, V("p"), B(BinaryOp::And, V("q"), V("r"))));
  EXPECT_EQ(parse_expr("x<-3"), B(BinaryOp::Lt, V("x"), N(-3)));
}

TEST(ExprParse, MatlabNotationNormalized) {
  EXPECT_EQ(parse_expr("~(x ~= 0)"), parse_expr("!(x != 0)"));
  EXPECT_EQ(parse_expr("a && ~b"), parse_expr("a && !b"));
}

TEST(ExprParse, Errors) {
  EXPECT_THROW(parse_expr("a < b < c"), ParseError);
  EXPECT_THROW(parse_expr("|x| > 3"), ParseError);
  EXPECT_THROW(parse_expr("(x + 1"), ParseError);
  EXPECT_THROW(parse_expr(""), ParseError);
  try {
    parse_expr("x + * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(ExprPrint, NegationWrapsWithoutSimplifying) {
  EXPECT_EQ(to_string(negate(parse_expr("abs(x) <= 3"))), "!(abs(x) <= 3)");
  EXPECT_EQ(to_string(negate(parse_expr("!(p)"))), "!(!(p))");
  Expr c = conjoin({V("a"), V("b")});
  Expr n = negate(c);
  ASSERT_TRUE(n.is_not());
  EXPECT_EQ(n.arg(0), c);
}

TEST(ExprPrint, DisjoinAndConjoinShape) {
  Expr d = disjoin({parse_expr("abs(x)>3"), parse_expr("x==0")});
  EXPECT_EQ(d, B(BinaryOp::Or, parse_expr("abs(x) > 3"), parse_expr("x == 0")));
  EXPECT_EQ(to_string(d), "(abs(x) > 3) || (x == 0)");
  Expr c = conjoin({V("g"), negate(V("h"))});
  EXPECT_EQ(c, B(BinaryOp::And, V("g"), Expr::unary(UnaryOp::Not, V("h"))));
  EXPECT_EQ(conjoin({}), Expr::boolean(true));
  EXPECT_EQ(disjoin({}), Expr::boolean(false));
  EXPECT_EQ(conjoin({V("a"), V("b"), V("c")}), B(BinaryOp::And, B(BinaryOp::And, V("a"), V("b")), V("c")));
}

TEST(ExprProperty, PrintParseRoundTrip) {
  TreeGen gen(7);
  for (int i = 0; i < 4000; ++i) {
    Expr e = gen.any(5);
    std::string s = to_string(e);
    Expr back = parse_expr(s);
    ASSERT_EQ(back, e) << s << " reparsed as " << to_string(back);
  }
}

TEST(ExprEval, Examples) {
  Definitions none;
  EXPECT_EQ(evaluate(parse_expr("abs(x) > 3"), {{"x", 3.5}}, none), Value::of(true));
  EXPECT_EQ(evaluate(parse_expr("x == 0"), {{"x", 1e-12}}, none), Value::of(true));
  EXPECT_EQ(evaluate(parse_expr("x == 0"), {{"x", 1e-12}}, none, 0.0), Value::of(false));
  EXPECT_EQ(evaluate(parse_expr("x != 0"), {{"x", 2e-9}}, none), Value::of(true));
  EXPECT_EQ(evaluate(parse_expr("(1 < 2) && !(2 < 1)"), {}, none), Value::of(true));
  EXPECT_EQ(evaluate(parse_expr("max(2, -3) + min(2, -3) * sign(-4)"), {}, none), Value::of(5.0));
}

TEST(ExprEval, Errors) {
  Definitions none;
  EXPECT_THROW(evaluate(parse_expr("1 / x"), {{"x", 0.0}}, none), EvalError);
  EXPECT_THROW(evaluate(parse_expr("sqrt(x)"), {{"x", -1.0}}, none), EvalError);
  EXPECT_THROW(evaluate(parse_expr("y + 1"), {{"x", 0.0}}, none), EvalError);
  EXPECT_THROW(evaluate(parse_expr("x ^ 2000"), {{"x", 10.0}}, none), EvalError);
}

TEST(ExprEval, AuxFunctionsInline) {
  HybridModel h = fixtures::hybrid("pendulum");
  VarAssignment env{{"th", 0.1}, {"thd", -0.5}, {"x", 0}, {"xd", 0}};
  double z = 30 * 0.1 + 8 * -0.5;
  EXPECT_EQ(eval_expr(parse_expr("z(th,thd)"), env, h), Value::of(z));
  CompiledExpr c(parse_expr("z(th,thd) + u_max"), h.variable_names(), h.defs);
  EXPECT_DOUBLE_EQ(c.eval(std::vector<double>{0.1, -0.5, 0, 0}), z + 20);
}

TEST(ExprProperty, NegateAndConjoinAgreeWithDirectEvaluation) {
  TreeGen gen(11);
  Definitions d = defs_k();
  for (int i = 0; i < 2000; ++i) {
    std::vector<Expr> parts;
    int n = gen.pick_int(0, 4);
    for (int j = 0; j < n; ++j) parts.push_back(gen.boolean(2));
    std::map<std::string, double> env{{"x", gen.real_value()}, {"y", gen.real_value()}};
    bool all = true, any = false;
    for (const auto& p : parts) {
      bool v = evaluate(p, env, d).boolean;
      all = all && v;
      any = any || v;
      ASSERT_EQ(evaluate(negate(p), env, d).boolean, !v);
    }
    ASSERT_EQ(evaluate(conjoin(parts), env, d).boolean, all);
    ASSERT_EQ(evaluate(disjoin(parts), env, d).boolean, any);
  }
}

TEST(ExprProperty, CompiledMatchesTreeWalk) {
  TreeGen gen(13);
  Definitions d = defs_k();
  std::vector<std::string> slots{"x", "y"};
  for (int i = 0; i < 3000; ++i) {
    Expr e = i % 2 ? gen.boolean(3) : gen.real(4);
    CompiledExpr c(e, slots, d);
    double x = gen.real_value(), y = gen.real_value();
    Value v = evaluate(e, {{"x", x}, {"y", y}}, d);
    double got = c.eval(std::vector<double>{x, y});
    if (v.type == Type::Bool)
      ASSERT_EQ(got != 0.0, v.boolean) << to_string(e);
    else
      ASSERT_EQ(got, v.real) << to_string(e);
  }
}

TEST(ExprProperty, TypeCheckerRejectsMixedOperands) {
  TreeGen gen(17);
  Definitions d = defs_k();
  std::vector<std::string> vars{"x", "y"};
  for (int i = 0; i < 1000; ++i) {
    Expr b = gen.boolean(2);
    Expr r = gen.real(2);
    ASSERT_EQ(check_expr(b, d, vars), Type::Bool);
    ASSERT_EQ(check_expr(r, d, vars), Type::Real);
    // Each mutation puts an operand of the wrong type under an operator.
    Expr mutated[] = {B(BinaryOp::And, b, r), B(BinaryOp::Add, b, r), B(BinaryOp::Lt, b, r),
                      Expr::unary(UnaryOp::Not, r), Expr::unary(UnaryOp::Neg, b), Expr::call("abs", {b})};
    for (const auto& m : mutated) ASSERT_THROW(check_expr(m, d, vars), ValidationError) << to_string(m);
  }
}

TEST(ExprProperty, EvaluationIsPure) {
  TreeGen gen(19);
  Definitions d = defs_k();
  for (int i = 0; i < 500; ++i) {
    Expr e = gen.real(4);
    std::map<std::string, double> env{{"x", gen.real_value()}, {"y", gen.real_value()}};
    ASSERT_EQ(evaluate(e, env, d), evaluate(e, env, d));
  }
}

TEST(ExprIdentifiers, Collected) {
  std::vector<std::string> ids;
  collect_identifiers(parse_expr("abs(z(th,thd)) < u_max && x > 0"), ids);
  for (const char* n : {"th", "thd", "u_max", "x"}) EXPECT_NE(std::find(ids.begin(), ids.end(), n), ids.end()) << n;
}
