#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace hytest;

namespace {

VariableSpec var(const char* n, double lo, double hi, double p) { return {n, lo, hi, p}; }

TestCase tc(std::vector<double> in, VerdictClass c, std::int64_t id) { return {std::move(in), c, id}; }

struct Pendulum {
  HybridModel h = fixtures::hybrid("pendulum");
  SimModel m = fixtures::sim("pendulum");
  std::vector<TestCondition> tcs = gen_test_conditions(build_condition_graph(h));
  SimConfig cfg = *m.simulation;
};

}  // namespace

TEST(InputGrid, AxisFromBounds) {
  auto axis = grid_axis(var("x", -3, 3, 1), 1);
  std::vector<double> want;
  for (int k = -6; k <= 6; ++k) want.push_back(k);
  EXPECT_EQ(axis, want);
  EXPECT_EQ(grid_axis(var("y", -1, 1, 4), 1), (std::vector<double>{-2, 2}));
  EXPECT_EQ(grid_axis(var("x", -3, 3, 1), 3), (std::vector<double>{-6, -3, 0, 3, 6}));
  EXPECT_EQ(grid_axis(var("x", 0, 2, 1.5), 1), (std::vector<double>{-4, -2.5, -1, 0.5, 2, 3.5}));
}

TEST(InputGrid, ProductOrderAndSize) {
  InputGrid g = gen_input_grid({var("a", -3, 3, 1), var("b", -3, 3, 1)});
  EXPECT_EQ(g.size(), 169u);
  std::vector<std::vector<double>> seen;
  g.for_each([&](const std::vector<double>& p) {
    seen.push_back(p);
    return true;
  });
  ASSERT_EQ(seen.size(), 169u);
  EXPECT_EQ(seen[0], (std::vector<double>{-6, -6}));
  EXPECT_EQ(seen[1], (std::vector<double>{-6, -5}));
  EXPECT_EQ(seen[13], (std::vector<double>{-5, -6}));
  EXPECT_EQ(seen.back(), (std::vector<double>{6, 6}));
  EXPECT_EQ(std::set<std::vector<double>>(seen.begin(), seen.end()).size(), 169u);

  std::size_t n = 0;
  g.for_each([&](const std::vector<double>&) { return ++n < 5; });
  EXPECT_EQ(n, 5u);
}

TEST(InputGrid, CapExceeded) {
  std::vector<VariableSpec> vars{var("a", -3, 3, 1), var("b", -3, 3, 1)};
  EXPECT_THROW(gen_input_grid(vars, 1, 168), GridTooLargeError);
  EXPECT_NO_THROW(gen_input_grid(vars, 1, 169));
  try {
    gen_input_grid(vars, 1, 100);
  } catch (const GridTooLargeError& e) {
    EXPECT_NE(std::string(e.what()).find("stride"), std::string::npos);
  }
}

TEST(GridGeneration, NothingUncovered) {
  HybridModel h = fixtures::tiny_model();
  auto tcs = gen_test_conditions(build_condition_graph(h));
  ConditionSet cs(tcs, h.variable_names(), h.defs);
  std::size_t visited = 0;
  InputGrid grid = gen_input_grid(h.variables);
  GenResult r = gen_from_grid(tcs, cs, grid, std::vector<bool>(tcs.size(), true));
  EXPECT_TRUE(r.cases.empty());
  grid.for_each([&](const std::vector<double>&) { return ++visited, true; });
  EXPECT_EQ(visited, 13u);
}

TEST(GridGeneration, FailingPoint) {
  HybridModel h = fixtures::tiny_model();
  auto tcs = gen_test_conditions(build_condition_graph(h));
  std::vector<bool> covered(tcs.size(), true);
  std::size_t fail_id = 0;
  for (const auto& t : tcs)
    if (t.source == "b" && t.destination == kFailingMode) fail_id = t.id;
  covered[fail_id] = false;
  ConditionSet cs(tcs, h.variable_names(), h.defs);
  GenResult r = gen_from_grid(tcs, cs, InputGrid(std::vector<std::vector<double>>{{4.0}}), covered);
  ASSERT_EQ(r.cases.size(), 1u);
  EXPECT_EQ(r.cases[0].initial_class, VerdictClass::Failed);
  EXPECT_EQ(r.cases[0].condition_id, static_cast<std::int64_t>(fail_id));
  EXPECT_TRUE(r.covered[fail_id]);
}

TEST(GridGeneration, UnsatisfiableStaysUncovered) {
  HybridModel h = fixtures::tiny_model();
  std::vector<TestCondition> tcs{{0, "a", "a", parse_expr("x < 0 && !(x < 0)"), VerdictClass::Acceptable},
                                 {1, "a", "b", parse_expr("x >= 0"), VerdictClass::Passed}};
  ConditionSet cs(tcs, h.variable_names(), h.defs);
  GenResult r = gen_from_grid(tcs, cs, gen_input_grid(h.variables), {false, false});
  EXPECT_FALSE(r.covered[0]);
  EXPECT_TRUE(r.covered[1]);
  TestSuite s = select_tests({}, {}, r.cases, tcs.size(), h.variable_names());
  EXPECT_EQ(s.uncovered, (std::vector<std::size_t>{0}));
}

TEST(Selection, OnePerCondition) {
  auto s = select_tests({tc({1, 2}, VerdictClass::Passed, 0)}, {tc({0, 5}, VerdictClass::Passed, 0)}, {}, 1);
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_EQ(s.cases[0].inputs, (std::vector<double>{0, 5}));
}

TEST(Selection, DuplicateInputsAndClassKeepLowestId) {
  auto s = select_tests({tc({1, 1}, VerdictClass::Acceptable, 7)}, {}, {tc({1, 1}, VerdictClass::Acceptable, 3)}, 8);
  ASSERT_EQ(s.cases.size(), 1u);
  EXPECT_EQ(s.cases[0].condition_id, 3);
  EXPECT_TRUE(s.covered[3]);
  EXPECT_TRUE(s.covered[7]);
  EXPECT_EQ(s.uncovered.size(), 6u);

  // Same inputs, different class: both kept.
  s = select_tests({tc({1, 1}, VerdictClass::Acceptable, 3), tc({1, 1}, VerdictClass::Failed, 4)}, {}, {}, 5);
  EXPECT_EQ(s.cases.size(), 2u);
}

TEST(Selection, TiesPreferEarlierSource) {
  TestCase a = tc({1}, VerdictClass::Passed, 0), b = tc({1}, VerdictClass::Passed, 0);
  a.initial_class = VerdictClass::Passed;
  b.initial_class = VerdictClass::Acceptable;  // marks where the survivor came from
  auto s = select_tests({a}, {b}, {}, 1);
  EXPECT_EQ(s.cases[0].initial_class, VerdictClass::Passed);
}

TEST(ControlledGeneration, StabilizingRunIsPassed) {
  Pendulum p;
  p.cfg.init = {{"th", 0.1}, {"thd", 0}, {"x", 0}, {"xd", 0}};
  GenResult r = gen_from_controlled(p.tcs, p.h, p.m, p.cfg);
  ASSERT_FALSE(r.cases.empty());
  std::set<std::int64_t> ids;
  for (const auto& c : r.cases) {
    EXPECT_EQ(c.initial_class, VerdictClass::Passed);
    EXPECT_EQ(p.tcs[c.condition_id].destination, "stabilize");
    ids.insert(c.condition_id);
  }
  // The self-loop and both entries into stabilize hold at every sample.
  EXPECT_EQ(ids.size(), 3u);
  std::size_t samples = static_cast<std::size_t>(std::floor(p.cfg.t_end / p.cfg.sample_time + 1e-9)) + 1;
  EXPECT_EQ(r.cases.size(), 3 * samples);
}

TEST(ControlledGeneration, SampleWithoutConditionIsDefect) {
  Pendulum p;
  std::vector<TestCondition> holed;
  for (const auto& t : p.tcs)
    if (t.destination != "stabilize") holed.push_back(t);
  try {
    gen_from_controlled(holed, p.h, p.m, p.cfg);
    FAIL() << "no defect raised";
  } catch (const ModelDefectError& e) {
    EXPECT_NE(std::string(e.what()).find("Wrong hybrid model"), std::string::npos);
  }
}

TEST(PlantGeneration, CoversFailingCondition) {
  Pendulum p;
  GenResult r1 = gen_from_controlled(p.tcs, p.h, p.m, p.cfg);
  GenResult r2 = gen_from_plant(p.tcs, p.h, p.m, p.cfg, r1.covered);
  bool new_failed = false;
  for (std::size_t i = 0; i < p.tcs.size(); ++i) {
    EXPECT_TRUE(!r1.covered[i] || r2.covered[i]);
    if (!r1.covered[i] && r2.covered[i] && p.tcs[i].verdict_class == VerdictClass::Failed) new_failed = true;
  }
  EXPECT_TRUE(new_failed);
  for (const auto& c : r2.cases) EXPECT_FALSE(r1.covered[c.condition_id]);

  GenResult none = gen_from_plant(p.tcs, p.h, p.m, p.cfg, std::vector<bool>(p.tcs.size(), true));
  EXPECT_TRUE(none.cases.empty());
}

TEST(GenerationProperty, EarlyStopMatchesExhaustive) {
  for (const char* base : fixtures::kBundled) {
    HybridModel h = fixtures::hybrid(base);
    auto tcs = gen_test_conditions(build_condition_graph(h));
    ConditionSet cs(tcs, h.variable_names(), h.defs);
    InputGrid grid = gen_input_grid(h.variables);
    std::vector<bool> none(tcs.size(), false);
    GenResult lazy = gen_from_grid(tcs, cs, grid, none);
    GenResult full = gen_from_grid(tcs, cs, grid, none, GridOptions{true});
    EXPECT_EQ(lazy.covered, full.covered) << base;
    EXPECT_LE(lazy.cases.size(), full.cases.size());
  }
}

TEST(GenerationProperty, SuiteInvariants) {
  for (const char* base : fixtures::kBundled) {
    HybridModel h = fixtures::hybrid(base);
    SimModel m = fixtures::sim(base);
    auto tcs = gen_test_conditions(build_condition_graph(h));
    GenReport rep = generate_suite(h, tcs, m, *m.simulation);
    const TestSuite& s = rep.suite;
    EXPECT_LE(s.cases.size(), tcs.size()) << base;
    std::set<std::pair<std::vector<double>, VerdictClass>> keys;
    for (const auto& c : s.cases) {
      EXPECT_TRUE(keys.insert({c.inputs, c.initial_class}).second) << base;
      ASSERT_GE(c.condition_id, 0);
      EXPECT_EQ(c.initial_class, tcs[c.condition_id].verdict_class);
      EXPECT_EQ(c.inputs.size(), h.variables.size());
    }
    EXPECT_TRUE(s.uncovered.empty()) << base;
    GenReport again = generate_suite(h, tcs, m, *m.simulation);
    EXPECT_EQ(again.suite.cases, s.cases);
  }
}

TEST(GenerationProperty, PendulumSuiteHasPassedCaseOfFourValues) {
  Pendulum p;
  TestSuite s = generate_suite(p.h, p.tcs, p.m, p.cfg).suite;
  bool found = false;
  for (const auto& c : s.cases) found |= c.inputs.size() == 4 && c.initial_class == VerdictClass::Passed;
  EXPECT_TRUE(found);
}

TEST(RandomSuite, BoundsDeterminismAndEmpty) {
  HybridModel h = fixtures::hybrid("pendulum");
  auto tcs = gen_test_conditions(build_condition_graph(h));
  TestSuite a = gen_random_suite(h, tcs, 10'000, 42);
  ASSERT_EQ(a.cases.size(), 10'000u);
  for (const auto& c : a.cases)
    for (std::size_t i = 0; i < h.variables.size(); ++i) {
      double m = 2 * h.variables[i].max_bound();
      ASSERT_GE(c.inputs[i], -m);
      ASSERT_LT(c.inputs[i], m);
    }
  EXPECT_EQ(gen_random_suite(h, tcs, 10'000, 42).cases, a.cases);
  EXPECT_NE(gen_random_suite(h, tcs, 10, 43).cases[0], a.cases[0]);
  EXPECT_TRUE(gen_random_suite(h, tcs, 0, 42).cases.empty());

  // Every draw is classed by the first condition it satisfies.
  ConditionSet cs(tcs, h.variable_names(), h.defs);
  for (std::size_t k = 0; k < 200; ++k) {
    const auto& c = a.cases[k];
    std::int64_t first = -1;
    for (std::size_t id = 0; id < cs.size() && first < 0; ++id)
      if (cs.holds(id, c.inputs)) first = static_cast<std::int64_t>(id);
    EXPECT_EQ(c.condition_id, first);
  }
}

TEST(RandomSuite, UnitUniformIsFixed) {
  std::mt19937_64 rng(1);
  std::mt19937_64 ref(1);
  double u = unit_uniform(rng);
  EXPECT_EQ(u, static_cast<double>(ref() >> 11) / 9007199254740992.0);
}

TEST(SuiteIo, JsonRoundTripAndCsv) {
  Pendulum p;
  TestSuite s = generate_suite(p.h, p.tcs, p.m, p.cfg).suite;
  TestSuite back = suite_from_json(to_json(s), p.h.variable_names());
  EXPECT_EQ(back.cases, s.cases);
  std::string csv = suite_to_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "th,thd,x,xd,class,condition_id");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), s.cases.size() + 1);
}
