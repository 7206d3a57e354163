#ifndef HYTEST_TESTGEN_HPP_
#define HYTEST_TESTGEN_HPP_

// Test case generation from three sources (controlled-system traces,
// uncontrolled-plant traces and an input grid) followed by selection of one
// representative per covered test condition.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hytest/error.hpp"
#include "hytest/hybrid_model.hpp"
#include "hytest/sim_model.hpp"
#include "hytest/simulator.hpp"
#include "hytest/test_conditions.hpp"

namespace hytest {

struct TestCase {
  std::vector<double> inputs;  // in hybrid-model variable order
  VerdictClass initial_class = VerdictClass::Acceptable;
  std::int64_t condition_id = -1;  // -1: random case that satisfied no condition

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

struct TestSuite {
  std::vector<std::string> variables;
  std::vector<TestCase> cases;
  std::vector<bool> covered;             // indexed by condition id
  std::vector<std::size_t> uncovered;

  VarAssignment inputs(std::size_t i) const {
    VarAssignment out;
    for (std::size_t k = 0; k < variables.size(); ++k) out[variables[k]] = cases[i].inputs[k];
    return out;
  }
};

struct GenResult {
  std::vector<TestCase> cases;
  std::vector<bool> covered;
};

namespace detail {

inline ConditionSet compile_conditions(const std::vector<TestCondition>& tcs, const HybridModel& h, double eps_eq) {
  return ConditionSet(tcs, h.variable_names(), h.defs, eps_eq);
}

// Classifies every sample of `rows`; only conditions with check[id] set are
// emitted, but every condition takes part in the completeness check.
inline void harvest(const std::vector<TestCondition>& tcs, const ConditionSet& cs,
                    const std::vector<std::vector<double>>& rows, const std::vector<bool>& check, GenResult& res) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    bool any = false;
    for (std::size_t id = 0; id < cs.size(); ++id) {
      if (!cs.holds(id, rows[k])) continue;
      any = true;
      if (!check[id]) continue;
      res.covered[id] = true;
      res.cases.push_back({rows[k], tcs[id].verdict_class, static_cast<std::int64_t>(id)});
    }
    if (!any)
      throw ModelDefectError("Wrong hybrid model: sample " + std::to_string(k) + " satisfies no test condition", k);
  }
}

}  // namespace detail

/// Step 1: classify every sample of the controlled system's run from `cfg.init`.
inline GenResult gen_from_controlled(const std::vector<TestCondition>& tcs, const HybridModel& h, const SimModel& cps,
                                     const SimConfig& cfg, double eps_eq = kDefaultEqEps) {
  ConditionSet cs = detail::compile_conditions(tcs, h, eps_eq);
  Trace tr = simulate(cps, cfg, {}, eps_eq);
  GenResult res{{}, std::vector<bool>(tcs.size(), false)};
  detail::harvest(tcs, cs, tr.project(h.variable_names()), std::vector<bool>(tcs.size(), true), res);
  return res;
}

/// Step 2: the plant without its controller, from `cfg.plant_init` when given.
/// Only conditions not yet covered produce cases.
inline GenResult gen_from_plant(const std::vector<TestCondition>& tcs, const HybridModel& h, const SimModel& plant,
                                const SimConfig& cfg, const std::vector<bool>& covered, double eps_eq = kDefaultEqEps) {
  GenResult res{{}, covered};
  std::vector<bool> check(tcs.size());
  bool any = false;
  for (std::size_t i = 0; i < tcs.size(); ++i) any |= (check[i] = !covered[i]);
  if (!any) return res;
  ConditionSet cs = detail::compile_conditions(tcs, h, eps_eq);
  SimConfig run = cfg;
  if (cfg.plant_init) run.init = *cfg.plant_init;
  Trace tr = simulate(plant, run, SimOptions{true}, eps_eq);
  detail::harvest(tcs, cs, tr.project(h.variable_names()), check, res);
  return res;
}

/// Per-variable grid axes from -2*maxBound to +2*maxBound; enumerated
/// row-major with the last variable varying fastest.
class InputGrid {
 public:
  InputGrid() = default;
  explicit InputGrid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {}

  const std::vector<std::vector<double>>& axes() const { return axes_; }

  /// Number of points, saturating at the largest size_t.
  std::size_t size() const {
    if (axes_.empty()) return 0;
    std::size_t n = 1;
    for (const auto& a : axes_) {
      if (a.empty()) return 0;
      if (n > std::numeric_limits<std::size_t>::max() / a.size()) return std::numeric_limits<std::size_t>::max();
      n *= a.size();
    }
    return n;
  }

  /// Calls `fn(point)` in enumeration order until it returns false.
  template <class Fn>
  void for_each(Fn&& fn) const {
    if (size() == 0) return;
    const std::size_t d = axes_.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> point(d);
    for (std::size_t i = 0; i < d; ++i) point[i] = axes_[i][0];
    while (true) {
      if (!fn(static_cast<const std::vector<double>&>(point))) return;
      std::size_t i = d;
      while (i > 0) {
        --i;
        if (++idx[i] < axes_[i].size()) {
          point[i] = axes_[i][idx[i]];
          break;
        }
        idx[i] = 0;
        point[i] = axes_[i][0];
        if (i == 0) return;
      }
    }
  }

 private:
  std::vector<std::vector<double>> axes_;
};

inline constexpr std::size_t kDefaultGridCap = 10'000'000;

/// Values -2M + k*step for k = 0.. while <= 2M (within eps), M = max(|lo|,|hi|).
inline std::vector<double> grid_axis(const VariableSpec& v, std::size_t stride_mult, double eps_eq = kDefaultEqEps) {
  if (stride_mult == 0) throw ValidationError("stride multiplier must be positive");
  const double m = v.max_bound();
  const double step = v.precision * static_cast<double>(stride_mult);
  const double count = std::floor((4.0 * m + eps_eq) / step);
  std::vector<double> out;
  for (double k = 0; k <= count; ++k) out.push_back(-2.0 * m + k * step);
  return out;
}

inline InputGrid gen_input_grid(const std::vector<VariableSpec>& vars, std::size_t stride_mult = 1,
                                std::size_t cap = kDefaultGridCap, double eps_eq = kDefaultEqEps) {
  if (vars.empty()) throw ValidationError("input grid needs at least one variable");
  std::vector<std::vector<double>> axes;
  for (const auto& v : vars) axes.push_back(grid_axis(v, stride_mult, eps_eq));
  InputGrid g(std::move(axes));
  if (g.size() > cap)
    throw GridTooLargeError("input grid has " + std::to_string(g.size()) + " points, above the cap of " +
                            std::to_string(cap) + "; raise the stride multiplier or the cap");
  return g;
}

struct GridOptions {
  /// Keep evaluating covered conditions and emit every hit instead of
  /// stopping at the first point per condition.
  bool exhaustive = false;
};

/// Step 3: classify grid points against the conditions not yet covered.
inline GenResult gen_from_grid(const std::vector<TestCondition>& tcs, const ConditionSet& cs, const InputGrid& grid,
                               const std::vector<bool>& covered, const GridOptions& opts = {}) {
  GenResult res{{}, covered};
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < tcs.size(); ++i)
    if (!covered[i]) open.push_back(i);
  if (open.empty()) return res;
  grid.for_each([&](const std::vector<double>& p) {
    for (std::size_t j = 0; j < open.size();) {
      std::size_t id = open[j];
      if (cs.holds(id, p)) {
        res.covered[id] = true;
        res.cases.push_back({p, tcs[id].verdict_class, static_cast<std::int64_t>(id)});
        if (!opts.exhaustive) {
          open.erase(open.begin() + static_cast<std::ptrdiff_t>(j));
          continue;
        }
      }
      ++j;
    }
    return !open.empty();
  });
  return res;
}

/// Step 4: per condition id keep the lexicographically smallest inputs
/// (earlier source list wins exact ties), then drop cases repeating the
/// (inputs, class) of a lower id.
inline TestSuite select_tests(const std::vector<TestCase>& t1, const std::vector<TestCase>& t2,
                              const std::vector<TestCase>& t3, std::size_t n_conditions,
                              std::vector<std::string> variables = {}) {
  std::map<std::int64_t, const TestCase*> best;
  for (const auto* list : {&t1, &t2, &t3}) {
    for (const auto& c : *list) {
      auto [it, inserted] = best.emplace(c.condition_id, &c);
      if (!inserted && c.inputs < it->second->inputs) it->second = &c;
    }
  }
  TestSuite s;
  s.variables = std::move(variables);
  s.covered.assign(n_conditions, false);
  std::vector<std::pair<std::vector<double>, VerdictClass>> seen;
  for (const auto& [id, c] : best) {
    if (id >= 0 && static_cast<std::size_t>(id) < n_conditions) s.covered[static_cast<std::size_t>(id)] = true;
    bool dup = false;
    for (const auto& [in, cls] : seen) dup |= (cls == c->initial_class && in == c->inputs);
    if (dup) continue;
    seen.emplace_back(c->inputs, c->initial_class);
    s.cases.push_back(*c);
  }
  for (std::size_t i = 0; i < n_conditions; ++i)
    if (!s.covered[i]) s.uncovered.push_back(i);
  return s;
}

struct GenOptions {
  std::size_t stride_mult = 1;
  std::size_t grid_cap = kDefaultGridCap;
  double eps_eq = kDefaultEqEps;
};

struct GenReport {
  TestSuite suite;
  std::size_t from_controlled = 0;
  std::size_t from_plant = 0;
  std::size_t from_grid = 0;
  std::size_t grid_points = 0;
};

/// Full pipeline: controlled run, plant run, grid, selection.
inline GenReport generate_suite(const HybridModel& h, const std::vector<TestCondition>& tcs, const SimModel& cps,
                                const SimConfig& cfg, const GenOptions& opts = {}) {
  GenResult r1 = gen_from_controlled(tcs, h, cps, cfg, opts.eps_eq);
  GenResult r2 = gen_from_plant(tcs, h, cps, cfg, r1.covered, opts.eps_eq);
  GenReport rep;
  GenResult r3{{}, r2.covered};
  bool open = false;
  for (bool c : r2.covered) open |= !c;
  if (open) {
    InputGrid grid = gen_input_grid(h.variables, opts.stride_mult, opts.grid_cap, opts.eps_eq);
    rep.grid_points = grid.size();
    r3 = gen_from_grid(tcs, detail::compile_conditions(tcs, h, opts.eps_eq), grid, r2.covered);
  }
  rep.from_controlled = r1.cases.size();
  rep.from_plant = r2.cases.size();
  rep.from_grid = r3.cases.size();
  rep.suite = select_tests(r1.cases, r2.cases, r3.cases, tcs.size(), h.variable_names());
  return rep;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// `n` points drawn uniformly over each variable's [-2M, 2M], classed by the
/// first condition they satisfy.
inline TestSuite gen_random_suite(const HybridModel& h, const std::vector<TestCondition>& tcs, std::size_t n,
                                  std::uint64_t seed, double eps_eq = kDefaultEqEps) {
  ConditionSet cs = detail::compile_conditions(tcs, h, eps_eq);
  std::mt19937_64 rng(seed);
  TestSuite s;
  s.variables = h.variable_names();
  s.covered.assign(tcs.size(), false);
  for (std::size_t i = 0; i < n; ++i) {
    TestCase c;
    for (const auto& v : h.variables) {
      double m = 2.0 * v.max_bound();
      c.inputs.push_back(-m + 2.0 * m * unit_uniform(rng));
    }
    for (std::size_t id = 0; id < cs.size(); ++id) {
      if (cs.holds(id, c.inputs)) {
        c.condition_id = static_cast<std::int64_t>(id);
        c.initial_class = tcs[id].verdict_class;
        s.covered[id] = true;
        break;
      }
    }
    s.cases.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < tcs.size(); ++i)
    if (!s.covered[i]) s.uncovered.push_back(i);
  return s;
}

// ---------------------------------------------------------------------------
// Suite files

inline nlohmann::json to_json(const TestSuite& s) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < s.cases.size(); ++i) {
    nlohmann::json in = nlohmann::json::object();
    for (std::size_t k = 0; k < s.variables.size(); ++k) in[s.variables[k]] = s.cases[i].inputs[k];
    out.push_back({{"inputs", in}, {"class", to_string(s.cases[i].initial_class)}, {"condition_id", s.cases[i].condition_id}});
  }
  return out;
}

/// Reads a suite array; `variables` fixes the input order.
inline TestSuite suite_from_json(const nlohmann::json& j, const std::vector<std::string>& variables) {
  if (!j.is_array()) throw ValidationError("test suite must be a JSON array");
  TestSuite s;
  s.variables = variables;
  for (const auto& e : j) {
    TestCase c;
    const auto& in = detail::require(e, "inputs", "test case");
    for (const auto& v : variables) {
      if (!in.contains(v) || !in.at(v).is_number()) throw ValidationError("test case lacks a value for '" + v + "'");
      c.inputs.push_back(in.at(v).get<double>());
    }
    c.initial_class = parse_verdict_class(detail::require_string(e, "class", "test case"));
    c.condition_id = e.value("condition_id", std::int64_t{-1});
    s.cases.push_back(std::move(c));
  }
  return s;
}

inline std::string suite_to_csv(const TestSuite& s) {
  std::string out;
  for (const auto& v : s.variables) out += v + ",";
  out += "class,condition_id\n";
  for (const auto& c : s.cases) {
    for (double x : c.inputs) {
      detail::format_number(x, out);
      out += ",";
    }
    out += std::string(to_string(c.initial_class)) + "," + std::to_string(c.condition_id) + "\n";
  }
  return out;
}

}  // namespace hytest

#endif  // HYTEST_TESTGEN_HPP_
