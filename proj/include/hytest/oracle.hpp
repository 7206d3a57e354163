#ifndef HYTEST_ORACLE_HPP_
#define HYTEST_ORACLE_HPP_

// Test oracle: runs a test case, classifies every sample into the set of
// modes its satisfied test conditions point to, and judges the sequence of
// sets against the condition graph and the goal.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hytest/condition_graph.hpp"
#include "hytest/error.hpp"
#include "hytest/hybrid_model.hpp"
#include "hytest/sim_model.hpp"
#include "hytest/simulator.hpp"
#include "hytest/test_conditions.hpp"
#include "hytest/testgen.hpp"

namespace hytest {

struct PossibleMode {
  std::size_t node = 0;  // condition-graph node index
  VerdictClass cls = VerdictClass::Acceptable;

  friend bool operator==(const PossibleMode&, const PossibleMode&) = default;
  friend bool operator<(const PossibleMode& a, const PossibleMode& b) {
    return std::pair(a.node, a.cls) < std::pair(b.node, b.cls);
  }
};

using ModeSet = std::vector<PossibleMode>;  // sorted, unique
using ModeSetTimeline = std::vector<ModeSet>;

enum class Outcome { Passed, Failed };

inline const char* to_string(Outcome o) { return o == Outcome::Passed ? "passed" : "failed"; }

enum class ReasonCode {
  DisallowedTransition,
  EnteredFailing,
  RecoveredFromFailing,
  GoalNotReached,
  FailingStartReachedGoal,
  SimulationException
};

inline const char* to_string(ReasonCode r) {
  switch (r) {
    case ReasonCode::DisallowedTransition: return "DisallowedTransition";
    case ReasonCode::EnteredFailing: return "EnteredFailing";
    case ReasonCode::RecoveredFromFailing: return "RecoveredFromFailing";
    case ReasonCode::GoalNotReached: return "GoalNotReached";
    case ReasonCode::FailingStartReachedGoal: return "FailingStartReachedGoal";
    case ReasonCode::SimulationException: return "SimulationException";
  }
  return "?";
}

struct Reason {
  ReasonCode code = ReasonCode::GoalNotReached;
  std::size_t t_index = 0;
  std::string detail;
};

struct Verdict {
  Outcome outcome = Outcome::Passed;
  std::vector<Reason> reasons;

  bool has(ReasonCode c) const {
    return std::any_of(reasons.begin(), reasons.end(), [c](const Reason& r) { return r.code == c; });
  }
};

/// Everything the oracle needs about one hybrid model, prepared once.
class OracleContext {
 public:
  OracleContext(const HybridModel& h, ConditionGraph g, std::vector<TestCondition> tcs, double eps_eq = kDefaultEqEps)
      : variables_(h.variable_names()), graph_(std::move(g)), tcs_(std::move(tcs)),
        cs_(tcs_, variables_, h.defs, eps_eq) {
    const std::size_t n = graph_.nodes.size();
    allowed_.assign(n * n, false);
    for (const auto& e : graph_.edges) allowed_[e.source * n + e.destination] = true;
    for (const auto& t : tcs_) destination_.push_back(graph_.require_node(t.destination));
  }

  explicit OracleContext(const HybridModel& h, double eps_eq = kDefaultEqEps)
      : OracleContext(h, build_condition_graph(h), gen_test_conditions(build_condition_graph(h)), eps_eq) {}

  const std::vector<std::string>& variables() const { return variables_; }
  const ConditionGraph& graph() const { return graph_; }
  const std::vector<TestCondition>& conditions() const { return tcs_; }
  const ConditionSet& compiled() const { return cs_; }

  bool allowed(std::size_t from, std::size_t to) const { return allowed_[from * graph_.nodes.size() + to]; }

  /// Modes implied by the conditions that hold for `values` (variable order).
  ModeSet possible_modes(const std::vector<double>& values) const {
    ModeSet out;
    for (std::size_t id = 0; id < tcs_.size(); ++id)
      if (cs_.holds(id, values)) out.push_back({destination_[id], tcs_[id].verdict_class});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  ModeSet possible_modes(const VarAssignment& sample) const {
    std::vector<double> v;
    for (const auto& n : variables_) {
      auto it = sample.find(n);
      if (it == sample.end()) throw EvalError("sample lacks a value for '" + n + "'");
      v.push_back(it->second);
    }
    return possible_modes(v);
  }

 private:
  std::vector<std::string> variables_;
  ConditionGraph graph_;
  std::vector<TestCondition> tcs_;
  ConditionSet cs_;
  std::vector<bool> allowed_;
  std::vector<std::size_t> destination_;
};

/// Mode sets for every sample; an empty set is a defect of the hybrid model.
inline ModeSetTimeline build_timeline(const OracleContext& ctx, const std::vector<std::vector<double>>& rows) {
  ModeSetTimeline tl;
  tl.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    tl.push_back(ctx.possible_modes(rows[k]));
    if (tl.back().empty())
      throw ModelDefectError("The hybrid model was not designed correctly: sample " + std::to_string(k) +
                                 " fits no test condition (Wrong hybrid model)",
                             k);
  }
  return tl;
}

/// Applies the verdict rules to a complete timeline.
inline Verdict judge(const OracleContext& ctx, const ModeSetTimeline& tl, VerdictClass initial_class) {
  Verdict v;
  const std::size_t failing = ctx.graph().failing_node();
  for (std::size_t j = 0; j + 1 < tl.size(); ++j) {
    bool legal = false;
    for (const auto& a : tl[j])
      for (const auto& b : tl[j + 1]) legal |= ctx.allowed(a.node, b.node);
    if (!legal) {
      v.reasons.push_back({ReasonCode::DisallowedTransition, j + 1, {}});
      break;
    }
  }
  auto has_failing = [&](const ModeSet& s) {
    return std::any_of(s.begin(), s.end(), [&](const PossibleMode& m) { return m.node == failing; });
  };
  auto has_other = [&](const ModeSet& s) {
    return std::any_of(s.begin(), s.end(), [&](const PossibleMode& m) { return m.node != failing; });
  };
  for (std::size_t j = 0; j < tl.size(); ++j) {
    if (!has_failing(tl[j])) continue;
    v.reasons.push_back({ReasonCode::EnteredFailing, j, {}});
    for (std::size_t k = j + 1; k < tl.size(); ++k) {
      if (has_other(tl[k])) {
        v.reasons.push_back({ReasonCode::RecoveredFromFailing, k, {}});
        break;
      }
    }
    break;
  }
  if (v.reasons.empty() && !tl.empty()) {
    const ModeSet& last = tl.back();
    bool goal = std::any_of(last.begin(), last.end(), [](const PossibleMode& m) { return m.cls == VerdictClass::Passed; });
    if (goal && initial_class == VerdictClass::Failed)
      v.reasons.push_back({ReasonCode::FailingStartReachedGoal, tl.size() - 1, {}});
    else if (!goal)
      v.reasons.push_back({ReasonCode::GoalNotReached, tl.size() - 1, {}});
  }
  v.outcome = v.reasons.empty() ? Outcome::Passed : Outcome::Failed;
  return v;
}

/// Simulates `model` from the case's inputs over `cfg.t_end` and judges the run.
inline Verdict run_test(const SimModel& model, const TestCase& tc, const OracleContext& ctx, const SimConfig& cfg,
                        double eps_eq = kDefaultEqEps) {
  SimConfig run = cfg;
  run.init.clear();
  for (std::size_t i = 0; i < ctx.variables().size(); ++i) run.init[ctx.variables()[i]] = tc.inputs[i];
  Trace tr;
  try {
    tr = simulate(model, run, {}, eps_eq);
  } catch (const SimulationError& e) {
    Verdict v{Outcome::Failed, {{ReasonCode::SimulationException, 0, e.what()}}};
    return v;
  }
  return judge(ctx, build_timeline(ctx, tr.project(ctx.variables())), tc.initial_class);
}

enum class Attribution {
  /// A model is fault-revealed when some case fails on it but passed on the reference.
  AgainstReference,
  /// Any failed case reveals a fault.
  AnyFailure
};

struct ModelResult {
  std::string name;
  std::vector<Verdict> verdicts;
  std::optional<std::string> model_defect;
  bool revealed = false;
  std::size_t revealing_cases = 0;
};

struct SuiteReport {
  ModelResult reference;
  std::vector<ModelResult> models;
  std::size_t revealed = 0;
  double exec_seconds = 0.0;
};

namespace detail {

inline ModelResult run_all(const SimModel& m, const TestSuite& suite, const OracleContext& ctx, const SimConfig& cfg) {
  ModelResult r;
  r.name = m.name;
  try {
    for (const auto& tc : suite.cases) r.verdicts.push_back(run_test(m, tc, ctx, cfg));
  } catch (const ModelDefectError& e) {
    r.model_defect = e.what();
    r.verdicts.clear();
  }
  return r;
}

}  // namespace detail

/// Runs the suite on the reference and on every model in `models`. A model
/// whose run exposes a hybrid-model defect the reference does not counts as revealed.
inline SuiteReport run_suite(const SimModel& reference, const std::vector<SimModel>& models, const TestSuite& suite,
                             const OracleContext& ctx, const SimConfig& cfg,
                             Attribution rule = Attribution::AgainstReference) {
  auto start = std::chrono::steady_clock::now();
  SuiteReport rep;
  rep.reference = detail::run_all(reference, suite, ctx, cfg);
  auto passed_on_ref = [&](std::size_t i) {
    return !rep.reference.model_defect && rep.reference.verdicts[i].outcome == Outcome::Passed;
  };
  for (const auto& m : models) {
    ModelResult r = detail::run_all(m, suite, ctx, cfg);
    if (r.model_defect) {
      r.revealed = rule == Attribution::AnyFailure || !rep.reference.model_defect;
    } else {
      for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
        if (r.verdicts[i].outcome != Outcome::Failed) continue;
        if (rule == Attribution::AnyFailure || passed_on_ref(i)) ++r.revealing_cases;
      }
      r.revealed = r.revealing_cases > 0;
    }
    rep.revealed += r.revealed ? 1 : 0;
    rep.models.push_back(std::move(r));
  }
  rep.exec_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline nlohmann::json to_json(const Verdict& v) {
  nlohmann::json reasons = nlohmann::json::array();
  for (const auto& r : v.reasons) {
    nlohmann::json j{{"code", to_string(r.code)}, {"t_index", r.t_index}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    reasons.push_back(j);
  }
  return {{"outcome", to_string(v.outcome)}, {"reasons", reasons}};
}

inline nlohmann::json to_json(const ModelResult& r) {
  nlohmann::json j{{"name", r.name}, {"revealed", r.revealed}, {"revealing_cases", r.revealing_cases}};
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : r.verdicts) j["verdicts"].push_back(to_json(v));
  if (r.model_defect) j["model_defect"] = *r.model_defect;
  return j;
}

inline nlohmann::json to_json(const SuiteReport& rep, bool with_timings = true) {
  nlohmann::json j{{"reference", to_json(rep.reference)}, {"revealed", rep.revealed}, {"total", rep.models.size()}};
  j["models"] = nlohmann::json::array();
  for (const auto& m : rep.models) j["models"].push_back(to_json(m));
  if (with_timings) j["exec_seconds"] = rep.exec_seconds;
  return j;
}

}  // namespace hytest

#endif  // HYTEST_ORACLE_HPP_
