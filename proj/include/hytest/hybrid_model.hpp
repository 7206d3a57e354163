#ifndef HYTEST_HYBRID_MODEL_HPP_
#define HYTEST_HYBRID_MODEL_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hytest/error.hpp"
#include "hytest/eval.hpp"
#include "hytest/expr.hpp"

namespace hytest {

/// Name reserved for the failing node added to every condition graph.
inline constexpr const char* kFailingMode = "__failing__";

/// Continuous state: variable name to value.
using VarAssignment = std::map<std::string, double>;

struct VariableSpec {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  double precision = 1.0;

  double max_bound() const { return std::max(std::fabs(lo), std::fabs(hi)); }
};

struct Mode {
  std::string name;
  Expr invariant;
  std::vector<std::pair<std::string, Expr>> flows;  // variable -> derivative
  std::vector<Expr> unacceptable;                   // per-mode unacceptable conditions
};

struct Transition {
  std::string source;
  std::string destination;
  Expr guard;
};

struct FinalModes {
  std::vector<std::string> modes;
};
struct GoalExpr {
  Expr expr;
};
using Goal = std::variant<FinalModes, GoalExpr>;

struct HybridModel {
  std::string name;
  std::vector<VariableSpec> variables;
  Definitions defs;
  std::vector<Mode> modes;
  std::vector<Transition> transitions;
  Goal goal = FinalModes{};
  std::optional<std::vector<Expr>> unacceptable;

  std::vector<std::string> variable_names() const {
    std::vector<std::string> out;
    for (const auto& v : variables) out.push_back(v.name);
    return out;
  }

  const Mode* find_mode(const std::string& n) const {
    for (const auto& m : modes)
      if (m.name == n) return &m;
    return nullptr;
  }

  std::optional<std::size_t> mode_index(const std::string& n) const {
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (modes[i].name == n) return i;
    return std::nullopt;
  }
};

/// Evaluates an expression against a model's constants and aux functions.
inline Value eval_expr(const Expr& e, const VarAssignment& env, const HybridModel& model,
                       double eps_eq = kDefaultEqEps) {
  return evaluate(e, env, model.defs, eps_eq);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool valid_mode_name(const std::string& n) {
  if (n.empty()) return false;
  for (char c : n)
    if (c == ',' || c == '#' || c == '@' || c == '\n' || c == '\r') return false;
  return true;
}

inline bool valid_identifier(const std::string& n) {
  if (n.empty()) return false;
  auto start = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  if (!start(n[0])) return false;
  for (char c : n)
    if (!start(c) && !(c >= '0' && c <= '9')) return false;
  return true;
}

inline void expect_type(const Expr& e, Type want, const HybridModel& m, const std::string& where) {
  Type t;
  try {
    t = check_expr(e, m.defs, m.variable_names());
  } catch (const ValidationError& err) {
    throw ValidationError(where + ": " + err.what());
  }
  if (t != want) throw ValidationError(where + ": expected a " + to_string(want) + " expression, got '" + to_string(e) + "'");
}

}  // namespace detail

/// Throws ValidationError describing the first violated model invariant.
inline void validate(const HybridModel& m) {
  if (m.variables.empty()) throw ValidationError("model declares no variables");
  std::set<std::string> names;
  for (const auto& v : m.variables) {
    if (!detail::valid_identifier(v.name)) throw ValidationError("invalid variable name '" + v.name + "'");
    if (!names.insert(v.name).second) throw ValidationError("duplicate variable '" + v.name + "'");
    if (!(v.lo < v.hi)) throw ValidationError("variable '" + v.name + "' needs lo < hi");
    if (!(v.precision > 0) || !std::isfinite(v.precision))
      throw ValidationError("variable '" + v.name + "' needs a positive precision");
    if (detail::find_builtin(v.name) || detail::is_reserved_word(v.name))
      throw ValidationError("variable '" + v.name + "' shadows a reserved name");
  }
  for (const auto& [c, value] : m.defs.constants) {
    (void)value;
    if (!detail::valid_identifier(c)) throw ValidationError("invalid constant name '" + c + "'");
    if (names.count(c)) throw ValidationError("constant '" + c + "' clashes with a variable");
  }
  for (const auto& f : m.defs.aux)
    if (names.count(f.name)) throw ValidationError("aux function '" + f.name + "' clashes with a variable");
  check_definitions(m.defs);

  if (m.modes.empty()) throw ValidationError("model declares no modes");
  std::set<std::string> mode_names;
  for (const auto& mode : m.modes) {
    if (!detail::valid_mode_name(mode.name)) throw ValidationError("invalid mode name '" + mode.name + "'");
    if (mode.name == kFailingMode) throw ValidationError(std::string("mode name '") + kFailingMode + "' is reserved");
    if (!mode_names.insert(mode.name).second) throw ValidationError("duplicate mode '" + mode.name + "'");
    detail::expect_type(mode.invariant, Type::Bool, m, "invariant of mode '" + mode.name + "'");
    std::set<std::string> flowed;
    for (const auto& [var, rhs] : mode.flows) {
      if (!names.count(var)) throw ValidationError("mode '" + mode.name + "' has a flow for undeclared variable '" + var + "'");
      if (!flowed.insert(var).second) throw ValidationError("mode '" + mode.name + "' repeats the flow of '" + var + "'");
      detail::expect_type(rhs, Type::Real, m, "flow of '" + var + "' in mode '" + mode.name + "'");
    }
    for (const auto& v : m.variables)
      if (!flowed.count(v.name)) throw ValidationError("mode '" + mode.name + "' has no flow for variable '" + v.name + "'");
    for (const auto& u : mode.unacceptable)
      detail::expect_type(u, Type::Bool, m, "unacceptable condition of mode '" + mode.name + "'");
  }
  for (const auto& t : m.transitions) {
    if (!mode_names.count(t.source)) throw ValidationError("transition from undeclared mode '" + t.source + "'");
    if (!mode_names.count(t.destination)) throw ValidationError("transition to undeclared mode '" + t.destination + "'");
    if (t.source == t.destination)
      throw ValidationError("transition '" + t.source + "' -> '" + t.destination + "' duplicates the invariant self-loop");
    detail::expect_type(t.guard, Type::Bool, m, "guard of '" + t.source + "' -> '" + t.destination + "'");
  }
  if (const auto* fm = std::get_if<FinalModes>(&m.goal)) {
    if (fm->modes.empty()) throw ValidationError("goal lists no final modes");
    for (const auto& n : fm->modes)
      if (!mode_names.count(n)) throw ValidationError("goal references undeclared mode '" + n + "'");
  } else {
    detail::expect_type(std::get<GoalExpr>(m.goal).expr, Type::Bool, m, "goal");
  }
  if (m.unacceptable)
    for (const auto& u : *m.unacceptable) detail::expect_type(u, Type::Bool, m, "unacceptable condition");
}

// ---------------------------------------------------------------------------
// JSON documents

namespace detail {

inline Expr parse_field_expr(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) throw ValidationError(where + ": expected an expression string");
  try {
    return parse_expr(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double require_number(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number()) throw ValidationError(where + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline std::string require_string(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string()) throw ValidationError(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Builds and validates a hybrid model from its JSON document.
inline HybridModel parse_hybrid_model(const nlohmann::json& doc) {
  using detail::require;
  if (!doc.is_object()) throw ValidationError("hybrid model document must be a JSON object");
  HybridModel m;
  m.name = doc.value("name", std::string("model"));

  const auto& vars = require(doc, "variables", "model");
  if (!vars.is_array()) throw ValidationError("'variables' must be an array");
  for (const auto& v : vars) {
    VariableSpec spec;
    spec.name = detail::require_string(v, "name", "variable");
    std::string where = "variable '" + spec.name + "'";
    spec.lo = detail::require_number(v, "lo", where);
    spec.hi = detail::require_number(v, "hi", where);
    spec.precision = detail::require_number(v, "precision", where);
    m.variables.push_back(spec);
  }

  if (doc.contains("constants")) {
    const auto& cs = doc.at("constants");
    if (!cs.is_object()) throw ValidationError("'constants' must be an object");
    for (const auto& [k, v] : cs.items()) {
      if (!v.is_number()) throw ValidationError("constant '" + k + "' must be a number");
      m.defs.constants[k] = v.get<double>();
    }
  }

  if (doc.contains("aux")) {
    for (const auto& a : doc.at("aux")) {
      AuxFunction f;
      f.name = detail::require_string(a, "name", "aux");
      std::string where = "aux '" + f.name + "'";
      const auto& ps = require(a, "params", where);
      if (!ps.is_array()) throw ValidationError(where + ": 'params' must be an array");
      for (const auto& p : ps) f.params.push_back(p.get<std::string>());
      f.body = detail::parse_field_expr(require(a, "body", where), where);
      m.defs.aux.push_back(std::move(f));
    }
  }

  const auto& modes = require(doc, "modes", "model");
  if (!modes.is_array()) throw ValidationError("'modes' must be an array");
  for (const auto& jm : modes) {
    Mode mode;
    mode.name = detail::require_string(jm, "name", "mode");
    std::string where = "mode '" + mode.name + "'";
    mode.invariant = detail::parse_field_expr(require(jm, "invariant", where), where + " invariant");
    const auto& flows = require(jm, "flows", where);
    if (!flows.is_object()) throw ValidationError(where + ": 'flows' must be an object");
    // Flows follow variable declaration order so that simulation is independent of key order.
    std::vector<std::pair<std::string, Expr>> parsed;
    for (const auto& [var, rhs] : flows.items())
      parsed.emplace_back(var, detail::parse_field_expr(rhs, where + " flow '" + var + "'"));
    for (const auto& v : m.variables)
      for (auto& p : parsed)
        if (p.first == v.name) mode.flows.push_back(p);
    for (auto& p : parsed) {
      bool known = false;
      for (const auto& v : m.variables) known = known || v.name == p.first;
      if (!known) mode.flows.push_back(p);
    }
    if (jm.contains("unacceptable"))
      for (const auto& u : jm.at("unacceptable"))
        mode.unacceptable.push_back(detail::parse_field_expr(u, where + " unacceptable"));
    m.modes.push_back(std::move(mode));
  }

  if (doc.contains("transitions")) {
    for (const auto& jt : doc.at("transitions")) {
      Transition t;
      t.source = detail::require_string(jt, "src", "transition");
      t.destination = detail::require_string(jt, "dst", "transition");
      t.guard = detail::parse_field_expr(require(jt, "guard", "transition"),
                                         "guard of '" + t.source + "' -> '" + t.destination + "'");
      m.transitions.push_back(std::move(t));
    }
  }

  const auto& goal = require(doc, "goal", "model");
  if (goal.contains("final_modes")) {
    FinalModes fm;
    for (const auto& n : goal.at("final_modes")) fm.modes.push_back(n.get<std::string>());
    m.goal = fm;
  } else if (goal.contains("expr")) {
    m.goal = GoalExpr{detail::parse_field_expr(goal.at("expr"), "goal")};
  } else {
    throw ValidationError("goal must contain 'final_modes' or 'expr'");
  }

  if (doc.contains("unacceptable") && !doc.at("unacceptable").is_null()) {
    std::vector<Expr> un;
    for (const auto& u : doc.at("unacceptable")) un.push_back(detail::parse_field_expr(u, "unacceptable"));
    m.unacceptable = std::move(un);
  }

  validate(m);
  return m;
}

inline HybridModel load_hybrid_model(const std::string& path) {
  return parse_hybrid_model(detail::read_json_file(path));
}

inline nlohmann::json to_json(const HybridModel& m) {
  nlohmann::json doc;
  doc["name"] = m.name;
  doc["variables"] = nlohmann::json::array();
  for (const auto& v : m.variables)
    doc["variables"].push_back({{"name", v.name}, {"lo", v.lo}, {"hi", v.hi}, {"precision", v.precision}});
  doc["constants"] = nlohmann::json::object();
  for (const auto& [k, v] : m.defs.constants) doc["constants"][k] = v;
  doc["aux"] = nlohmann::json::array();
  for (const auto& f : m.defs.aux) doc["aux"].push_back({{"name", f.name}, {"params", f.params}, {"body", to_string(f.body)}});
  doc["modes"] = nlohmann::json::array();
  for (const auto& mode : m.modes) {
    nlohmann::json jm{{"name", mode.name}, {"invariant", to_string(mode.invariant)}};
    jm["flows"] = nlohmann::json::object();
    for (const auto& [var, rhs] : mode.flows) jm["flows"][var] = to_string(rhs);
    if (!mode.unacceptable.empty()) {
      jm["unacceptable"] = nlohmann::json::array();
      for (const auto& u : mode.unacceptable) jm["unacceptable"].push_back(to_string(u));
    }
    doc["modes"].push_back(std::move(jm));
  }
  doc["transitions"] = nlohmann::json::array();
  for (const auto& t : m.transitions)
    doc["transitions"].push_back({{"src", t.source}, {"dst", t.destination}, {"guard", to_string(t.guard)}});
  if (const auto* fm = std::get_if<FinalModes>(&m.goal))
    doc["goal"] = {{"final_modes", fm->modes}};
  else
    doc["goal"] = {{"expr", to_string(std::get<GoalExpr>(m.goal).expr)}};
  if (m.unacceptable) {
    doc["unacceptable"] = nlohmann::json::array();
    for (const auto& u : *m.unacceptable) doc["unacceptable"].push_back(to_string(u));
  }
  return doc;
}

}  // namespace hytest

#endif  // HYTEST_HYBRID_MODEL_HPP_
