#ifndef HYTEST_CONDITION_GRAPH_HPP_
#define HYTEST_CONDITION_GRAPH_HPP_

// Condition graph construction. The hybrid model is augmented with a failing
// node, invariant self-loops and unacceptable-condition edges, and every
// edge label is completed with the negated labels of its siblings so that
// labels leaving one node are mutually exclusive.

#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hytest/error.hpp"
#include "hytest/expr.hpp"
#include "hytest/hybrid_model.hpp"

namespace hytest {

enum class ModeClass { Acceptable, Final, Failing };

inline const char* to_string(ModeClass c) {
  switch (c) {
    case ModeClass::Acceptable: return "acceptable";
    case ModeClass::Final: return "final";
    case ModeClass::Failing: return "failing";
  }
  return "?";
}

enum class EdgeKind { Transition, SelfLoop, Fail, FailSelfLoop };

struct GraphNode {
  std::string name;
  ModeClass cls = ModeClass::Acceptable;
};

struct GraphEdge {
  std::size_t source = 0;
  std::size_t destination = 0;
  EdgeKind kind = EdgeKind::Transition;
  Expr guard;  // raw label before completion
  Expr label;  // completed label
};

struct ConditionGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::optional<Expr> goal_expr;
  std::optional<Expr> unacceptable_expr;
  /// The failing node has no edges (no unacceptable conditions were known or derivable).
  bool failing_isolated = false;

  std::size_t failing_node() const { return nodes.size() - 1; }

  std::optional<std::size_t> node_index(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t require_node(const std::string& name) const {
    auto i = node_index(name);
    if (!i) throw Error("unknown condition-graph node '" + name + "'");
    return *i;
  }

  bool has_final() const {
    for (const auto& n : nodes)
      if (n.cls == ModeClass::Final) return true;
    return false;
  }

  bool has_edge(std::size_t from, std::size_t to) const {
    for (const auto& e : edges)
      if (e.source == from && e.destination == to) return true;
    return false;
  }
};

namespace detail {

// Appends `e` unless an expression with the same structure is already present.
inline void push_unique(std::vector<Expr>& out, const Expr& e) {
  for (const auto& x : out)
    if (x == e) return;
  out.push_back(e);
}

}  // namespace detail

/// Conjunction of the negations of every invariant and guard of `h`, or
/// nothing when the model carries no conditions. Structurally identical
/// conditions are negated once.
inline std::optional<Expr> default_unacceptable(const HybridModel& h) {
  std::vector<Expr> acceptable;
  for (const auto& m : h.modes) detail::push_unique(acceptable, m.invariant);
  for (const auto& t : h.transitions) detail::push_unique(acceptable, t.guard);
  if (acceptable.empty()) return std::nullopt;
  std::vector<Expr> negated;
  for (const auto& a : acceptable) negated.push_back(negate(a));
  return conjoin(negated);
}

/// The unacceptable conditions to use for `h`: its own list when non-empty,
/// otherwise the derived default (possibly none).
inline std::vector<Expr> effective_unacceptable(const HybridModel& h) {
  if (h.unacceptable && !h.unacceptable->empty()) return *h.unacceptable;
  if (auto d = default_unacceptable(h)) return {*d};
  return {};
}

inline ConditionGraph build_condition_graph(const HybridModel& h, const std::vector<Expr>& unacceptable) {
  ConditionGraph g;
  const std::size_t n_modes = h.modes.size();

  // Modes, then final-mode designation from the goal.
  for (const auto& m : h.modes) g.nodes.push_back({m.name, ModeClass::Acceptable});
  if (const auto* fm = std::get_if<FinalModes>(&h.goal)) {
    for (const auto& name : fm->modes) {
      auto i = h.mode_index(name);
      if (!i) throw ValidationError("goal references undeclared mode '" + name + "'");
      g.nodes[*i].cls = ModeClass::Final;
    }
  } else {
    // A goal that is literally some modes' invariant designates those modes final.
    const Expr& goal = std::get<GoalExpr>(h.goal).expr;
    bool matched = false;
    for (std::size_t i = 0; i < n_modes; ++i) {
      if (h.modes[i].invariant == goal) {
        g.nodes[i].cls = ModeClass::Final;
        matched = true;
      }
    }
    if (!matched) g.goal_expr = goal;
  }
  g.nodes.push_back({kFailingMode, ModeClass::Failing});
  const std::size_t failing = g.failing_node();

  // Unacceptable expression: global conditions joined with per-mode ones.
  std::vector<Expr> un = unacceptable;
  for (const auto& m : h.modes)
    for (const auto& u : m.unacceptable) un.push_back(u);
  if (!un.empty()) g.unacceptable_expr = disjoin(un);
  g.failing_isolated = !g.unacceptable_expr.has_value();

  // Construction order used for sibling completion: self-loop first, then
  // the model's transitions in declaration order.
  std::vector<std::vector<Expr>> outgoing(n_modes);
  for (std::size_t i = 0; i < n_modes; ++i) outgoing[i].push_back(h.modes[i].invariant);
  for (const auto& t : h.transitions) outgoing[*h.mode_index(t.source)].push_back(t.guard);

  auto complete = [&](std::size_t src, std::size_t own) {
    std::vector<Expr> parts{outgoing[src][own]};
    for (std::size_t k = 0; k < outgoing[src].size(); ++k)
      if (k != own) parts.push_back(negate(outgoing[src][k]));
    if (g.unacceptable_expr) parts.push_back(negate(*g.unacceptable_expr));
    return conjoin(parts);
  };

  // Edge order: transitions, invariant self-loops, fail edges, fail self-loop.
  std::vector<std::size_t> seen_per_source(n_modes, 0);
  for (const auto& t : h.transitions) {
    std::size_t s = *h.mode_index(t.source);
    std::size_t d = *h.mode_index(t.destination);
    std::size_t own = ++seen_per_source[s];
    g.edges.push_back({s, d, EdgeKind::Transition, t.guard, complete(s, own)});
  }
  for (std::size_t i = 0; i < n_modes; ++i)
    g.edges.push_back({i, i, EdgeKind::SelfLoop, h.modes[i].invariant, complete(i, 0)});
  if (g.unacceptable_expr) {
    for (std::size_t i = 0; i < n_modes; ++i)
      g.edges.push_back({i, failing, EdgeKind::Fail, *g.unacceptable_expr, *g.unacceptable_expr});
    g.edges.push_back({failing, failing, EdgeKind::FailSelfLoop, *g.unacceptable_expr, *g.unacceptable_expr});
  }
  return g;
}

/// Builds the graph with the model's own or derived unacceptable conditions.
inline ConditionGraph build_condition_graph(const HybridModel& h) {
  return build_condition_graph(h, effective_unacceptable(h));
}

/// True when the graph permits moving from `from` to `to` between two samples.
inline bool is_allowed(const ConditionGraph& g, std::size_t from, std::size_t to) { return g.has_edge(from, to); }

inline bool is_allowed(const ConditionGraph& g, const std::string& from, const std::string& to) {
  return is_allowed(g, g.require_node(from), g.require_node(to));
}

/// Graphviz rendering; node shape encodes the mode class.
inline std::string to_dot(const ConditionGraph& g) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };
  std::ostringstream os;
  os << "digraph condition_graph {\n";
  for (const auto& n : g.nodes) {
    const char* shape = n.cls == ModeClass::Final ? "doublecircle" : n.cls == ModeClass::Failing ? "box" : "ellipse";
    os << "  " << quote(n.name) << " [shape=" << shape << "];\n";
  }
  for (const auto& e : g.edges)
    os << "  " << quote(g.nodes[e.source].name) << " -> " << quote(g.nodes[e.destination].name)
       << " [label=" << quote(to_string(e.label)) << "];\n";
  os << "}\n";
  return os.str();
}

}  // namespace hytest

#endif  // HYTEST_CONDITION_GRAPH_HPP_
