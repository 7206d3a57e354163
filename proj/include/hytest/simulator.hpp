#ifndef HYTEST_SIMULATOR_HPP_
#define HYTEST_SIMULATOR_HPP_

// Fixed-step execution of block-dataflow models and of hybrid-model flows.
// Integrators advance with classical RK4 every dt; samples are recorded every
// sample_time, which must be an integral multiple of dt.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hytest/condition_graph.hpp"
#include "hytest/error.hpp"
#include "hytest/eval.hpp"
#include "hytest/expr.hpp"
#include "hytest/hybrid_model.hpp"
#include "hytest/sim_model.hpp"

namespace hytest {

struct Trace {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;  // rows[k][i] is names[i] at times[k]
  std::vector<std::string> modes;         // active mode per sample (hybrid runs only)

  std::size_t size() const { return times.size(); }

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }

  VarAssignment sample(std::size_t k) const {
    VarAssignment out;
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = rows[k][i];
    return out;
  }

  /// Rows restricted to `order`, e.g. the hybrid model's variables.
  std::vector<std::vector<double>> project(const std::vector<std::string>& order) const {
    std::vector<std::size_t> cols;
    for (const auto& n : order) {
      auto c = column(n);
      if (!c) throw ValidationError("trace has no signal named '" + n + "'");
      cols.push_back(*c);
    }
    std::vector<std::vector<double>> out(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
      for (std::size_t i = 0; i < cols.size(); ++i) out[k][i] = rows[k][cols[i]];
    return out;
  }

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// One classical Runge-Kutta step. `rhs(x, dx)` writes the derivative of `x` into `dx`.
template <class Rhs>
std::vector<double> rk4_step(Rhs&& rhs, const std::vector<double>& x, double dt) {
  const std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(x, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  rhs(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  rhs(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  rhs(tmp, k4);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!std::isfinite(out[i])) throw SimulationError("non-finite state after integration step");
  }
  return out;
}

/// Map-based variant; `rhs` takes and returns a VarAssignment over the same keys.
template <class Rhs>
VarAssignment rk4_step_map(Rhs&& rhs, const VarAssignment& state, double dt) {
  std::vector<std::string> keys;
  std::vector<double> x;
  for (const auto& [k, v] : state) {
    keys.push_back(k);
    x.push_back(v);
  }
  auto vec_rhs = [&](const std::vector<double>& s, std::vector<double>& dx) {
    VarAssignment m;
    for (std::size_t i = 0; i < keys.size(); ++i) m[keys[i]] = s[i];
    VarAssignment d = rhs(m);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto it = d.find(keys[i]);
      dx[i] = it == d.end() ? 0.0 : it->second;
    }
  };
  std::vector<double> y = rk4_step(vec_rhs, x, dt);
  VarAssignment out;
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = y[i];
  return out;
}

struct SimOptions {
  /// Force every controller-flagged block to output 0.
  bool uncontrolled = false;
};

namespace detail {

struct Timing {
  std::size_t substeps = 1;
  std::size_t samples = 2;
};

inline Timing check_timing(const SimConfig& cfg) {
  if (!(cfg.dt > 0) || !(cfg.sample_time > 0) || !(cfg.t_end > 0))
    throw ValidationError("dt, sample_time and t_end must be positive");
  double ratio = cfg.sample_time / cfg.dt;
  double r = std::round(ratio);
  if (r < 1 || std::fabs(ratio - r) > 1e-9 * ratio) throw ValidationError("sample_time must be an integral multiple of dt");
  double periods = std::floor(cfg.t_end / cfg.sample_time + 1e-9);
  if (periods < 1) throw ValidationError("t_end must cover at least one sample period");
  Timing t{static_cast<std::size_t>(r), static_cast<std::size_t>(periods) + 1};
  if ((t.samples - 1) * t.substeps > cfg.max_steps)
    throw SimulationError("step budget exceeded: " + std::to_string((t.samples - 1) * t.substeps) + " steps > " +
                          std::to_string(cfg.max_steps));
  return t;
}

inline double block_output(const Block& b, const double* in, double eps_eq) {
  const BlockParams& p = b.params;
  switch (b.kind) {
    case BlockKind::Constant: return p.value;
    case BlockKind::Gain: return p.gain * in[0];
    case BlockKind::Sum: {
      double s = 0.0;
      for (std::size_t i = 0; i < p.signs.size(); ++i) s += p.signs[i] == '-' ? -in[i] : in[i];
      return s;
    }
    case BlockKind::Product: {
      double s = 1.0;
      for (std::size_t i = 0; i < p.ops.size(); ++i) s = p.ops[i] == '/' ? s / in[i] : s * in[i];
      return s;
    }
    case BlockKind::Saturation: return std::min(std::max(in[0], p.lo), p.hi);
    case BlockKind::DeadZone: return in[0] > p.hi ? in[0] - p.hi : in[0] < p.lo ? in[0] - p.lo : 0.0;
    case BlockKind::Abs: return std::fabs(in[0]);
    case BlockKind::Trig: return p.fn == "sin" ? std::sin(in[0]) : p.fn == "cos" ? std::cos(in[0]) : std::tan(in[0]);
    case BlockKind::Relational: {
      const std::string& op = p.op;
      bool r = op == "<"    ? in[0] < in[1]
               : op == "<=" ? in[0] <= in[1]
               : op == ">"  ? in[0] > in[1]
               : op == ">=" ? in[0] >= in[1]
               : op == "==" ? std::fabs(in[0] - in[1]) <= eps_eq
                            : std::fabs(in[0] - in[1]) > eps_eq;
      return r ? 1.0 : 0.0;
    }
    case BlockKind::Logical:
      if (p.op == "!") return in[0] != 0.0 ? 0.0 : 1.0;
      if (p.op == "&&") return (in[0] != 0.0 && in[1] != 0.0) ? 1.0 : 0.0;
      return (in[0] != 0.0 || in[1] != 0.0) ? 1.0 : 0.0;
    case BlockKind::Switch: return in[1] >= p.threshold ? in[0] : in[2];
    case BlockKind::Integrator:
    case BlockKind::UnitDelay: break;
  }
  return 0.0;
}

// Precomputed wiring of a SimModel for repeated evaluation.
class BlockProgram {
 public:
  BlockProgram(const SimModel& m, const SimOptions& opts, double eps_eq) : m_(m), opts_(opts), eps_(eps_eq) {
    validate(m);
    order_ = topological_order(m);
    for (const auto& b : m.blocks) {
      std::vector<std::size_t> ins;
      for (const auto& id : b.inputs) ins.push_back(*m.index_of(id));
      inputs_.push_back(std::move(ins));
    }
    for (std::size_t i = 0; i < m.blocks.size(); ++i) {
      if (m.blocks[i].kind == BlockKind::Integrator) integrators_.push_back(i);
      if (m.blocks[i].kind == BlockKind::UnitDelay) delays_.push_back(i);
    }
    for (const auto& o : m.outputs) outputs_.push_back(*m.index_of(o.block));
  }

  const std::vector<std::size_t>& integrators() const { return integrators_; }
  const std::vector<std::size_t>& delays() const { return delays_; }
  const std::vector<std::size_t>& outputs() const { return outputs_; }

  bool forced(std::size_t i) const { return opts_.uncontrolled && m_.blocks[i].controller; }

  /// Initial values of all blocks; combinational outputs are left at 0.
  std::vector<double> initial(const VarAssignment& init) const {
    std::vector<double> v(m_.blocks.size(), 0.0);
    for (std::size_t i = 0; i < m_.blocks.size(); ++i)
      if (is_state_block(m_.blocks[i].kind)) v[i] = m_.blocks[i].params.init;
    for (const auto& [name, value] : init) {
      const PortBinding* bind = nullptr;
      for (const auto& b : m_.inputs_external)
        if (b.name == name) bind = &b;
      if (!bind) throw ValidationError("initial value for '" + name + "', which is not an external input");
      v[*m_.index_of(bind->block)] = value;
    }
    for (std::size_t i : integrators_) v[i] += m_.blocks[i].params.init_offset;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (forced(i)) v[i] = 0.0;
    return v;
  }

  /// Recomputes every combinational block from the current state values.
  void evaluate(std::vector<double>& v) const {
    double buf[16];
    std::vector<double> heap;
    for (std::size_t i : order_) {
      if (forced(i)) {
        v[i] = 0.0;
        continue;
      }
      const auto& ins = inputs_[i];
      double* in = buf;
      if (ins.size() > 16) {
        heap.resize(ins.size());
        in = heap.data();
      }
      for (std::size_t k = 0; k < ins.size(); ++k) in[k] = v[ins[k]];
      double out = block_output(m_.blocks[i], in, eps_);
      if (!std::isfinite(out)) throw SimulationError("non-finite output at block '" + m_.blocks[i].id + "'");
      v[i] = out;
    }
  }

  /// Derivative of integrator `k` (its input signal), or 0 when forced.
  double derivative(const std::vector<double>& v, std::size_t k) const {
    std::size_t i = integrators_[k];
    return forced(i) ? 0.0 : v[inputs_[i][0]];
  }

  double delay_input(const std::vector<double>& v, std::size_t k) const {
    std::size_t i = delays_[k];
    return forced(i) ? 0.0 : v[inputs_[i][0]];
  }

 private:
  const SimModel& m_;
  SimOptions opts_;
  double eps_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> inputs_;
  std::vector<std::size_t> integrators_, delays_, outputs_;
};

}  // namespace detail

/// Runs a block model from `cfg.init` and records its outputs.
inline Trace simulate(const SimModel& m, const SimConfig& cfg, const SimOptions& opts = {},
                      double eps_eq = kDefaultEqEps) {
  const detail::Timing timing = detail::check_timing(cfg);
  detail::BlockProgram prog(m, opts, eps_eq);
  const auto& integ = prog.integrators();
  const auto& delays = prog.delays();

  std::vector<double> v = prog.initial(cfg.init);
  std::vector<double> x(integ.size());
  for (std::size_t k = 0; k < integ.size(); ++k) x[k] = v[integ[k]];

  auto rhs = [&](const std::vector<double>& s, std::vector<double>& dx) {
    for (std::size_t k = 0; k < integ.size(); ++k) v[integ[k]] = s[k];
    prog.evaluate(v);
    for (std::size_t k = 0; k < integ.size(); ++k) dx[k] = prog.derivative(v, k);
  };

  Trace tr;
  tr.names = m.output_names();
  tr.times.reserve(timing.samples);
  tr.rows.reserve(timing.samples);
  for (std::size_t s = 0; s < timing.samples; ++s) {
    for (std::size_t k = 0; k < integ.size(); ++k) v[integ[k]] = x[k];
    prog.evaluate(v);
    std::vector<double> row;
    row.reserve(prog.outputs().size());
    for (std::size_t i : prog.outputs()) row.push_back(v[i]);
    tr.times.push_back(static_cast<double>(s) * cfg.sample_time);
    tr.rows.push_back(std::move(row));
    if (s + 1 == timing.samples) break;
    for (std::size_t k = 0; k < delays.size(); ++k) v[delays[k]] = prog.delay_input(v, k);
    for (std::size_t step = 0; step < timing.substeps; ++step) x = rk4_step(rhs, x, cfg.dt);
  }
  return tr;
}

struct HybridSimOptions {
  /// Starting mode; by default the first mode whose invariant holds initially.
  std::optional<std::string> initial_mode;
  double eps_eq = kDefaultEqEps;
};

/// Runs the hybrid model's own flows. At each step boundary the completed
/// labels of the active mode's outgoing transitions are checked; the first
/// one that holds switches the mode.
inline Trace simulate(const HybridModel& h, const SimConfig& cfg, const HybridSimOptions& opts = {}) {
  const detail::Timing timing = detail::check_timing(cfg);
  const std::vector<std::string> vars = h.variable_names();
  const ConditionGraph g = build_condition_graph(h);

  std::vector<double> x(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto it = cfg.init.find(vars[i]);
    if (it == cfg.init.end()) throw ValidationError("no initial value for variable '" + vars[i] + "'");
    x[i] = it->second;
  }
  for (const auto& [name, value] : cfg.init)
    if (std::find(vars.begin(), vars.end(), name) == vars.end())
      throw ValidationError("initial value for undeclared variable '" + name + "'");

  std::vector<std::vector<CompiledExpr>> flows;
  std::vector<CompiledExpr> invariants;
  for (const auto& mode : h.modes) {
    std::vector<CompiledExpr> f;
    for (const auto& [var, rhs] : mode.flows) f.emplace_back(rhs, vars, h.defs, opts.eps_eq);
    flows.push_back(std::move(f));
    invariants.emplace_back(mode.invariant, vars, h.defs, opts.eps_eq);
  }
  std::vector<std::vector<std::pair<std::size_t, CompiledExpr>>> jumps(h.modes.size());
  for (const auto& e : g.edges)
    if (e.kind == EdgeKind::Transition) jumps[e.source].emplace_back(e.destination, CompiledExpr(e.label, vars, h.defs, opts.eps_eq));

  std::size_t mode = 0;
  try {
    if (opts.initial_mode) {
      auto i = h.mode_index(*opts.initial_mode);
      if (!i) throw ValidationError("unknown initial mode '" + *opts.initial_mode + "'");
      mode = *i;
    } else {
      std::size_t i = 0;
      while (i < h.modes.size() && !invariants[i].test(x)) ++i;
      if (i == h.modes.size()) throw SimulationError("no mode invariant holds in the initial state");
      mode = i;
    }
  } catch (const EvalError& e) {
    throw SimulationError(std::string("evaluation failed in the initial state: ") + e.what());
  }

  auto rhs = [&](const std::vector<double>& s, std::vector<double>& dx) {
    for (std::size_t i = 0; i < s.size(); ++i) dx[i] = flows[mode][i].eval(s);
  };

  auto jump = [&] {
    for (const auto& [dst, label] : jumps[mode]) {
      if (label.test(x)) {
        mode = dst;
        return;
      }
    }
  };

  Trace tr;
  tr.names = vars;
  try {
    for (std::size_t s = 0;; ++s) {
      jump();
      tr.times.push_back(static_cast<double>(s) * cfg.sample_time);
      tr.rows.push_back(x);
      tr.modes.push_back(h.modes[mode].name);
      if (s + 1 == timing.samples) break;
      for (std::size_t step = 0; step < timing.substeps; ++step) {
        if (step > 0) jump();
        x = rk4_step(rhs, x, cfg.dt);
      }
    }
  } catch (const EvalError& e) {
    throw SimulationError(std::string("flow evaluation failed: ") + e.what());
  }
  return tr;
}

/// CSV with header `t,<signal>...`; numbers in shortest round-trip form.
inline std::string to_csv(const Trace& tr) {
  std::string out = "t";
  for (const auto& n : tr.names) out += "," + n;
  out += "\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    detail::format_number(tr.times[k], out);
    for (double v : tr.rows[k]) {
      out += ",";
      detail::format_number(v, out);
    }
    out += "\n";
  }
  return out;
}

}  // namespace hytest

#endif  // HYTEST_SIMULATOR_HPP_
