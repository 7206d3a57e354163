#ifndef HYTEST_SIM_MODEL_HPP_
#define HYTEST_SIM_MODEL_HPP_

// Block-dataflow simulation models: a small Simulink-like vocabulary of
// single-output blocks wired by block id. Integrator and UnitDelay outputs
// are states, so feedback loops must pass through one of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hytest/error.hpp"
#include "hytest/hybrid_model.hpp"

namespace hytest {

enum class BlockKind {
  Constant,
  Gain,
  Sum,
  Product,
  Integrator,
  Saturation,
  DeadZone,
  Abs,
  Trig,
  Relational,
  Logical,
  Switch,
  UnitDelay
};

inline constexpr std::pair<BlockKind, const char*> kBlockKindNames[] = {
    {BlockKind::Constant, "Constant"},     {BlockKind::Gain, "Gain"},
    {BlockKind::Sum, "Sum"},               {BlockKind::Product, "Product"},
    {BlockKind::Integrator, "Integrator"}, {BlockKind::Saturation, "Saturation"},
    {BlockKind::DeadZone, "DeadZone"},     {BlockKind::Abs, "Abs"},
    {BlockKind::Trig, "Trig"},             {BlockKind::Relational, "Relational"},
    {BlockKind::Logical, "Logical"},       {BlockKind::Switch, "Switch"},
    {BlockKind::UnitDelay, "UnitDelay"}};

inline const char* to_string(BlockKind k) {
  for (const auto& [kind, name] : kBlockKindNames)
    if (kind == k) return name;
  return "?";
}

inline BlockKind parse_block_kind(const std::string& s) {
  for (const auto& [kind, name] : kBlockKindNames)
    if (s == name) return kind;
  throw ValidationError("unknown block kind '" + s + "'");
}

inline bool is_state_block(BlockKind k) { return k == BlockKind::Integrator || k == BlockKind::UnitDelay; }

/// Kind-specific parameters; only the fields relevant to a block's kind are meaningful.
struct BlockParams {
  double value = 0.0;        // Constant
  double gain = 1.0;         // Gain
  std::string signs;         // Sum, e.g. "+-"
  std::string ops;           // Product, e.g. "*/"
  double init = 0.0;         // Integrator, UnitDelay
  double init_offset = 0.0;  // Integrator: added to whatever initial value is applied
  double lo = 0.0;           // Saturation, DeadZone
  double hi = 0.0;
  std::string fn;            // Trig: sin | cos | tan
  std::string op;            // Relational: < <= > >= == != ; Logical: && || !
  double threshold = 0.5;    // Switch: pass input 0 when control >= threshold

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

struct Block {
  std::string id;
  BlockKind kind = BlockKind::Constant;
  BlockParams params;
  std::vector<std::string> inputs;
  bool controller = false;

  friend bool operator==(const Block&, const Block&) = default;
};

/// A named signal bound to a block: either a settable initial state or an observed output.
struct PortBinding {
  std::string name;
  std::string block;
  friend bool operator==(const PortBinding&, const PortBinding&) = default;
};

struct SimConfig {
  double dt = 1e-3;
  double sample_time = 1e-2;
  double t_end = 1.0;
  VarAssignment init;
  std::optional<VarAssignment> plant_init;
  std::size_t max_steps = 50'000'000;
};

struct SimModel {
  std::string name;
  std::vector<Block> blocks;
  std::vector<PortBinding> inputs_external;
  std::vector<PortBinding> outputs;
  std::optional<SimConfig> simulation;  // defaults carried by the document, if any

  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].id == id) return i;
    return std::nullopt;
  }
  const Block* find(const std::string& id) const {
    auto i = index_of(id);
    return i ? &blocks[*i] : nullptr;
  }

  std::vector<std::string> output_names() const {
    std::vector<std::string> out;
    for (const auto& o : outputs) out.push_back(o.name);
    return out;
  }
};

namespace detail {

inline std::size_t expected_arity(const Block& b) {
  switch (b.kind) {
    case BlockKind::Constant: return 0;
    case BlockKind::Sum: return b.params.signs.size();
    case BlockKind::Product: return b.params.ops.size();
    case BlockKind::Relational: return 2;
    case BlockKind::Logical: return b.params.op == "!" ? 1 : 2;
    case BlockKind::Switch: return 3;
    default: return 1;
  }
}

}  // namespace detail

/// Evaluation order of the non-state blocks (state outputs are known at every
/// instant, so edges out of them do not constrain the order).
inline std::vector<std::size_t> topological_order(const SimModel& m) {
  std::size_t n = m.blocks.size();
  std::vector<std::vector<std::size_t>> users(n);
  std::vector<std::size_t> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_state_block(m.blocks[i].kind)) continue;
    for (const auto& in : m.blocks[i].inputs) {
      auto j = m.index_of(in);
      if (!j) throw ValidationError("block '" + m.blocks[i].id + "' reads undeclared block '" + in + "'");
      if (is_state_block(m.blocks[*j].kind)) continue;
      users[*j].push_back(i);
      ++pending[i];
    }
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_state_block(m.blocks[i].kind) && pending[i] == 0) ready.push_back(i);
  // Stable: always release the lowest declared index first.
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    std::size_t i = *it;
    ready.erase(it);
    order.push_back(i);
    for (std::size_t u : users[i])
      if (--pending[u] == 0) ready.push_back(u);
  }
  std::size_t stateless = 0;
  for (const auto& b : m.blocks) stateless += is_state_block(b.kind) ? 0 : 1;
  if (order.size() != stateless) {
    std::string cyc;
    for (std::size_t i = 0; i < n; ++i)
      if (!is_state_block(m.blocks[i].kind) && pending[i] > 0) cyc += (cyc.empty() ? "" : ", ") + m.blocks[i].id;
    throw ValidationError("algebraic loop through blocks: " + cyc);
  }
  return order;
}

inline void validate(const SimModel& m) {
  if (m.blocks.empty()) throw ValidationError("simulation model has no blocks");
  std::set<std::string> ids;
  for (const auto& b : m.blocks) {
    if (b.id.empty()) throw ValidationError("block with empty id");
    if (!ids.insert(b.id).second) throw ValidationError("duplicate block id '" + b.id + "'");
  }
  for (const auto& b : m.blocks) {
    std::string where = "block '" + b.id + "'";
    const auto& p = b.params;
    if (b.inputs.size() != detail::expected_arity(b))
      throw ValidationError(where + " expects " + std::to_string(detail::expected_arity(b)) + " input(s), got " +
                            std::to_string(b.inputs.size()));
    for (const auto& in : b.inputs)
      if (!ids.count(in)) throw ValidationError(where + " reads undeclared block '" + in + "'");
    switch (b.kind) {
      case BlockKind::Sum:
        if (p.signs.empty() || p.signs.find_first_not_of("+-") != std::string::npos)
          throw ValidationError(where + ": signs must be a non-empty string of '+'/'-'");
        break;
      case BlockKind::Product:
        if (p.ops.empty() || p.ops.find_first_not_of("*/") != std::string::npos)
          throw ValidationError(where + ": ops must be a non-empty string of '*'/'/'");
        break;
      case BlockKind::Saturation:
      case BlockKind::DeadZone:
        if (!(p.lo <= p.hi)) throw ValidationError(where + ": requires lo <= hi");
        break;
      case BlockKind::Trig:
        if (p.fn != "sin" && p.fn != "cos" && p.fn != "tan") throw ValidationError(where + ": fn must be sin, cos or tan");
        break;
      case BlockKind::Relational:
        if (p.op != "<" && p.op != "<=" && p.op != ">" && p.op != ">=" && p.op != "==" && p.op != "!=")
          throw ValidationError(where + ": unknown relational operator '" + p.op + "'");
        break;
      case BlockKind::Logical:
        if (p.op != "&&" && p.op != "||" && p.op != "!") throw ValidationError(where + ": unknown logical operator '" + p.op + "'");
        break;
      default: break;
    }
    for (double v : {p.value, p.gain, p.init, p.init_offset, p.lo, p.hi, p.threshold})
      if (!std::isfinite(v)) throw ValidationError(where + ": non-finite parameter");
  }
  topological_order(m);

  std::set<std::string> names;
  for (const auto& in : m.inputs_external) {
    const Block* b = m.find(in.block);
    if (!b) throw ValidationError("external input '" + in.name + "' binds undeclared block '" + in.block + "'");
    if (!is_state_block(b->kind)) throw ValidationError("external input '" + in.name + "' must bind a state block");
    if (!names.insert(in.name).second) throw ValidationError("duplicate external input '" + in.name + "'");
  }
  if (m.outputs.empty()) throw ValidationError("simulation model declares no outputs");
  names.clear();
  for (const auto& out : m.outputs) {
    if (!m.find(out.block)) throw ValidationError("output '" + out.name + "' binds undeclared block '" + out.block + "'");
    if (!names.insert(out.name).second) throw ValidationError("duplicate output '" + out.name + "'");
  }

  if (m.simulation) {
    const SimConfig& c = *m.simulation;
    if (!(c.dt > 0) || !(c.sample_time > 0) || !(c.t_end > 0))
      throw ValidationError("simulation dt, sample_time and t_end must be positive");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::vector<PortBinding> parse_bindings(const nlohmann::json& j, const char* key) {
  std::vector<PortBinding> out;
  if (!j.is_array()) throw ValidationError(std::string("'") + key + "' must be an array");
  for (const auto& e : j) {
    if (e.is_string()) {
      out.push_back({e.get<std::string>(), e.get<std::string>()});
    } else {
      out.push_back({require_string(e, "name", key), require_string(e, "block", key)});
    }
  }
  return out;
}

inline nlohmann::json bindings_to_json(const std::vector<PortBinding>& bs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : bs) {
    if (b.name == b.block)
      out.push_back(b.name);
    else
      out.push_back({{"name", b.name}, {"block", b.block}});
  }
  return out;
}

inline VarAssignment parse_assignment(const nlohmann::json& j, const std::string& where) {
  VarAssignment out;
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ValidationError(where + ": '" + k + "' must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

}  // namespace detail

inline SimConfig parse_sim_config(const nlohmann::json& j, SimConfig base = {}) {
  if (!j.is_object()) throw ValidationError("simulation config must be an object");
  base.dt = j.value("dt", base.dt);
  base.sample_time = j.value("sample_time", base.sample_time);
  base.t_end = j.value("t_end", base.t_end);
  if (j.contains("max_steps")) base.max_steps = j.at("max_steps").get<std::size_t>();
  if (j.contains("init")) base.init = detail::parse_assignment(j.at("init"), "init");
  if (j.contains("plant_init")) base.plant_init = detail::parse_assignment(j.at("plant_init"), "plant_init");
  return base;
}

inline nlohmann::json to_json(const SimConfig& c) {
  nlohmann::json j{{"dt", c.dt}, {"sample_time", c.sample_time}, {"t_end", c.t_end}};
  j["init"] = nlohmann::json::object();
  for (const auto& [k, v] : c.init) j["init"][k] = v;
  if (c.plant_init) {
    j["plant_init"] = nlohmann::json::object();
    for (const auto& [k, v] : *c.plant_init) j["plant_init"][k] = v;
  }
  return j;
}

inline SimModel parse_sim_model(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("simulation model document must be a JSON object");
  SimModel m;
  m.name = doc.value("name", std::string("sim"));
  const auto& blocks = detail::require(doc, "blocks", "simulation model");
  if (!blocks.is_array()) throw ValidationError("'blocks' must be an array");
  for (const auto& jb : blocks) {
    Block b;
    b.id = detail::require_string(jb, "id", "block");
    b.kind = parse_block_kind(detail::require_string(jb, "kind", "block '" + b.id + "'"));
    b.controller = jb.value("controller", false);
    if (jb.contains("inputs"))
      for (const auto& in : jb.at("inputs")) b.inputs.push_back(in.get<std::string>());
    nlohmann::json p = jb.value("params", nlohmann::json::object());
    BlockParams& bp = b.params;
    bp.value = p.value("value", bp.value);
    bp.gain = p.value("gain", bp.gain);
    bp.signs = p.value("signs", bp.signs);
    bp.ops = p.value("ops", bp.ops);
    bp.init = p.value("init", bp.init);
    bp.init_offset = p.value("init_offset", bp.init_offset);
    bp.lo = p.value("lo", bp.lo);
    bp.hi = p.value("hi", bp.hi);
    bp.fn = p.value("fn", bp.fn);
    bp.op = p.value("op", bp.op);
    bp.threshold = p.value("threshold", bp.threshold);
    m.blocks.push_back(std::move(b));
  }
  if (doc.contains("inputs_external")) m.inputs_external = detail::parse_bindings(doc.at("inputs_external"), "inputs_external");
  m.outputs = detail::parse_bindings(detail::require(doc, "outputs", "simulation model"), "outputs");
  if (doc.contains("simulation")) m.simulation = parse_sim_config(doc.at("simulation"));
  validate(m);
  return m;
}

inline SimModel load_sim_model(const std::string& path) { return parse_sim_model(detail::read_json_file(path)); }

inline nlohmann::json to_json(const Block& b) {
  nlohmann::json p = nlohmann::json::object();
  const BlockParams& bp = b.params;
  switch (b.kind) {
    case BlockKind::Constant: p["value"] = bp.value; break;
    case BlockKind::Gain: p["gain"] = bp.gain; break;
    case BlockKind::Sum: p["signs"] = bp.signs; break;
    case BlockKind::Product: p["ops"] = bp.ops; break;
    case BlockKind::Integrator:
      p["init"] = bp.init;
      if (bp.init_offset != 0.0) p["init_offset"] = bp.init_offset;
      break;
    case BlockKind::UnitDelay: p["init"] = bp.init; break;
    case BlockKind::Saturation:
    case BlockKind::DeadZone:
      p["lo"] = bp.lo;
      p["hi"] = bp.hi;
      break;
    case BlockKind::Trig: p["fn"] = bp.fn; break;
    case BlockKind::Relational:
    case BlockKind::Logical: p["op"] = bp.op; break;
    case BlockKind::Switch: p["threshold"] = bp.threshold; break;
    case BlockKind::Abs: break;
  }
  nlohmann::json j{{"id", b.id}, {"kind", to_string(b.kind)}, {"params", p}, {"inputs", b.inputs}};
  if (b.controller) j["controller"] = true;
  return j;
}

inline nlohmann::json to_json(const SimModel& m) {
  nlohmann::json doc;
  doc["name"] = m.name;
  doc["blocks"] = nlohmann::json::array();
  for (const auto& b : m.blocks) doc["blocks"].push_back(to_json(b));
  doc["inputs_external"] = detail::bindings_to_json(m.inputs_external);
  doc["outputs"] = detail::bindings_to_json(m.outputs);
  if (m.simulation) doc["simulation"] = to_json(*m.simulation);
  return doc;
}

}  // namespace hytest

#endif  // HYTEST_SIM_MODEL_HPP_
