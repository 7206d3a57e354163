#ifndef HYTEST_MUTATION_HPP_
#define HYTEST_MUTATION_HPP_

// First-order block mutants of simulation models.

#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hytest/error.hpp"
#include "hytest/sim_model.hpp"

namespace hytest {

struct MutationOperator {
  std::string name;
  std::function<bool(const Block&)> applies;
  std::function<Block(const Block&)> transform;
  bool involutive = false;
};

namespace detail {

inline std::string swap_rel(const std::string& op) {
  if (op == "<") return "<=";
  if (op == "<=") return "<";
  if (op == ">") return ">=";
  if (op == ">=") return ">";
  return op;
}

}  // namespace detail

/// The bundled operators, in site-enumeration order.
inline std::vector<MutationOperator> builtin_operators() {
  using K = BlockKind;
  std::vector<MutationOperator> ops;
  ops.push_back({"GainPerturb", [](const Block& b) { return b.kind == K::Gain && b.params.gain != 0.0; },
                 [](Block b) {
                   b.params.gain *= 1.1;
                   return b;
                 },
                 false});
  ops.push_back({"SignNegate",
                 [](const Block& b) {
                   return (b.kind == K::Gain && b.params.gain != 0.0) || (b.kind == K::Constant && b.params.value != 0.0);
                 },
                 [](Block b) {
                   if (b.kind == K::Gain)
                     b.params.gain = -b.params.gain;
                   else
                     b.params.value = -b.params.value;
                   return b;
                 },
                 true});
  ops.push_back({"ConstantPerturb", [](const Block& b) { return b.kind == K::Constant && b.params.value != 0.0; },
                 [](Block b) {
                   b.params.value *= 1.1;
                   return b;
                 },
                 false});
  ops.push_back({"RelOpSwap",
                 [](const Block& b) { return b.kind == K::Relational && detail::swap_rel(b.params.op) != b.params.op; },
                 [](Block b) {
                   b.params.op = detail::swap_rel(b.params.op);
                   return b;
                 },
                 true});
  ops.push_back({"LogicOpSwap",
                 [](const Block& b) { return b.kind == K::Logical && (b.params.op == "&&" || b.params.op == "||"); },
                 [](Block b) {
                   b.params.op = b.params.op == "&&" ? "||" : "&&";
                   return b;
                 },
                 true});
  ops.push_back({"IntegratorInitShift", [](const Block& b) { return b.kind == K::Integrator; },
                 [](Block b) {
                   b.params.init_offset += 0.1;
                   return b;
                 },
                 false});
  ops.push_back({"SaturationWiden",
                 [](const Block& b) { return b.kind == K::Saturation && (b.params.lo != 0.0 || b.params.hi != 0.0); },
                 [](Block b) {
                   b.params.lo *= 2.0;
                   b.params.hi *= 2.0;
                   return b;
                 },
                 false});
  ops.push_back({"SumSignFlip", [](const Block& b) { return b.kind == K::Sum && !b.params.signs.empty(); },
                 [](Block b) {
                   char& c = b.params.signs.back();
                   c = c == '+' ? '-' : '+';
                   return b;
                 },
                 true});
  return ops;
}

/// `all` or a comma-separated list of operator names.
inline std::vector<MutationOperator> select_operators(const std::string& spec) {
  std::vector<MutationOperator> all = builtin_operators();
  if (spec.empty() || spec == "all") return all;
  std::vector<MutationOperator> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    bool found = false;
    for (const auto& op : all) {
      if (op.name == name) {
        out.push_back(op);
        found = true;
      }
    }
    if (!found) throw ValidationError("unknown mutation operator '" + name + "'");
  }
  return out;
}

struct MutationSite {
  std::string op;
  std::string block;
  friend bool operator==(const MutationSite&, const MutationSite&) = default;
};

inline std::vector<MutationSite> list_sites(const SimModel& m, const std::vector<MutationOperator>& ops) {
  std::vector<MutationSite> out;
  for (const auto& b : m.blocks)
    for (const auto& op : ops)
      if (op.applies(b)) out.push_back({op.name, b.id});
  return out;
}

struct Mutant {
  std::string base;
  std::string op;
  std::string site;
  SimModel model;
};

inline std::string mutant_name(const std::string& base, const std::string& op, const std::string& block) {
  return base + "__" + op + "__" + block;
}

/// One mutant per site. Mutants that fail validation are skipped and
/// described in `diagnostics` when given.
inline std::vector<Mutant> gen_mutants(const SimModel& m, const std::vector<MutationOperator>& ops,
                                       std::vector<std::string>* diagnostics = nullptr) {
  std::vector<Mutant> out;
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    for (const auto& op : ops) {
      if (!op.applies(m.blocks[i])) continue;
      SimModel mm = m;
      mm.blocks[i] = op.transform(m.blocks[i]);
      mm.name = mutant_name(m.name, op.name, m.blocks[i].id);
      try {
        validate(mm);
      } catch (const ValidationError& e) {
        if (diagnostics) diagnostics->push_back(mm.name + ": " + e.what());
        continue;
      }
      out.push_back({m.name, op.name, m.blocks[i].id, std::move(mm)});
    }
  }
  return out;
}

}  // namespace hytest

#endif  // HYTEST_MUTATION_HPP_
