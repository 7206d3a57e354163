#ifndef HYTEST_BENCH_HPP_
#define HYTEST_BENCH_HPP_

// Mutation study driver: HyTest and an equal-size random suite, run against
// every mutant of each bundled model over seeded repetitions.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hytest/condition_graph.hpp"
#include "hytest/error.hpp"
#include "hytest/hybrid_model.hpp"
#include "hytest/mutation.hpp"
#include "hytest/oracle.hpp"
#include "hytest/sim_model.hpp"
#include "hytest/simulator.hpp"
#include "hytest/test_conditions.hpp"
#include "hytest/testgen.hpp"

namespace hytest {

struct BenchModel {
  std::string name;
  std::string hybrid_path;
  std::string sim_path;
};

struct BenchConfig {
  std::vector<BenchModel> models;
  std::size_t repetitions = 30;
  std::vector<std::uint64_t> seeds;  // one per repetition; defaults to 1..repetitions
  std::size_t stride_mult = 1;
  std::size_t grid_cap = kDefaultGridCap;
  std::string ops = "all";
  std::string out_dir = "bench_out";
  bool record_timings = true;
  /// Trace difference above which a mutant is counted as non-equivalent.
  double equivalence_tol = 1e-6;

  std::uint64_t seed(std::size_t rep) const { return rep < seeds.size() ? seeds[rep] : rep + 1; }
};

/// Paths inside the document are taken relative to `base_dir`.
inline BenchConfig parse_bench_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  BenchConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
  };
  for (const auto& m : detail::require(j, "models", "bench config")) {
    BenchModel bm;
    bm.hybrid_path = resolve(detail::require_string(m, "hybrid", "bench model"));
    bm.sim_path = resolve(detail::require_string(m, "sim", "bench model"));
    bm.name = m.value("name", std::filesystem::path(bm.sim_path).stem().stem().string());
    c.models.push_back(bm);
  }
  c.repetitions = j.value("repetitions", c.repetitions);
  if (c.repetitions == 0) throw ValidationError("repetitions must be at least 1");
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.stride_mult = j.value("stride", c.stride_mult);
  c.grid_cap = j.value("cap", c.grid_cap);
  c.ops = j.value("ops", c.ops);
  c.out_dir = resolve(j.value("out_dir", c.out_dir));
  c.record_timings = j.value("record_timings", c.record_timings);
  c.equivalence_tol = j.value("equivalence_tol", c.equivalence_tol);
  return c;
}

inline BenchConfig load_bench_config(const std::string& path) {
  return parse_bench_config(detail::read_json_file(path), std::filesystem::path(path).parent_path());
}

struct BenchRow {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::string technique;
  std::size_t tc_count = 0;
  double gen_seconds = 0.0;
  double exec_seconds = 0.0;
  std::size_t revealed = 0;
  std::size_t revealed_non_equivalent = 0;
};

struct TechniqueSummary {
  std::string technique;
  double tc_count = 0.0;
  double gen_seconds = 0.0;
  double exec_seconds_per_model = 0.0;
  double total_seconds = 0.0;
  double revealed = 0.0;
  double percent = 0.0;
  double percent_non_equivalent = 0.0;
};

struct ModelBench {
  std::string name;
  std::size_t mutants = 0;
  std::size_t non_equivalent = 0;
  std::vector<std::string> mutant_names;
  std::vector<bool> mutant_non_equivalent;
  std::vector<std::string> diagnostics;
  std::optional<std::string> error;
  std::vector<BenchRow> rows;
  std::vector<TechniqueSummary> summary;  // HyTest first, then Random
};

struct BenchReport {
  std::vector<ModelBench> models;
  std::size_t repetitions = 0;
  bool record_timings = true;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// A mutant is equivalent when its run from the configured initial state
// matches the reference within `tol` at every sample and does not throw.
inline bool non_equivalent(const SimModel& ref, const SimModel& mutant, const SimConfig& cfg, double tol) {
  Trace a = simulate(ref, cfg);
  Trace b;
  try {
    b = simulate(mutant, cfg);
  } catch (const SimulationError&) {
    return true;
  }
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a.rows[k].size(); ++i)
      if (std::fabs(a.rows[k][i] - b.rows[k][i]) > tol) return true;
  return false;
}

inline TechniqueSummary summarize(const std::string& technique, const std::vector<BenchRow>& rows, std::size_t mutants,
                                  std::size_t non_equiv) {
  TechniqueSummary s;
  s.technique = technique;
  std::size_t n = 0;
  double revealed_ne = 0.0;
  for (const auto& r : rows) {
    if (r.technique != technique) continue;
    ++n;
    s.tc_count += static_cast<double>(r.tc_count);
    s.gen_seconds += r.gen_seconds;
    s.exec_seconds_per_model += mutants ? r.exec_seconds / static_cast<double>(mutants) : 0.0;
    s.total_seconds += r.gen_seconds + r.exec_seconds;
    s.revealed += static_cast<double>(r.revealed);
    revealed_ne += static_cast<double>(r.revealed_non_equivalent);
  }
  if (n == 0) return s;
  double dn = static_cast<double>(n);
  s.tc_count /= dn;
  s.gen_seconds /= dn;
  s.exec_seconds_per_model /= dn;
  s.total_seconds /= dn;
  s.revealed /= dn;
  revealed_ne /= dn;
  s.percent = mutants ? 100.0 * s.revealed / static_cast<double>(mutants) : 0.0;
  s.percent_non_equivalent = non_equiv ? 100.0 * revealed_ne / static_cast<double>(non_equiv) : 0.0;
  return s;
}

}  // namespace detail

inline ModelBench bench_model(const BenchModel& bm, const BenchConfig& cfg) {
  ModelBench out;
  out.name = bm.name;
  try {
    HybridModel h = load_hybrid_model(bm.hybrid_path);
    SimModel sim = load_sim_model(bm.sim_path);
    SimConfig sc = sim.simulation.value_or(SimConfig{});
    ConditionGraph g = build_condition_graph(h);
    std::vector<TestCondition> tcs = gen_test_conditions(g);
    OracleContext ctx(h, g, tcs);

    std::vector<Mutant> mutants = gen_mutants(sim, select_operators(cfg.ops), &out.diagnostics);
    std::vector<SimModel> faulty;
    for (const auto& m : mutants) {
      faulty.push_back(m.model);
      out.mutant_names.push_back(m.model.name);
      bool ne = detail::non_equivalent(sim, m.model, sc, cfg.equivalence_tol);
      out.mutant_non_equivalent.push_back(ne);
      out.non_equivalent += ne ? 1 : 0;
    }
    out.mutants = mutants.size();

    GenOptions go;
    go.stride_mult = cfg.stride_mult;
    go.grid_cap = cfg.grid_cap;
    auto record = [&](std::size_t rep, std::uint64_t seed, const char* tech, const TestSuite& suite, double gen_s) {
      SuiteReport sr = run_suite(sim, faulty, suite, ctx, sc);
      BenchRow row{rep, seed, tech, suite.cases.size(), gen_s, sr.exec_seconds, sr.revealed, 0};
      for (std::size_t i = 0; i < sr.models.size(); ++i)
        if (sr.models[i].revealed && out.mutant_non_equivalent[i]) ++row.revealed_non_equivalent;
      out.rows.push_back(row);
    };
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      std::uint64_t seed = cfg.seed(rep);
      auto t0 = std::chrono::steady_clock::now();
      GenReport gr = generate_suite(h, tcs, sim, sc, go);
      double gen_s = detail::seconds_since(t0);
      record(rep, seed, "HyTest", gr.suite, gen_s);

      t0 = std::chrono::steady_clock::now();
      TestSuite rs = gen_random_suite(h, tcs, gr.suite.cases.size(), seed);
      gen_s = detail::seconds_since(t0);
      record(rep, seed, "Random", rs, gen_s);
    }
    out.summary.push_back(detail::summarize("HyTest", out.rows, out.mutants, out.non_equivalent));
    out.summary.push_back(detail::summarize("Random", out.rows, out.mutants, out.non_equivalent));
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

inline BenchReport run_bench(const BenchConfig& cfg) {
  BenchReport rep;
  rep.repetitions = cfg.repetitions;
  rep.record_timings = cfg.record_timings;
  for (const auto& m : cfg.models) rep.models.push_back(bench_model(m, cfg));
  return rep;
}

inline nlohmann::json to_json(const BenchReport& rep) {
  const bool t = rep.record_timings;
  nlohmann::json j{{"repetitions", rep.repetitions}, {"models", nlohmann::json::array()}};
  for (const auto& m : rep.models) {
    nlohmann::json jm{{"name", m.name}, {"mutants", m.mutants}, {"non_equivalent", m.non_equivalent}};
    if (m.error) jm["error"] = *m.error;
    jm["mutant_list"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m.mutant_names.size(); ++i)
      jm["mutant_list"].push_back({{"name", m.mutant_names[i]}, {"non_equivalent", static_cast<bool>(m.mutant_non_equivalent[i])}});
    if (!m.diagnostics.empty()) jm["diagnostics"] = m.diagnostics;
    jm["summary"] = nlohmann::json::array();
    for (const auto& s : m.summary) {
      nlohmann::json js{{"technique", s.technique},
                        {"tc_count", s.tc_count},
                        {"faults_revealed", s.revealed},
                        {"percent", s.percent},
                        {"percent_non_equivalent", s.percent_non_equivalent}};
      if (t) {
        js["gen_seconds"] = s.gen_seconds;
        js["exec_seconds_per_model"] = s.exec_seconds_per_model;
        js["total_seconds"] = s.total_seconds;
      }
      jm["summary"].push_back(js);
    }
    jm["rows"] = nlohmann::json::array();
    for (const auto& r : m.rows) {
      nlohmann::json jr{{"repetition", r.repetition},
                        {"seed", r.seed},
                        {"technique", r.technique},
                        {"tc_count", r.tc_count},
                        {"revealed", r.revealed},
                        {"revealed_non_equivalent", r.revealed_non_equivalent}};
      if (t) {
        jr["gen_seconds"] = r.gen_seconds;
        jr["exec_seconds"] = r.exec_seconds;
      }
      jm["rows"].push_back(jr);
    }
    j["models"].push_back(jm);
  }
  return j;
}

/// Markdown table with one row per (model, technique).
inline std::string to_markdown(const BenchReport& rep) {
  const bool t = rep.record_timings;
  std::ostringstream os;
  os << std::fixed;
  os << "# Mutation study\n\n";
  os << "Means over " << rep.repetitions << " repetitions.\n\n";
  os << "| Model | Technique | # TCs | Gen. time (s) | Exec. time per faulty model (s) | Total time (s) | Faults revealed | % | % of non-equivalent |\n";
  os << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& m : rep.models) {
    if (m.error) {
      os << "| " << m.name << " | error: " << m.error->substr(0, 80) << " | | | | | | | |\n";
      continue;
    }
    for (const auto& s : m.summary) {
      os << "| " << m.name << " | " << s.technique << " | " << std::setprecision(1) << s.tc_count << " | ";
      if (t)
        os << std::setprecision(3) << s.gen_seconds << " | " << std::setprecision(4) << s.exec_seconds_per_model << " | "
           << std::setprecision(3) << s.total_seconds;
      else
        os << "n/a | n/a | n/a";
      os << " | " << std::setprecision(2) << s.revealed << " / " << m.mutants << " | " << std::setprecision(1) << s.percent
         << " | " << s.percent_non_equivalent << " (of " << m.non_equivalent << ") |\n";
    }
  }
  return os.str();
}

/// Writes report.json and report.md into `cfg.out_dir`.
inline void write_bench_report(const BenchReport& rep, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream(std::filesystem::path(out_dir) / "report.json") << to_json(rep).dump(2) << "\n";
  std::ofstream(std::filesystem::path(out_dir) / "report.md") << to_markdown(rep);
}

}  // namespace hytest

#endif  // HYTEST_BENCH_HPP_
