// Command-line front end: graph, conditions, gen, simulate, run, mutate, bench.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hytest/hytest.hpp"

namespace fs = std::filesystem;
using namespace hytest;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

VarAssignment parse_inits(const std::vector<std::string>& items) {
  VarAssignment out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--init expects name=value, got '" + item + "'");
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HyTest: test generation and oracle for hybrid-model CPSs"};
  app.require_subcommand(1);

  std::string model, sim, out, suite_path, ops = "all", config;
  std::size_t stride = 1, cap = kDefaultGridCap, random_n = 0;
  std::uint64_t seed = 1;
  bool dot = false, csv = false, uncontrolled = false;
  std::vector<std::string> inits, mutant_files;

  auto* graph = app.add_subcommand("graph", "Print the condition graph");
  graph->add_option("--model", model, "Hybrid model JSON")->required();
  graph->add_flag("--dot", dot, "Graphviz output");
  graph->add_option("--out", out, "Output file (default stdout)");

  auto* conds = app.add_subcommand("conditions", "List the test conditions");
  conds->add_option("--model", model, "Hybrid model JSON")->required();
  conds->add_option("--out", out, "Output file (default stdout)");

  auto* gen = app.add_subcommand("gen", "Generate a test suite");
  gen->add_option("--model", model, "Hybrid model JSON")->required();
  gen->add_option("--sim", sim, "Simulation model JSON")->required();
  gen->add_option("--stride", stride, "Grid stride multiplier")->check(CLI::PositiveNumber);
  gen->add_option("--cap", cap, "Maximum number of grid points");
  gen->add_option("--seed", seed, "Seed for --random");
  gen->add_option("--random", random_n, "Generate this many random cases instead");
  gen->add_flag("--csv", csv, "Write CSV instead of JSON");
  gen->add_option("--out", out, "Output file (default stdout)");

  auto* simc = app.add_subcommand("simulate", "Simulate a model and write its trace as CSV");
  simc->add_option("--sim", sim, "Simulation model JSON");
  simc->add_option("--hybrid", model, "Hybrid model JSON (runs its flows)");
  simc->add_option("--init", inits, "Initial value name=value (repeatable)");
  simc->add_flag("--uncontrolled", uncontrolled, "Zero all controller blocks");
  simc->add_option("--out", out, "Output file (default stdout)");

  auto* run = app.add_subcommand("run", "Run a suite against a model and its mutants");
  run->add_option("--model", model, "Hybrid model JSON")->required();
  run->add_option("--sim", sim, "Reference simulation model JSON")->required();
  run->add_option("--suite", suite_path, "Suite JSON")->required();
  run->add_option("--mutants", mutant_files, "Mutant model files or directories");
  run->add_option("--out", out, "Report file (default stdout)");

  auto* mutate = app.add_subcommand("mutate", "Write first-order mutants");
  mutate->add_option("--model", sim, "Simulation model JSON")->required();
  mutate->add_option("--ops", ops, "Comma-separated operators or 'all'");
  mutate->add_option("--out-dir", out, "Directory for mutant files")->required();

  auto* bench = app.add_subcommand("bench", "Run the mutation study");
  bench->add_option("--config", config, "Bench config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*graph) {
      HybridModel h = load_hybrid_model(model);
      ConditionGraph g = build_condition_graph(h);
      if (dot) {
        write_text(out, to_dot(g));
      } else {
        std::string s;
        for (const auto& n : g.nodes) s += "node " + n.name + " [" + to_string(n.cls) + "]\n";
        for (const auto& e : g.edges)
          s += "edge " + g.nodes[e.source].name + " -> " + g.nodes[e.destination].name + " : " + to_string(e.label) + "\n";
        if (g.goal_expr) s += "goal " + to_string(*g.goal_expr) + "\n";
        write_text(out, s);
      }
    } else if (*conds) {
      HybridModel h = load_hybrid_model(model);
      write_text(out, write_test_conditions(gen_test_conditions(build_condition_graph(h)), h.name));
    } else if (*gen) {
      HybridModel h = load_hybrid_model(model);
      SimModel m = load_sim_model(sim);
      auto tcs = gen_test_conditions(build_condition_graph(h));
      TestSuite s;
      if (random_n > 0) {
        s = gen_random_suite(h, tcs, random_n, seed);
      } else {
        GenOptions go;
        go.stride_mult = stride;
        go.grid_cap = cap;
        GenReport r = generate_suite(h, tcs, m, m.simulation.value_or(SimConfig{}), go);
        s = r.suite;
        std::cerr << "conditions " << tcs.size() << ", cases " << s.cases.size() << " (controlled " << r.from_controlled
                  << ", plant " << r.from_plant << ", grid " << r.from_grid << " of " << r.grid_points
                  << " points, stride " << stride << ", cap " << cap << ")\n";
        for (auto id : s.uncovered) std::cerr << "uncovered: " << format_test_condition(tcs[id]) << "\n";
      }
      write_text(out, csv ? suite_to_csv(s) : to_json(s).dump(2) + "\n");
    } else if (*simc) {
      Trace tr;
      if (!sim.empty()) {
        SimModel m = load_sim_model(sim);
        SimConfig c = m.simulation.value_or(SimConfig{});
        if (!inits.empty()) c.init = parse_inits(inits);
        tr = simulate(m, c, SimOptions{uncontrolled});
      } else if (!model.empty()) {
        HybridModel h = load_hybrid_model(model);
        SimConfig c;
        c.init = parse_inits(inits);
        tr = simulate(h, c);
      } else {
        throw ValidationError("simulate needs --sim or --hybrid");
      }
      write_text(out, to_csv(tr));
    } else if (*run) {
      HybridModel h = load_hybrid_model(model);
      SimModel ref = load_sim_model(sim);
      OracleContext ctx(h);
      TestSuite s = suite_from_json(detail::read_json_file(suite_path), h.variable_names());
      std::vector<SimModel> muts;
      for (const auto& p : mutant_files) {
        if (fs::is_directory(p)) {
          std::vector<fs::path> files;
          for (const auto& e : fs::directory_iterator(p))
            if (e.path().extension() == ".json") files.push_back(e.path());
          std::sort(files.begin(), files.end());
          for (const auto& f : files) muts.push_back(load_sim_model(f.string()));
        } else {
          muts.push_back(load_sim_model(p));
        }
      }
      SuiteReport rep = run_suite(ref, muts, s, ctx, ref.simulation.value_or(SimConfig{}));
      write_text(out, to_json(rep).dump(2) + "\n");
    } else if (*mutate) {
      SimModel m = load_sim_model(sim);
      std::vector<std::string> diag;
      auto mutants = gen_mutants(m, select_operators(ops), &diag);
      fs::create_directories(out);
      for (const auto& mu : mutants) write_text((fs::path(out) / (mu.model.name + ".json")).string(), to_json(mu.model).dump(2) + "\n");
      for (const auto& d : diag) std::cerr << "skipped " << d << "\n";
      std::cerr << mutants.size() << " mutants written to " << out << "\n";
    } else if (*bench) {
      BenchConfig c = load_bench_config(config);
      BenchReport rep = run_bench(c);
      write_bench_report(rep, c.out_dir);
      std::cout << to_markdown(rep);
    }
  } catch (const ModelDefectError& e) {
    std::cerr << "model defect: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
