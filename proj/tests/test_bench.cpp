#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace hytest;

namespace {

BenchConfig pendulum_config(std::size_t reps, bool timings) {
  nlohmann::json j{{"models", {{{"hybrid", "pendulum.hybrid.json"}, {"sim", "pendulum.sim.json"}}}},
                   {"repetitions", reps},
                   {"record_timings", timings}};
  return parse_bench_config(j, HYTEST_MODELS_DIR);
}

}  // namespace

TEST(BenchConfigFile, Parse) {
  BenchConfig c = load_bench_config(fixtures::model_path("bench.json"));
  ASSERT_EQ(c.models.size(), 3u);
  EXPECT_EQ(c.models[0].name, "pendulum");
  EXPECT_TRUE(std::filesystem::exists(c.models[2].sim_path));
  EXPECT_EQ(c.repetitions, 30u);
  EXPECT_EQ(c.seed(0), 1u);
  EXPECT_EQ(c.seed(29), 30u);

  BenchConfig d = pendulum_config(1, true);
  EXPECT_EQ(d.models[0].name, "pendulum");
  EXPECT_THROW(parse_bench_config(nlohmann::json{{"models", nlohmann::json::array()}, {"repetitions", 0}}),
               ValidationError);
  EXPECT_THROW(parse_bench_config(nlohmann::json::object()), ValidationError);
}

TEST(Bench, SingleRepetitionSmoke) {
  BenchReport rep = run_bench(pendulum_config(1, true));
  ASSERT_EQ(rep.models.size(), 1u);
  const ModelBench& m = rep.models[0];
  ASSERT_FALSE(m.error.has_value()) << *m.error;
  EXPECT_EQ(m.mutants, 20u);
  ASSERT_EQ(m.rows.size(), 2u);
  ASSERT_EQ(m.summary.size(), 2u);
  EXPECT_EQ(m.summary[0].technique, "HyTest");
  EXPECT_EQ(m.summary[1].technique, "Random");
  EXPECT_EQ(m.rows[0].tc_count, m.rows[1].tc_count);
  EXPECT_GT(m.summary[0].tc_count, 0.0);

  nlohmann::json j = to_json(rep);
  for (const char* key : {"tc_count", "gen_seconds", "exec_seconds_per_model", "total_seconds", "faults_revealed",
                          "percent", "percent_non_equivalent"})
    EXPECT_TRUE(j["models"][0]["summary"][0].contains(key)) << key;
  std::string md = to_markdown(rep);
  EXPECT_NE(md.find("| pendulum | HyTest |"), std::string::npos);
  EXPECT_NE(md.find("| pendulum | Random |"), std::string::npos);

  auto dir = std::filesystem::temp_directory_path() / "hytest_bench_smoke";
  std::filesystem::remove_all(dir);
  write_bench_report(rep, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.md"));
  std::filesystem::remove_all(dir);
}

TEST(BenchProperty, ArithmeticAndDeterminism) {
  BenchReport a = run_bench(pendulum_config(2, false));
  BenchReport b = run_bench(pendulum_config(2, false));
  EXPECT_EQ(to_json(a).dump(2), to_json(b).dump(2));
  EXPECT_EQ(to_markdown(a), to_markdown(b));

  const ModelBench& m = a.models[0];
  ASSERT_FALSE(m.error.has_value());
  std::size_t ne = 0;
  for (bool x : m.mutant_non_equivalent) ne += x;
  EXPECT_EQ(ne, m.non_equivalent);
  for (const auto& s : m.summary) {
    double revealed = 0, revealed_ne = 0, tcs = 0, total = 0;
    int n = 0;
    for (const auto& r : m.rows) {
      if (r.technique != s.technique) continue;
      ++n;
      revealed += static_cast<double>(r.revealed);
      revealed_ne += static_cast<double>(r.revealed_non_equivalent);
      tcs += static_cast<double>(r.tc_count);
      total += r.gen_seconds + r.exec_seconds;
      EXPECT_LE(r.revealed, m.mutants);
      EXPECT_LE(r.revealed_non_equivalent, r.revealed);
    }
    ASSERT_EQ(n, 2);
    EXPECT_DOUBLE_EQ(s.revealed, revealed / n);
    EXPECT_DOUBLE_EQ(s.tc_count, tcs / n);
    EXPECT_DOUBLE_EQ(s.total_seconds, total / n);
    EXPECT_DOUBLE_EQ(s.percent, 100.0 * s.revealed / static_cast<double>(m.mutants));
    EXPECT_DOUBLE_EQ(s.percent_non_equivalent, 100.0 * (revealed_ne / n) / static_cast<double>(m.non_equivalent));
  }
  // Generation has no randomness, so the HyTest suite size is the same for every seed.
  EXPECT_EQ(m.rows[0].tc_count, m.rows[2].tc_count);
  EXPECT_EQ(m.rows[0].revealed, m.rows[2].revealed);

  nlohmann::json j = to_json(a);
  EXPECT_FALSE(j["models"][0]["summary"][0].contains("gen_seconds"));
  EXPECT_FALSE(j["models"][0]["rows"][0].contains("exec_seconds"));
}

TEST(Bench, MissingModelIsRecorded) {
  nlohmann::json j{{"models", {{{"hybrid", "missing.hybrid.json"}, {"sim", "missing.sim.json"}}}}, {"repetitions", 1}};
  BenchReport rep = run_bench(parse_bench_config(j, HYTEST_MODELS_DIR));
  ASSERT_EQ(rep.models.size(), 1u);
  EXPECT_TRUE(rep.models[0].error.has_value());
  EXPECT_NE(to_markdown(rep).find("error"), std::string::npos);
}
