#ifndef HYTEST_TESTS_SUPPORT_HPP_
#define HYTEST_TESTS_SUPPORT_HPP_

#include <string>

#include "hytest/hytest.hpp"

namespace hytest::fixtures {

inline std::string model_path(const std::string& file) { return std::string(HYTEST_MODELS_DIR) + "/" + file; }

inline HybridModel hybrid(const std::string& base) { return load_hybrid_model(model_path(base + ".hybrid.json")); }
inline SimModel sim(const std::string& base) { return load_sim_model(model_path(base + ".sim.json")); }

inline const char* const kBundled[] = {"pendulum", "cruise_control", "rooms_heaters"};

// Minimal one-variable model used where the bundled ones would obscure the point.
inline HybridModel tiny_model(const std::string& goal_json = R"({"final_modes": ["b"]})") {
  auto doc = nlohmann::json::parse(R"({
    "name": "tiny",
    "variables": [{"name": "x", "lo": -3, "hi": 3, "precision": 1}],
    "modes": [
      {"name": "a", "invariant": "x < 0", "flows": {"x": "1"}},
      {"name": "b", "invariant": "x >= 0", "flows": {"x": "0"}}
    ],
    "transitions": [{"src": "a", "dst": "b", "guard": "x >= 0"}],
    "unacceptable": ["abs(x) > 3"]
  })");
  doc["goal"] = nlohmann::json::parse(goal_json);
  return parse_hybrid_model(doc);
}

}  // namespace hytest::fixtures

#endif  // HYTEST_TESTS_SUPPORT_HPP_
