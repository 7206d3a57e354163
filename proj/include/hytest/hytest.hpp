#ifndef HYTEST_HYTEST_HPP_
#define HYTEST_HYTEST_HPP_

#include "hytest/bench.hpp"
#include "hytest/condition_graph.hpp"
#include "hytest/error.hpp"
#include "hytest/eval.hpp"
#include "hytest/expr.hpp"
#include "hytest/hybrid_model.hpp"
#include "hytest/mutation.hpp"
#include "hytest/oracle.hpp"
#include "hytest/sim_model.hpp"
#include "hytest/simulator.hpp"
#include "hytest/test_conditions.hpp"
#include "hytest/testgen.hpp"

#endif  // HYTEST_HYTEST_HPP_
