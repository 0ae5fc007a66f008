#pragma once

#include <cstdint>
#include <vector>

#include "metagrid/env.hpp"
#include "metagrid/level.hpp"

namespace metagrid {

// Exact finite-horizon solution by backward induction over
// (position, presence mask, steps elapsed), with exact expectations over
// termination and respawn outcomes.
struct SolveResult {
  double start_value = 0;          // optimal expected return from the start state
  bool has_policy = false;
  int rows = 0, cols = 0, num_objects = 0, horizon = 0;
  std::vector<uint8_t> actions;    // [t][pos][mask] when has_policy

  int act(const EnvState& s) const {
    size_t pos = static_cast<size_t>(s.row) * cols + s.col;
    size_t idx = (static_cast<size_t>(s.steps) * (static_cast<size_t>(rows) * cols) + pos)
                     << num_objects |
                 s.present;
    return actions[idx];
  }
};

// Throws when num_positions * 2^objects * T_max exceeds `budget` state-steps.
SolveResult solve_optimal(const Level& lv, double gamma, long budget = 100000000L,
                          bool want_policy = false);

}  // namespace metagrid
