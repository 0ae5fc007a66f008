#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "metagrid/level.hpp"
#include "metagrid/rng.hpp"

namespace metagrid {

inline constexpr int kNumActions = 4;  // up, down, left, right

struct EnvState {
  int row = 0;
  int col = 0;
  uint32_t present = 0;  // per-object presence bits
  int steps = 0;
  bool done = false;
};

EnvState env_reset(const Level& lv);

struct StepResult {
  double reward = 0;
  bool done = false;
};

// Movement into walls or off-grid is a no-op; entering a cell with a present
// object collects it (reward, presence cleared, termination draw); absent
// objects then respawn independently; the step cap ends the episode.
StepResult env_step(const Level& lv, EnvState& s, int action, Rng& rng);

// Tabular observation: position-index * 2^objects + presence bitmask.
int state_index(const Level& lv, const EnvState& s);
EnvState state_from_index(const Level& lv, int index);

// Maps a batch of state indices to action probabilities, row-major [B, 4].
using PolicyFn = std::function<void(const std::vector<int>& states, std::vector<double>& probs)>;

// Fixed-geometry rollout data, env-major: entry (e, t) lives at e*num_steps+t.
struct TransitionBatch {
  int num_envs = 0;
  int num_steps = 0;
  std::vector<int> state;
  std::vector<int> next_state;  // post-step index; terminal state before auto-reset
  std::vector<int> action;
  std::vector<double> reward;
  std::vector<uint8_t> done;
  std::vector<double> action_prob;  // behavior probability of the chosen action

  size_t size() const { return state.size(); }
  size_t at(int e, int t) const { return static_cast<size_t>(e) * num_steps + t; }
};

// Vectorized rollout with auto-reset and one RNG stream per environment.
// Mutates `states` in place so consecutive rollouts continue the episodes.
TransitionBatch rollout(const Level& lv, const PolicyFn& policy, int num_envs, int num_steps,
                        std::vector<EnvState>& states, std::vector<Rng>& env_rngs);

// Convenience: fresh environments, then rollout.
TransitionBatch rollout_fresh(const Level& lv, const PolicyFn& policy, int num_envs, int num_steps,
                              Rng& rng);

// Mean undiscounted (gamma = 1) or discounted episode return of a policy,
// over `episodes` full episodes.
double evaluate_policy(const Level& lv, const PolicyFn& policy, int episodes, Rng& rng,
                       double gamma = 1.0);

// Analytic bound on any episode return for this level.
double max_return_bound(const Level& lv);

}  // namespace metagrid
