#pragma once

#include "metagrid/agent.hpp"
#include "metagrid/antagonist.hpp"

namespace metagrid {

enum class ScoreKind { AR, OptimalRegret, L1ValueLoss, PositiveValueLoss, Uniform };

const char* score_kind_name(ScoreKind k);
ScoreKind score_kind_from_name(const std::string& name);

struct LevelScore {
  double value = 0;
  ScoreKind kind = ScoreKind::Uniform;
  double protagonist_return = 0;
  double reference_return = 0;  // antagonist / optimal value when defined
  bool has_reference = false;
  double noise_sigma = 0;  // Monte Carlo std error of the protagonist return
};

// Standard generalized-advantage recursion over the batch, reset at done
// flags and value-bootstrapped at the window edge. `values` is a per-state
// table of size level.num_states().
std::vector<double> gae(const TransitionBatch& batch, const std::vector<double>& values,
                        double gamma, double lambda);

struct ScoreContext {
  ScoreKind kind = ScoreKind::AR;
  AntagonistCache* cache = nullptr;  // required for AR
  AntagonistKind antagonist = AntagonistKind::A2C;
  int eval_episodes = 128;
  double gamma = 0.99;   // GAE / critic regression discount
  double lambda = 0.95;
  int critic_steps = 50;
  double critic_lr = 0.5;
  uint64_t antagonist_seed = 0;
  long solver_budget = 100000000L;
};

// Scores one level given the protagonist's end-of-lifetime parameters.
// Deterministic given (level, theta, rng state).
LevelScore score_level(const ScoreContext& ctx, const Level& lv, const AgentParams& theta,
                       Rng& rng);

// Fits a tabular critic by `steps` SGD passes of discounted-return
// regression on (state, return-to-go) pairs. Exposed for testing.
std::vector<double> fit_critic(const std::vector<int>& states, const std::vector<double>& targets,
                               int num_states, int steps, double lr);

}  // namespace metagrid
