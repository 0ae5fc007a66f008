#pragma once

#include <map>
#include <tuple>

#include "metagrid/env.hpp"
#include "metagrid/solver.hpp"
#include "metagrid/tensor.hpp"

namespace metagrid {

enum class AntagonistKind { A2C, PPO, Random, Expert };

const char* antagonist_name(AntagonistKind k);
AntagonistKind antagonist_from_name(const std::string& name);

// Tabular actor-critic, the reference learner regret is measured against.
struct ActorCriticParams {
  int num_states = 0;
  int num_actions = kNumActions;
  Tensor policy_logits;  // [S, A]
  Tensor values;         // [S]

  PolicyFn policy_fn() const;
};

struct AntagonistConfig {
  int num_envs = 64;
  int num_steps = 20;
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double lr = 0.01;  // Adam, tabular tables
  double ppo_clip = 0.2;
  int ppo_epochs = 4;
  int eval_episodes = 128;
  long budget_cap = 100000000L;
};

struct AntagonistResult {
  double value = 0;  // mean undiscounted return over eval_episodes
  ActorCriticParams params;
  long interactions = 0;  // training steps actually consumed
};

// Trains (A2C/PPO) or instantiates (Random/Expert) the reference policy on
// one level and evaluates its final performance. Trainable kinds consume
// exactly `budget` environment interactions.
AntagonistResult train_antagonist(AntagonistKind kind, const Level& lv, long budget, Rng& rng,
                                  const AntagonistConfig& cfg = {});

// Memoized final returns, keyed by (kind, level content, budget, seed).
// Each key trains once with an rng derived deterministically from the key.
class AntagonistCache {
 public:
  explicit AntagonistCache(AntagonistConfig cfg = {}) : cfg_(cfg) {}

  double value(AntagonistKind kind, const Level& lv, long budget, uint64_t seed);

  size_t size() const { return cache_.size(); }
  long hits() const { return hits_; }
  long misses() const { return misses_; }

 private:
  AntagonistConfig cfg_;
  std::map<std::tuple<int, uint64_t, long, uint64_t>, double> cache_;
  long hits_ = 0;
  long misses_ = 0;
};

}  // namespace metagrid
