#pragma once

#include <string>

#include "metagrid/curator.hpp"
#include "metagrid/scoring.hpp"
#include "metagrid/update_rule.hpp"

namespace metagrid {

struct TrainRunConfig {
  int num_lifetimes = 64;
  int envs_per_lifetime = 8;
  int steps_per_update = 20;  // env interactions per agent update, per env
  int k_updates = 5;          // agent updates per meta-gradient
  long meta_updates = 100;
  long lifetime = 2500;  // N: interactions granted per student before scoring
  ScoreKind score_kind = ScoreKind::Uniform;
  AntagonistKind antagonist = AntagonistKind::A2C;
  int score_eval_episodes = 128;
  uint64_t seed = 0;
  long checkpoint_interval = 0;      // batches; 0 disables
  std::string out_dir;               // metrics + checkpoints; empty disables files

  void validate() const;
};

// One agent-environment lifetime in the population.
struct Lifetime {
  Level level;
  AgentParams theta;
  std::vector<EnvState> states;
  std::vector<Rng> env_rngs;
  long consumed = 0;
  bool replayed = false;
  uint64_t id = 0;  // global counter, seeds this lifetime's streams
};

struct BatchMetrics {
  long batch = 0;
  double mean_outer_loss = 0;
  double mean_validation_return = 0;
  double mean_abs_pi_hat = 0;
  int lifetimes_scored = 0;
  double mean_score = 0;  // over lifetimes scored this batch
  size_t buffer_size = 0;
  int replayed_starts = 0;
  int fresh_starts = 0;
  long skipped = 0;  // non-finite meta-gradients dropped so far
  std::string to_json() const;
};

// Single-threaded, deterministic meta-training loop: a population of
// lifetimes each contribute one meta-gradient per batch; exhausted lifetimes
// are scored, reported to the curator and reinitialized in place.
class Trainer {
 public:
  // A nonempty `static_pool` replaces the curator: levels are drawn uniformly
  // from the pool and scores are not fed back (static curriculum).
  Trainer(TrainRunConfig cfg, OptimizerConfig ocfg, CuratorConfig ccfg, LevelDistribution dist,
          std::vector<Level> static_pool = {});

  // Runs until the configured meta-update budget; appends to metrics.
  void run();
  BatchMetrics run_batch();

  const OptimizerParams& eta() const { return eta_; }
  const Curator& curator() const { return curator_; }
  long batches_done() const { return batch_; }
  long skipped() const { return skipped_; }
  // Audit counter: every environment step any student consumed.
  long total_interactions() const { return total_interactions_; }
  const std::vector<BatchMetrics>& metrics() const { return metrics_; }

  uint64_t eta_checksum() const;

  void save_checkpoint(const std::string& path) const;
  // Restores full trainer state; the caller must pass the same configs the
  // run was started with (verified by an embedded hash).
  static Trainer load_checkpoint(const std::string& path, TrainRunConfig cfg,
                                 OptimizerConfig ocfg, CuratorConfig ccfg,
                                 LevelDistribution dist, std::vector<Level> static_pool = {});

 private:
  TrainRunConfig cfg_;
  OptimizerConfig ocfg_;
  Curator curator_;
  std::vector<Level> static_pool_;
  OptimizerParams eta_;
  AdamState adam_;
  std::vector<Lifetime> lifetimes_;
  AntagonistCache cache_;
  Rng curator_rng_;
  uint64_t next_lifetime_id_ = 0;
  long batch_ = 0;
  long skipped_ = 0;
  long total_interactions_ = 0;
  std::vector<BatchMetrics> metrics_;

  Lifetime make_lifetime();
  void score_and_reset(Lifetime& lt, BatchMetrics& m);
  uint64_t config_hash() const;
  void append_metrics_line(const BatchMetrics& m) const;
};

uint64_t checksum_tensors(const std::vector<const Tensor*>& ts);

}  // namespace metagrid
