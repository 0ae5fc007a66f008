#pragma once

#include <unordered_map>

#include "metagrid/level.hpp"

namespace metagrid {

struct BufferEntry {
  Level level;
  double score = 0;
  long last_visit = 0;  // meta-batch index of the latest score report
  long visits = 0;
};

struct CuratorConfig {
  size_t capacity = 4000;
  double p_replay = 0.5;
  double temperature = 1.0;  // rank prioritization
  double rho = 0.3;          // staleness mixing weight
};

// Level buffer mixing replayed high-score levels with fresh draws from the
// domain-randomized sampler. Replay priorities combine rank-based score
// prioritization with a staleness term.
class Curator {
 public:
  Curator(CuratorConfig cfg, LevelDistribution dist);

  struct Draw {
    Level level;
    bool replayed = false;
  };
  // With probability p_replay (and a nonempty buffer) samples from the
  // buffer; otherwise draws a fresh level.
  Draw next_level(Rng& rng);

  // Overwrites the score of a known level (refreshing its staleness stamp)
  // or inserts a new entry, evicting the current minimum when full and the
  // new score beats it.
  void report_score(const Level& lv, double score, long batch_index);

  size_t size() const { return entries_.size(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }
  const CuratorConfig& config() const { return cfg_; }
  const LevelDistribution& distribution() const { return dist_; }

  // Replay probabilities over current entries (the distribution next_level
  // uses when it replays); exposed for tests and buffer inspection.
  std::vector<double> replay_weights(long current_batch) const;

  std::string serialize() const;
  static Curator parse(const std::string& text);

 private:
  CuratorConfig cfg_;
  LevelDistribution dist_;
  std::vector<BufferEntry> entries_;
  std::unordered_map<uint64_t, size_t> index_;  // content hash -> entry slot
  long latest_batch_ = 0;

  void reindex();
};

}  // namespace metagrid
