#pragma once

#include <unordered_set>

#include "metagrid/stats.hpp"
#include "metagrid/trainer.hpp"

namespace metagrid {

// (raw - random) / max(a2c - random, eps), clipped to [-1, 2]: 0 matches the
// random baseline, 1 matches A2C trained with the same interaction budget.
struct NormalizedScore {
  double raw = 0;
  double a2c = 0;
  double random = 0;
  double value = 0;
};

NormalizedScore normalize_score(double raw, double a2c, double random, double eps = 0.05);

struct AggregateStats {
  double iqm = 0;
  double optimality_gap = 0;
  Interval ci;  // 95% stratified bootstrap of the IQM
  size_t samples = 0;
};

// per_task[i] holds all seed scores of one task (the bootstrap strata).
AggregateStats aggregate(const std::vector<std::vector<double>>& per_task, int resamples, Rng& rng);

struct EvalConfig {
  long lifetime = 2500;  // interaction budget per trained agent and baseline
  int num_envs = 8;
  int num_steps = 20;
  int eval_episodes = 128;
  double norm_eps = 0.05;
  AgentParams::Mode mode = AgentParams::Mode::Tabular;
  uint64_t seed = 0;  // base stream; per-cell streams derive from it
};

struct EvalResult {
  std::vector<Level> levels;
  std::vector<std::vector<NormalizedScore>> scores;  // [level][seed]

  std::vector<double> normalized() const;            // flattened values
  std::vector<std::vector<double>> by_level() const; // strata for aggregate()
  double mean_normalized() const;
  double fraction_below(double threshold) const;
};

// Trains a fresh agent per (level, seed) with the frozen rule for `lifetime`
// interactions and normalizes its final return against per-level A2C and
// random baselines (memoized in `cache`). `train_hashes`, when given, is the
// content-hash set of the training levels; overlap is an error.
EvalResult eval_optimizer(const OptimizerParams& eta, const std::vector<Level>& levels,
                          const std::vector<uint64_t>& seeds, AntagonistCache& cache,
                          const EvalConfig& cfg,
                          const std::unordered_set<uint64_t>* train_hashes = nullptr);

// Held-out suites. Hard: domain-randomized levels filtered to a nontrivial
// optimum (solve_optimal > 0) and shortest path to a positive object >=
// min_distance. Easy: small open grids with one nearby terminal +1.
std::vector<Level> make_hard_suite(const LevelDistribution& dist, int count, int min_distance,
                                   Rng& rng, long solver_budget = 4000000);
std::vector<Level> make_easy_suite(int count, Rng& rng);

enum class CurriculumSource { Random, MaxAR, Handcrafted };

const char* curriculum_source_name(CurriculumSource s);
CurriculumSource curriculum_source_from_name(const std::string& name);

// Fixed training subsets for static-curriculum runs. MaxAR takes the
// `size` highest-scoring levels of a previously trained buffer.
std::vector<Level> curriculum_levels(CurriculumSource source, int size, Rng& rng,
                                     const LevelDistribution& dist,
                                     const Curator* buffer = nullptr);

struct ExperimentConfig {
  TrainRunConfig train;  // template; seed overwritten per run
  OptimizerConfig rule;
  CuratorConfig curator;
  LevelDistribution dist;
  EvalConfig eval;
  int num_seeds = 5;
  uint64_t seed = 0;
};

struct DiversityPoint {
  int size = 0;
  uint64_t seed = 0;
  double mean_score = 0;
};

struct DiversityResult {
  std::vector<DiversityPoint> points;
  std::vector<int> sizes;
  std::vector<double> mean_per_size;
  std::vector<double> stderr_per_size;
  double pmcc = 0;        // return vs log2(size) across all points
  double p_one_sided = 1; // H1: positive correlation
};

// Meta-trains one rule per (size, seed) on a fixed level subset (curator
// disabled) and evaluates on the held-out suite.
DiversityResult diversity_experiment(const ExperimentConfig& cfg, CurriculumSource source,
                                     const std::vector<int>& sizes,
                                     const std::vector<Level>& held_out_suite,
                                     const Curator* buffer = nullptr);

struct AblationRow {
  std::string name;
  std::vector<double> per_seed;  // mean normalized score, seed-aligned
  double mean = 0;
  double std_err = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  bool has_comparison = false;
  TTestResult first_vs_last;  // paired, rows.front() vs rows.back()
};

// Full curated runs per scorer kind with paired seeds, evaluated on the
// held-out suite. The Uniform row is the domain-randomization baseline.
AblationResult scorer_ablation(const ExperimentConfig& cfg, const std::vector<ScoreKind>& kinds,
                               const std::vector<Level>& held_out_suite);

// Same pairing over antagonist choices with the AR scorer.
AblationResult antagonist_ablation(const ExperimentConfig& cfg,
                                   const std::vector<AntagonistKind>& kinds,
                                   const std::vector<Level>& held_out_suite);

// Plot-ready three-column series (x, y, err) and tab-separated tables.
void write_series(const std::string& path, const std::vector<double>& x,
                  const std::vector<double>& y, const std::vector<double>& err);
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

}  // namespace metagrid
