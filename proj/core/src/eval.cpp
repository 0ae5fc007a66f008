#include "metagrid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "metagrid/solver.hpp"

namespace metagrid {

namespace {
constexpr uint64_t kEvalStream = 0x4556;  // per-cell agent training/eval streams
}

NormalizedScore normalize_score(double raw, double a2c, double random, double eps) {
  MG_CHECK(eps > 0, "normalization epsilon must be positive");
  NormalizedScore s;
  s.raw = raw;
  s.a2c = a2c;
  s.random = random;
  s.value = (raw - random) / std::max(a2c - random, eps);
  s.value = std::min(2.0, std::max(-1.0, s.value));
  return s;
}

AggregateStats aggregate(const std::vector<std::vector<double>>& per_task, int resamples,
                         Rng& rng) {
  MG_CHECK(!per_task.empty(), "aggregate: no tasks");
  std::vector<double> pooled;
  for (const auto& t : per_task) {
    MG_CHECK(!t.empty(), "aggregate: empty task stratum");
    pooled.insert(pooled.end(), t.begin(), t.end());
  }
  MG_CHECK(pooled.size() >= 2, "aggregate: need at least two samples");
  AggregateStats out;
  out.iqm = iqm(pooled);
  out.optimality_gap = optimality_gap(pooled);
  out.ci = stratified_bootstrap(per_task, iqm, resamples, rng);
  out.samples = pooled.size();
  return out;
}

std::vector<double> EvalResult::normalized() const {
  std::vector<double> out;
  for (const auto& row : scores)
    for (const auto& s : row) out.push_back(s.value);
  return out;
}

std::vector<std::vector<double>> EvalResult::by_level() const {
  std::vector<std::vector<double>> out;
  for (const auto& row : scores) {
    std::vector<double> xs;
    for (const auto& s : row) xs.push_back(s.value);
    out.push_back(std::move(xs));
  }
  return out;
}

double EvalResult::mean_normalized() const {
  auto xs = normalized();
  MG_CHECK(!xs.empty(), "empty evaluation result");
  return mean(xs);
}

double EvalResult::fraction_below(double threshold) const {
  auto xs = normalized();
  MG_CHECK(!xs.empty(), "empty evaluation result");
  size_t below = 0;
  for (double v : xs) below += v < threshold ? 1 : 0;
  return static_cast<double>(below) / xs.size();
}

EvalResult eval_optimizer(const OptimizerParams& eta, const std::vector<Level>& levels,
                          const std::vector<uint64_t>& seeds, AntagonistCache& cache,
                          const EvalConfig& cfg,
                          const std::unordered_set<uint64_t>* train_hashes) {
  MG_CHECK(!levels.empty(), "eval_optimizer: no levels");
  MG_CHECK(!seeds.empty(), "eval_optimizer: no seeds");
  MG_CHECK(cfg.lifetime > 0 && cfg.num_envs > 0 && cfg.num_steps > 0,
           "eval_optimizer: bad geometry");

  EvalResult out;
  int updates = static_cast<int>(cfg.lifetime / (static_cast<long>(cfg.num_envs) * cfg.num_steps));
  MG_CHECK(updates >= 1, "eval_optimizer: lifetime below one update window");

  for (const Level& raw_lv : levels) {
    Level lv = raw_lv;
    lv.lifetime = cfg.lifetime;
    if (train_hashes)
      MG_CHECK(!train_hashes->count(lv.content_hash()),
               "evaluation level overlaps the training set");
    double a2c = cache.value(AntagonistKind::A2C, lv, cfg.lifetime, cfg.seed);
    double random = cache.value(AntagonistKind::Random, lv, cfg.lifetime, cfg.seed);

    std::vector<NormalizedScore> row;
    for (uint64_t seed : seeds) {
      Rng stream = Rng(cfg.seed).split(kEvalStream).split(lv.content_hash()).split(seed);
      Rng init_rng = stream.split(0);
      AgentParams theta = init_agent(lv.num_states(), eta.cfg.n, init_rng, cfg.mode);
      std::vector<EnvState> states(cfg.num_envs, env_reset(lv));
      std::vector<Rng> env_rngs;
      for (int e = 0; e < cfg.num_envs; ++e) env_rngs.push_back(stream.split(1 + e));
      train_with_rule(eta, lv, theta, states, env_rngs, updates, cfg.num_envs, cfg.num_steps);
      Rng eval_rng = stream.split(1000000);
      double ret = evaluate_policy(lv, theta.policy_fn(), cfg.eval_episodes, eval_rng);
      row.push_back(normalize_score(ret, a2c, random, cfg.norm_eps));
    }
    out.levels.push_back(lv);
    out.scores.push_back(std::move(row));
  }
  return out;
}

std::vector<Level> make_hard_suite(const LevelDistribution& dist, int count, int min_distance,
                                   Rng& rng, long solver_budget) {
  std::vector<Level> out;
  std::unordered_set<uint64_t> seen;
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    MG_CHECK(++attempts < 200000L * count, "hard-suite sampling did not converge");
    Level lv = sample_level(rng, dist);
    if (seen.count(lv.content_hash())) continue;
    int best = -1;
    for (const ObjectSpec& o : lv.objects) {
      if (o.reward <= 0) continue;
      int d = lv.bfs_distance(o.row, o.col);
      if (d >= 0 && (best < 0 || d < best)) best = d;
    }
    if (best < min_distance) continue;  // also drops unreachable (-1)
    try {
      if (solve_optimal(lv, 1.0, solver_budget).start_value <= 0) continue;
    } catch (const Error&) {
      continue;  // solver budget exceeded; skip rather than stall
    }
    seen.insert(lv.content_hash());
    out.push_back(lv);
  }
  return out;
}

std::vector<Level> make_easy_suite(int count, Rng& rng) {
  std::vector<Level> out;
  std::unordered_set<uint64_t> seen;
  while (static_cast<int>(out.size()) < count) {
    Level lv;
    lv.rows = lv.cols = 5;
    lv.walls.assign(25, 0);
    lv.start_row = rng.uniform_int(5);
    lv.start_col = rng.uniform_int(5);
    lv.max_episode_steps = 30;
    lv.lifetime = 2500;
    ObjectSpec o;
    o.row = rng.uniform_int(5);
    o.col = rng.uniform_int(5);
    o.reward = 1.0;
    o.eps_term = 1.0;
    int d = std::abs(o.row - lv.start_row) + std::abs(o.col - lv.start_col);
    if (d < 1 || d > 3) continue;
    lv.objects.push_back(o);
    lv.validate();
    if (!seen.insert(lv.content_hash()).second) continue;
    out.push_back(lv);
  }
  return out;
}

const char* curriculum_source_name(CurriculumSource s) {
  switch (s) {
    case CurriculumSource::Random: return "random";
    case CurriculumSource::MaxAR: return "max_ar";
    case CurriculumSource::Handcrafted: return "handcrafted";
  }
  throw Error("unknown curriculum source");
}

CurriculumSource curriculum_source_from_name(const std::string& name) {
  if (name == "random") return CurriculumSource::Random;
  if (name == "max_ar") return CurriculumSource::MaxAR;
  if (name == "handcrafted") return CurriculumSource::Handcrafted;
  throw Error("unknown curriculum source: " + name);
}

std::vector<Level> curriculum_levels(CurriculumSource source, int size, Rng& rng,
                                     const LevelDistribution& dist, const Curator* buffer) {
  MG_CHECK(size > 0, "curriculum size must be positive");
  std::vector<Level> out;
  switch (source) {
    case CurriculumSource::Random:
      for (int i = 0; i < size; ++i) out.push_back(sample_level(rng, dist));
      return out;
    case CurriculumSource::Handcrafted:
      for (const std::string& name : handcrafted_names()) out.push_back(handcrafted(name));
      MG_CHECK(size == static_cast<int>(out.size()),
               "handcrafted source has exactly " + std::to_string(out.size()) + " levels");
      return out;
    case CurriculumSource::MaxAR: {
      MG_CHECK(buffer, "max_ar source needs a trained level buffer");
      MG_CHECK(buffer->size() >= static_cast<size_t>(size),
               "level buffer smaller than the requested subset");
      std::vector<const BufferEntry*> entries;
      for (const auto& e : buffer->entries()) entries.push_back(&e);
      std::stable_sort(entries.begin(), entries.end(),
                       [](const BufferEntry* a, const BufferEntry* b) { return a->score > b->score; });
      for (int i = 0; i < size; ++i) out.push_back(entries[i]->level);
      return out;
    }
  }
  throw Error("unknown curriculum source");
}

namespace {

// One static-curriculum meta-training run followed by held-out evaluation.
double run_and_eval(const ExperimentConfig& cfg, const TrainRunConfig& train,
                    const std::vector<Level>& pool, const std::vector<Level>& suite,
                    AntagonistCache& cache) {
  Trainer tr(train, cfg.rule, cfg.curator, cfg.dist, pool);
  tr.run();
  std::unordered_set<uint64_t> train_hashes;
  for (Level lv : pool) {
    lv.lifetime = train.lifetime;
    train_hashes.insert(lv.content_hash());
  }
  EvalConfig ecfg = cfg.eval;
  ecfg.seed = train.seed;
  EvalResult r = eval_optimizer(tr.eta(), suite, {train.seed}, cache, ecfg,
                                pool.empty() ? nullptr : &train_hashes);
  return r.mean_normalized();
}

void finish_row(AblationRow& row) {
  row.mean = mean(row.per_seed);
  row.std_err = row.per_seed.size() > 1
                    ? sample_std(row.per_seed) / std::sqrt(static_cast<double>(row.per_seed.size()))
                    : 0.0;
}

// Paired comparison of the first and last rows; degenerate (zero-variance)
// differences leave has_comparison false rather than throwing.
void finish_comparison(AblationResult& out, int num_seeds) {
  if (out.rows.size() < 2 || num_seeds < 2) return;
  const std::vector<double>&a = out.rows.front().per_seed, &b = out.rows.back().per_seed;
  std::vector<double> diff(a.size());
  for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  if (sample_std(diff) == 0.0) return;
  out.has_comparison = true;
  out.first_vs_last = paired_t_test(a, b);
}

}  // namespace

DiversityResult diversity_experiment(const ExperimentConfig& cfg, CurriculumSource source,
                                     const std::vector<int>& sizes,
                                     const std::vector<Level>& held_out_suite,
                                     const Curator* buffer) {
  MG_CHECK(!sizes.empty(), "diversity: no sizes");
  MG_CHECK(std::is_sorted(sizes.begin(), sizes.end()), "diversity: sizes must ascend");
  MG_CHECK(cfg.num_seeds >= 1, "diversity: need at least one seed");

  DiversityResult out;
  out.sizes = sizes;
  AntagonistCache cache;
  std::vector<double> log_sizes, scores;
  for (int size : sizes) {
    std::vector<double> per_seed;
    for (int s = 0; s < cfg.num_seeds; ++s) {
      uint64_t run_seed = cfg.seed + static_cast<uint64_t>(s);
      Rng pool_rng = Rng(cfg.seed).split(0x504f4f4c).split(size).split(run_seed);
      std::vector<Level> pool = curriculum_levels(source, size, pool_rng, cfg.dist, buffer);
      TrainRunConfig train = cfg.train;
      train.seed = run_seed;
      double score = run_and_eval(cfg, train, pool, held_out_suite, cache);
      out.points.push_back({size, run_seed, score});
      per_seed.push_back(score);
      log_sizes.push_back(std::log2(static_cast<double>(size)));
      scores.push_back(score);
    }
    out.mean_per_size.push_back(mean(per_seed));
    out.stderr_per_size.push_back(
        per_seed.size() > 1
            ? sample_std(per_seed) / std::sqrt(static_cast<double>(per_seed.size()))
            : 0.0);
  }
  if (sizes.size() >= 2 && scores.size() >= 3) {
    out.pmcc = pearson(log_sizes, scores);
    double p2 = pearson_p_value(out.pmcc, static_cast<int>(scores.size()));
    out.p_one_sided = out.pmcc > 0 ? p2 / 2 : 1 - p2 / 2;
  }
  return out;
}

AblationResult scorer_ablation(const ExperimentConfig& cfg, const std::vector<ScoreKind>& kinds,
                               const std::vector<Level>& held_out_suite) {
  MG_CHECK(!kinds.empty(), "scorer ablation: no kinds");
  AblationResult out;
  AntagonistCache cache;
  for (ScoreKind kind : kinds) {
    AblationRow row;
    row.name = score_kind_name(kind);
    for (int s = 0; s < cfg.num_seeds; ++s) {
      TrainRunConfig train = cfg.train;
      train.score_kind = kind;
      train.seed = cfg.seed + static_cast<uint64_t>(s);
      row.per_seed.push_back(run_and_eval(cfg, train, {}, held_out_suite, cache));
    }
    finish_row(row);
    out.rows.push_back(std::move(row));
  }
  finish_comparison(out, cfg.num_seeds);
  return out;
}

AblationResult antagonist_ablation(const ExperimentConfig& cfg,
                                   const std::vector<AntagonistKind>& kinds,
                                   const std::vector<Level>& held_out_suite) {
  MG_CHECK(!kinds.empty(), "antagonist ablation: no kinds");
  AblationResult out;
  AntagonistCache cache;
  for (AntagonistKind kind : kinds) {
    AblationRow row;
    row.name = antagonist_name(kind);
    for (int s = 0; s < cfg.num_seeds; ++s) {
      TrainRunConfig train = cfg.train;
      train.score_kind = ScoreKind::AR;
      train.antagonist = kind;
      train.seed = cfg.seed + static_cast<uint64_t>(s);
      row.per_seed.push_back(run_and_eval(cfg, train, {}, held_out_suite, cache));
    }
    finish_row(row);
    out.rows.push_back(std::move(row));
  }
  finish_comparison(out, cfg.num_seeds);
  return out;
}

void write_series(const std::string& path, const std::vector<double>& x,
                  const std::vector<double>& y, const std::vector<double>& err) {
  MG_CHECK(x.size() == y.size() && y.size() == err.size(), "series columns must align");
  std::ofstream os(path);
  MG_CHECK(os.good(), "cannot open series file: " + path);
  char buf[128];
  for (size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g\t%.10g\t%.10g\n", x[i], y[i], err[i]);
    os << buf;
  }
  MG_CHECK(os.good(), "series write failed: " + path);
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path);
  MG_CHECK(os.good(), "cannot open table file: " + path);
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "\t" : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    MG_CHECK(row.size() == header.size(), "table row width mismatch");
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "\t" : "") << row[i];
    os << '\n';
  }
  MG_CHECK(os.good(), "table write failed: " + path);
}

}  // namespace metagrid
