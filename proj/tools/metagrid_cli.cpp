// Command-line shell around meta-training, evaluation and the desk-scale
// experiments. See README.md for usage examples.

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "metagrid/config.hpp"

using namespace metagrid;

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

std::string output_root() {
  const char* env = std::getenv("METAGRID_OUT");
  return env && *env ? env : ".";
}

struct CommonOpts {
  std::string config_path;
  std::string profile;
  std::vector<std::string> overrides;  // key=value
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--profile", o.profile, "geometry preset: desk or paper");
  cmd->add_option("--set", o.overrides, "config override key=value (repeatable)");
  cmd->add_option("--out", o.out_dir, "output directory (default: $METAGRID_OUT or .)");
}

RunConfig build_config(const CommonOpts& o) {
  RunConfig cfg;
  if (!o.profile.empty()) apply_profile(cfg, o.profile);
  if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
  for (const std::string& kv : o.overrides) {
    size_t eq = kv.find('=');
    MG_CHECK(eq != std::string::npos, "--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (cfg.train.out_dir.empty())
    cfg.train.out_dir = o.out_dir.empty() ? output_root() : o.out_dir;
  std::filesystem::create_directories(cfg.train.out_dir);
  return cfg;
}

void dump_effective(const RunConfig& cfg) {
  std::ofstream os(cfg.train.out_dir + "/config_effective.txt");
  MG_CHECK(os.good(), "cannot write effective config into " + cfg.train.out_dir);
  os << dump_config(cfg);
}

Trainer load_trainer(const RunConfig& cfg, const std::string& ckpt) {
  return Trainer::load_checkpoint(ckpt, cfg.train, cfg.rule, cfg.curator, cfg.dist);
}

std::vector<uint64_t> experiment_seeds(const RunConfig& cfg) {
  std::vector<uint64_t> seeds;
  for (int s = 0; s < cfg.num_seeds; ++s) seeds.push_back(cfg.train.seed + s);
  return seeds;
}

void print_aggregate(const char* label, const EvalResult& r, uint64_t seed) {
  Rng rng(seed);
  AggregateStats st = aggregate(r.by_level(), 10000, rng);
  std::printf("%s: iqm=%.4f optimality_gap=%.4f ci=[%.4f, %.4f] n=%zu below_0.75=%.3f\n", label,
              st.iqm, st.optimality_gap, st.ci.lo, st.ci.hi, st.samples, r.fraction_below(0.75));
}

int cmd_train(const CommonOpts& opts, const std::string& resume) {
  RunConfig cfg = build_config(opts);
  dump_effective(cfg);
  Trainer tr = resume.empty()
                   ? Trainer(cfg.train, cfg.rule, cfg.curator, cfg.dist)
                   : load_trainer(cfg, resume);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (tr.batches_done() < cfg.train.meta_updates && !g_stop.load()) {
    BatchMetrics m = tr.run_batch();
    if (m.batch % 10 == 0)
      std::printf("batch %ld loss=%.4f val_return=%.3f buffer=%zu skipped=%ld\n", m.batch,
                  m.mean_outer_loss, m.mean_validation_return, m.buffer_size, m.skipped);
  }
  tr.save_checkpoint(cfg.train.out_dir + "/checkpoint.bin");
  std::printf("%s after %ld batches (%ld interactions); checkpoint written to %s\n",
              g_stop.load() ? "interrupted" : "finished", tr.batches_done(),
              tr.total_interactions(), (cfg.train.out_dir + "/checkpoint.bin").c_str());
  return 0;
}

std::vector<Level> build_suite(const RunConfig& cfg, int num_levels, int min_distance,
                               uint64_t salt) {
  MG_CHECK(num_levels > 0, "need at least one evaluation level");
  Rng rng = Rng(cfg.train.seed).split(salt);
  return make_hard_suite(cfg.dist, num_levels, min_distance, rng);
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt, int num_levels, int min_distance) {
  RunConfig cfg = build_config(opts);
  dump_effective(cfg);
  Trainer tr = load_trainer(cfg, ckpt);
  std::vector<Level> suite = build_suite(cfg, num_levels, min_distance, 0x5355495445);
  AntagonistCache cache;
  EvalConfig ecfg = cfg.eval;
  ecfg.seed = cfg.train.seed;
  EvalResult r = eval_optimizer(tr.eta(), suite, experiment_seeds(cfg), cache, ecfg);
  print_aggregate("held-out hard suite", r, cfg.train.seed + 0x4349);

  std::vector<std::vector<std::string>> rows;
  char buf[64];
  for (size_t i = 0; i < r.levels.size(); ++i) {
    std::vector<double> xs;
    for (const auto& s : r.scores[i]) xs.push_back(s.value);
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(r.levels[i].content_hash()));
    std::string hash = buf;
    std::snprintf(buf, sizeof buf, "%.6g", mean(xs));
    std::string m = buf;
    std::snprintf(buf, sizeof buf, "%.6g", r.scores[i][0].a2c);
    std::string a = buf;
    std::snprintf(buf, sizeof buf, "%.6g", r.scores[i][0].random);
    rows.push_back({hash, m, a, buf});
  }
  write_table(cfg.train.out_dir + "/eval_levels.tsv",
              {"level", "mean_normalized", "a2c", "random"}, rows);

  std::vector<double> xs, ys, es;
  std::vector<double> per_level;
  for (const auto& row : r.by_level()) per_level.push_back(mean(row));
  std::sort(per_level.begin(), per_level.end());
  for (size_t i = 0; i < per_level.size(); ++i) {
    xs.push_back(static_cast<double>(i));
    ys.push_back(per_level[i]);
    es.push_back(0.0);
  }
  write_series(cfg.train.out_dir + "/eval_sorted_scores.tsv", xs, ys, es);
  std::printf("wrote %s and %s\n", (cfg.train.out_dir + "/eval_levels.tsv").c_str(),
              (cfg.train.out_dir + "/eval_sorted_scores.tsv").c_str());
  return 0;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
  ExperimentConfig e;
  e.train = cfg.train;
  e.train.out_dir.clear();  // per-run trainers stay quiet; tables go to out_dir
  e.train.checkpoint_interval = 0;
  e.rule = cfg.rule;
  e.curator = cfg.curator;
  e.dist = cfg.dist;
  e.eval = cfg.eval;
  e.num_seeds = cfg.num_seeds;
  e.seed = cfg.train.seed;
  return e;
}

void write_ablation(const RunConfig& cfg, const AblationResult& r, const std::string& name) {
  std::vector<std::vector<std::string>> rows;
  char buf[64];
  for (const AblationRow& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.6g", row.mean);
    std::string m = buf;
    std::snprintf(buf, sizeof buf, "%.6g", row.std_err);
    rows.push_back({row.name, m, buf});
    std::printf("%-16s mean=%.4f stderr=%.4f\n", row.name.c_str(), row.mean, row.std_err);
  }
  write_table(cfg.train.out_dir + "/" + name + ".tsv", {"kind", "mean", "stderr"}, rows);
  if (r.has_comparison)
    std::printf("paired t (%s vs %s): t=%.3f p_greater=%.4f\n", r.rows.front().name.c_str(),
                r.rows.back().name.c_str(), r.first_vs_last.t, r.first_vs_last.p_greater);
}

int cmd_diversity(const CommonOpts& opts, const std::string& sizes_csv, const std::string& source,
                  const std::string& buffer_path, int num_levels, int min_distance) {
  RunConfig cfg = build_config(opts);
  dump_effective(cfg);
  std::vector<int> sizes;
  for (const auto& tok : [&] {
         std::vector<std::string> out;
         std::string cur;
         for (char c : sizes_csv + ",") {
           if (c == ',') {
             if (!cur.empty()) out.push_back(cur);
             cur.clear();
           } else
             cur += c;
         }
         return out;
       }())
    sizes.push_back(std::stoi(tok));
  MG_CHECK(!sizes.empty(), "--sizes is empty");

  Curator buffer({}, cfg.dist);
  const Curator* buffer_ptr = nullptr;
  if (!buffer_path.empty()) {
    std::ifstream is(buffer_path);
    MG_CHECK(is.good(), "cannot read buffer snapshot: " + buffer_path);
    std::stringstream ss;
    ss << is.rdbuf();
    buffer = Curator::parse(ss.str());
    buffer_ptr = &buffer;
  }

  std::vector<Level> suite = build_suite(cfg, num_levels, min_distance, 0x5355495445);
  DiversityResult r = diversity_experiment(experiment_config(cfg),
                                           curriculum_source_from_name(source), sizes, suite,
                                           buffer_ptr);
  std::vector<double> xs;
  for (int s : r.sizes) xs.push_back(static_cast<double>(s));
  write_series(cfg.train.out_dir + "/diversity.tsv", xs, r.mean_per_size, r.stderr_per_size);
  std::printf("pmcc(return, log2 size) = %.4f, one-sided p = %.4f\n", r.pmcc, r.p_one_sided);
  return 0;
}

int cmd_scorer_ablation(const CommonOpts& opts, const std::string& kinds_csv, int num_levels,
                        int min_distance) {
  RunConfig cfg = build_config(opts);
  dump_effective(cfg);
  std::vector<ScoreKind> kinds;
  std::string cur;
  for (char c : kinds_csv + ",") {
    if (c == ',') {
      if (!cur.empty()) kinds.push_back(score_kind_from_name(cur));
      cur.clear();
    } else
      cur += c;
  }
  MG_CHECK(!kinds.empty(), "--kinds is empty");
  std::vector<Level> suite = build_suite(cfg, num_levels, min_distance, 0x5355495445);
  write_ablation(cfg, scorer_ablation(experiment_config(cfg), kinds, suite), "scorer_ablation");
  return 0;
}

int cmd_antagonist_ablation(const CommonOpts& opts, const std::string& kinds_csv, int num_levels,
                            int min_distance) {
  RunConfig cfg = build_config(opts);
  dump_effective(cfg);
  std::vector<AntagonistKind> kinds;
  std::string cur;
  for (char c : kinds_csv + ",") {
    if (c == ',') {
      if (!cur.empty()) kinds.push_back(antagonist_from_name(cur));
      cur.clear();
    } else
      cur += c;
  }
  MG_CHECK(!kinds.empty(), "--kinds is empty");
  std::vector<Level> suite = build_suite(cfg, num_levels, min_distance, 0x5355495445);
  write_ablation(cfg, antagonist_ablation(experiment_config(cfg), kinds, suite),
                 "antagonist_ablation");
  return 0;
}

int cmd_robustness(const CommonOpts& opts, const std::string& ckpt, int num_levels,
                   int min_distance) {
  // like eval, but against an upweighted-walls test distribution
  CommonOpts o = opts;
  o.overrides.push_back("dist.wall_density_max=0.45");
  return cmd_eval(o, ckpt, num_levels, min_distance);
}

int cmd_buffer_export(const CommonOpts& opts, const std::string& ckpt, const std::string& dest) {
  RunConfig cfg = build_config(opts);
  Trainer tr = load_trainer(cfg, ckpt);
  std::string path = dest.empty() ? cfg.train.out_dir + "/buffer.txt" : dest;
  std::ofstream os(path);
  MG_CHECK(os.good(), "cannot write buffer snapshot: " + path);
  os << tr.curator().serialize();
  std::printf("wrote %zu buffer entries to %s\n", tr.curator().size(), path.c_str());
  return 0;
}

int cmd_buffer_inspect(const CommonOpts& opts, const std::string& ckpt) {
  RunConfig cfg = build_config(opts);
  Trainer tr = load_trainer(cfg, ckpt);
  const Curator& cur = tr.curator();
  std::printf("buffer: %zu/%zu entries\n", cur.size(), cur.config().capacity);
  if (cur.size() == 0) return 0;
  std::vector<double> scores;
  for (const auto& e : cur.entries()) scores.push_back(e.score);
  std::sort(scores.begin(), scores.end());
  std::printf("scores: min=%.4f median=%.4f mean=%.4f max=%.4f\n", scores.front(),
              scores[scores.size() / 2], mean(scores), scores.back());
  std::vector<const BufferEntry*> top;
  for (const auto& e : cur.entries()) top.push_back(&e);
  std::sort(top.begin(), top.end(),
            [](const BufferEntry* a, const BufferEntry* b) { return a->score > b->score; });
  for (size_t i = 0; i < std::min<size_t>(5, top.size()); ++i)
    std::printf("  #%zu score=%.4f visits=%ld grid=%dx%d objects=%d horizon=%d\n", i + 1,
                top[i]->score, top[i]->visits, top[i]->level.rows, top[i]->level.cols,
                top[i]->level.num_objects(), top[i]->level.max_episode_steps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-World meta-learned optimizer: training, evaluation and experiments"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  std::string resume;
  CLI::App* train = app.add_subcommand("train", "run the meta-training loop");
  add_common(train, train_opts);
  train->add_option("--resume", resume, "checkpoint to resume from");

  CommonOpts eval_opts;
  std::string eval_ckpt;
  int eval_levels = 50, eval_min_distance = 5;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a held-out hard suite");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval->add_option("--levels", eval_levels, "suite size (default 50)");
  eval->add_option("--min-distance", eval_min_distance, "minimum shortest-path distance");

  CLI::App* experiment = app.add_subcommand("experiment", "desk-scale experiment drivers");
  experiment->require_subcommand(1);

  CommonOpts div_opts;
  std::string div_sizes = "4,16,64", div_source = "random", div_buffer;
  int div_levels = 20, div_min_distance = 5;
  CLI::App* diversity = experiment->add_subcommand("diversity", "held-out return vs set size");
  add_common(diversity, div_opts);
  diversity->add_option("--sizes", div_sizes, "comma-separated training-set sizes");
  diversity->add_option("--source", div_source, "random | max_ar | handcrafted");
  diversity->add_option("--buffer", div_buffer, "buffer snapshot for max_ar");
  diversity->add_option("--levels", div_levels, "held-out suite size");
  diversity->add_option("--min-distance", div_min_distance, "suite distance filter");

  CommonOpts sc_opts;
  std::string sc_kinds = "ar,optimal_regret,l1_value_loss,positive_value_loss,uniform";
  int sc_levels = 20, sc_min_distance = 5;
  CLI::App* scorer = experiment->add_subcommand("scorer-ablation", "curation score comparison");
  add_common(scorer, sc_opts);
  scorer->add_option("--kinds", sc_kinds, "comma-separated scorer kinds");
  scorer->add_option("--levels", sc_levels, "held-out suite size");
  scorer->add_option("--min-distance", sc_min_distance, "suite distance filter");

  CommonOpts an_opts;
  std::string an_kinds = "random,expert,a2c,ppo";
  int an_levels = 20, an_min_distance = 5;
  CLI::App* antagonist = experiment->add_subcommand("antagonist-ablation",
                                                    "regret reference comparison");
  add_common(antagonist, an_opts);
  antagonist->add_option("--kinds", an_kinds, "comma-separated antagonist kinds");
  antagonist->add_option("--levels", an_levels, "held-out suite size");
  antagonist->add_option("--min-distance", an_min_distance, "suite distance filter");

  CommonOpts rb_opts;
  std::string rb_ckpt;
  int rb_levels = 50, rb_min_distance = 5;
  CLI::App* robustness = experiment->add_subcommand("robustness",
                                                    "hard-suite eval with upweighted walls");
  add_common(robustness, rb_opts);
  robustness->add_option("--checkpoint", rb_ckpt, "trained checkpoint")->required();
  robustness->add_option("--levels", rb_levels, "suite size");
  robustness->add_option("--min-distance", rb_min_distance, "suite distance filter");

  CLI::App* buffer = app.add_subcommand("buffer", "level-buffer utilities");
  buffer->require_subcommand(1);
  CommonOpts be_opts, bi_opts;
  std::string be_ckpt, be_dest, bi_ckpt;
  CLI::App* bexport = buffer->add_subcommand("export", "write the buffer snapshot as text");
  add_common(bexport, be_opts);
  bexport->add_option("--checkpoint", be_ckpt, "trained checkpoint")->required();
  bexport->add_option("--dest", be_dest, "destination file");
  CLI::App* binspect = buffer->add_subcommand("inspect", "summarize the buffer contents");
  add_common(binspect, bi_opts);
  binspect->add_option("--checkpoint", bi_ckpt, "trained checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_opts, resume);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_levels, eval_min_distance);
    if (diversity->parsed())
      return cmd_diversity(div_opts, div_sizes, div_source, div_buffer, div_levels,
                           div_min_distance);
    if (scorer->parsed())
      return cmd_scorer_ablation(sc_opts, sc_kinds, sc_levels, sc_min_distance);
    if (antagonist->parsed())
      return cmd_antagonist_ablation(an_opts, an_kinds, an_levels, an_min_distance);
    if (robustness->parsed()) return cmd_robustness(rb_opts, rb_ckpt, rb_levels, rb_min_distance);
    if (bexport->parsed()) return cmd_buffer_export(be_opts, be_ckpt, be_dest);
    if (binspect->parsed()) return cmd_buffer_inspect(bi_opts, bi_ckpt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
