#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "metagrid/trainer.hpp"

using namespace metagrid;

namespace {

TrainRunConfig small_run(uint64_t seed = 1) {
  TrainRunConfig cfg;
  cfg.num_lifetimes = 4;
  cfg.envs_per_lifetime = 2;
  cfg.steps_per_update = 8;
  cfg.k_updates = 2;
  cfg.meta_updates = 3;
  cfg.lifetime = 96;  // two batches of (k+1)*E*T = 48 per lifetime
  cfg.score_kind = ScoreKind::Uniform;
  cfg.seed = seed;
  return cfg;
}

OptimizerConfig small_rule() {
  OptimizerConfig cfg;
  cfg.n = 4;
  cfg.embed = 6;
  cfg.hidden = 8;
  cfg.inner_lr = 2.0;
  return cfg;
}

LevelDistribution small_dist() {
  LevelDistribution dist;
  dist.grid_sizes = {5};
  dist.max_objects = 2;
  dist.horizon_choices = {30};
  return dist;
}

CuratorConfig small_curator() {
  CuratorConfig cfg;
  cfg.capacity = 32;
  return cfg;
}

std::string tmp_path(const char* name) { return std::string("/tmp/") + name; }

}  // namespace

TEST_CASE("zero meta-updates leaves the rule at its initialization") {
  Trainer t(small_run(), small_rule(), small_curator(), small_dist());
  uint64_t before = t.eta_checksum();
  t.run();  // meta_updates defaults to 3, so force zero explicitly
  TrainRunConfig cfg = small_run();
  cfg.meta_updates = 0;
  Trainer t0(cfg, small_rule(), small_curator(), small_dist());
  uint64_t init = t0.eta_checksum();
  t0.run();
  CHECK(t0.eta_checksum() == init);
  CHECK(t0.batches_done() == 0);
  CHECK(init == before);  // same seed, same initialization
  CHECK(t.eta_checksum() != before);  // and training does move the rule
}

TEST_CASE("fixed seed gives identical runs; different seeds differ") {
  Trainer a(small_run(7), small_rule(), small_curator(), small_dist());
  Trainer b(small_run(7), small_rule(), small_curator(), small_dist());
  a.run();
  b.run();
  CHECK(a.eta_checksum() == b.eta_checksum());
  CHECK(a.total_interactions() == b.total_interactions());
  CHECK(a.metrics().back().to_json() == b.metrics().back().to_json());

  Trainer c(small_run(8), small_rule(), small_curator(), small_dist());
  c.run();
  CHECK(c.eta_checksum() != a.eta_checksum());
}

TEST_CASE("interaction audit accounts for every environment step") {
  TrainRunConfig cfg = small_run(3);
  cfg.meta_updates = 5;
  Trainer t(cfg, small_rule(), small_curator(), small_dist());
  t.run();
  CHECK(t.skipped() == 0);
  long per_lifetime_batch =
      static_cast<long>(cfg.k_updates + 1) * cfg.envs_per_lifetime * cfg.steps_per_update;
  CHECK(t.total_interactions() == cfg.meta_updates * cfg.num_lifetimes * per_lifetime_batch);
}

TEST_CASE("exhausted lifetimes are scored into the curator and replay begins") {
  TrainRunConfig cfg = small_run(4);
  cfg.meta_updates = 8;
  Trainer t(cfg, small_rule(), small_curator(), small_dist());
  t.run();
  CHECK(t.curator().size() > 0);
  int scored = 0, replayed = 0, fresh = 0;
  for (const auto& m : t.metrics()) {
    scored += m.lifetimes_scored;
    replayed += m.replayed_starts;
    fresh += m.fresh_starts;
  }
  // lifetime = 2 batches, so half the population retires per batch
  CHECK(scored >= cfg.meta_updates);
  CHECK(replayed + fresh == scored);
  CHECK(replayed > 0);  // p_replay = 0.5 over dozens of restarts
}

TEST_CASE("static level pool bypasses the curator") {
  LevelDistribution dist = small_dist();
  Rng rng(11);
  std::vector<Level> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(sample_level(rng, dist));
  TrainRunConfig cfg = small_run(5);
  cfg.meta_updates = 6;
  Trainer t(cfg, small_rule(), small_curator(), dist, pool);
  t.run();
  CHECK(t.curator().size() == 0);
  std::set<uint64_t> pool_hashes;
  for (Level lv : pool) {
    lv.lifetime = cfg.lifetime;  // the trainer pins the budget on every draw
    pool_hashes.insert(lv.content_hash());
  }
  // determinism holds for static curricula too
  Trainer t2(cfg, small_rule(), small_curator(), dist, pool);
  t2.run();
  CHECK(t2.eta_checksum() == t.eta_checksum());
}

TEST_CASE("checkpoint resume is bit-identical to an uninterrupted run") {
  TrainRunConfig cfg = small_run(9);
  cfg.meta_updates = 10;
  Trainer full(cfg, small_rule(), small_curator(), small_dist());
  Trainer half(cfg, small_rule(), small_curator(), small_dist());
  for (int i = 0; i < 10; ++i) full.run_batch();
  for (int i = 0; i < 5; ++i) half.run_batch();
  std::string path = tmp_path("trainer_ckpt.bin");
  half.save_checkpoint(path);

  Trainer resumed = Trainer::load_checkpoint(path, cfg, small_rule(), small_curator(), small_dist());
  CHECK(resumed.batches_done() == 5);
  for (int i = 0; i < 5; ++i) resumed.run_batch();

  CHECK(resumed.batches_done() == full.batches_done());
  CHECK(resumed.eta_checksum() == full.eta_checksum());
  CHECK(resumed.total_interactions() == full.total_interactions());
  CHECK(resumed.curator().serialize() == full.curator().serialize());
  CHECK(resumed.metrics().back().to_json() == full.metrics().back().to_json());
  std::remove(path.c_str());
}

TEST_CASE("corrupt or mismatched checkpoints fail loudly") {
  TrainRunConfig cfg = small_run(12);
  Trainer t(cfg, small_rule(), small_curator(), small_dist());
  t.run_batch();
  std::string path = tmp_path("trainer_ckpt_bad.bin");
  t.save_checkpoint(path);

  // different configuration
  TrainRunConfig other = cfg;
  other.lifetime = 1000;
  CHECK_THROWS_AS(Trainer::load_checkpoint(path, other, small_rule(), small_curator(), small_dist()),
                  Error);

  // flipped magic byte
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('x');
  }
  CHECK_THROWS_AS(Trainer::load_checkpoint(path, cfg, small_rule(), small_curator(), small_dist()),
                  Error);

  // truncation
  t.save_checkpoint(path);
  std::string blob;
  {
    std::ifstream f(path, std::ios::binary);
    blob.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
  }
  CHECK_THROWS_AS(Trainer::load_checkpoint(path, cfg, small_rule(), small_curator(), small_dist()),
                  Error);
  std::remove(path.c_str());
}

TEST_CASE("metrics lines are valid single-line records with stable keys") {
  TrainRunConfig cfg = small_run(2);
  cfg.meta_updates = 1;
  Trainer t(cfg, small_rule(), small_curator(), small_dist());
  BatchMetrics m = t.run_batch();
  std::string j = m.to_json();
  CHECK(j.front() == '{');
  CHECK(j.back() == '}');
  CHECK(j.find('\n') == std::string::npos);
  for (const char* key : {"\"batch\":", "\"outer_loss\":", "\"validation_return\":",
                          "\"buffer_size\":", "\"skipped\":"})
    CHECK(j.find(key) != std::string::npos);
}
