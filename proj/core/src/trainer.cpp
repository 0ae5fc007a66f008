#include "metagrid/trainer.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace metagrid {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t fnv64(uint64_t h, const void* bytes, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

uint64_t fnv64_str(uint64_t h, const std::string& s) { return fnv64(h, s.data(), s.size()); }

// Stream id salts for the per-purpose rng trees hung off the run seed.
constexpr uint64_t kEtaStream = 0x455441;       // rule initialization
constexpr uint64_t kCuratorStream = 0x435552;   // level draws
constexpr uint64_t kLifetimeStream = 0x4c4946;  // per-lifetime env streams
constexpr uint64_t kScoreStream = 0x53434f;     // per-lifetime scoring rollouts

void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  MG_CHECK(os.good(), "checkpoint write failed");
}

void read_bytes(std::istream& is, void* p, size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  MG_CHECK(is.good(), "checkpoint truncated or unreadable");
}

void write_u64(std::ostream& os, uint64_t v) { write_bytes(os, &v, sizeof v); }
void write_i64(std::ostream& os, int64_t v) { write_bytes(os, &v, sizeof v); }

uint64_t read_u64(std::istream& is) {
  uint64_t v;
  read_bytes(is, &v, sizeof v);
  return v;
}
int64_t read_i64(std::istream& is) {
  int64_t v;
  read_bytes(is, &v, sizeof v);
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u64(os, t.shape.size());
  for (int e : t.shape) write_i64(os, e);
  write_u64(os, t.data.size());
  if (!t.data.empty()) write_bytes(os, t.data.data(), t.data.size() * sizeof(double));
}

Tensor read_tensor(std::istream& is) {
  Tensor t;
  size_t ndim = read_u64(is);
  MG_CHECK(ndim <= 4, "checkpoint tensor rank out of range");
  t.shape.resize(ndim);
  for (size_t i = 0; i < ndim; ++i) t.shape[i] = static_cast<int>(read_i64(is));
  size_t n = read_u64(is);
  MG_CHECK(n == Tensor::numel_of(t.shape), "checkpoint tensor shape/size mismatch");
  t.data.resize(n);
  if (n) read_bytes(is, t.data.data(), n * sizeof(double));
  return t;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  write_bytes(os, s.data(), s.size());
}

std::string read_string(std::istream& is) {
  size_t n = read_u64(is);
  MG_CHECK(n < (1ULL << 32), "checkpoint string length out of range");
  std::string s(n, '\0');
  if (n) read_bytes(is, s.data(), n);
  return s;
}

void write_rng(std::ostream& os, const Rng& r) {
  write_u64(os, r.key());
  write_u64(os, r.counter());
}

Rng read_rng(std::istream& is) {
  uint64_t key = read_u64(is);
  uint64_t counter = read_u64(is);
  return Rng(key, counter);
}

constexpr uint64_t kCheckpointMagic = 0x4d47434b50543031ULL;  // "MGCKPT01"

}  // namespace

void TrainRunConfig::validate() const {
  MG_CHECK(num_lifetimes > 0, "num_lifetimes must be positive");
  MG_CHECK(envs_per_lifetime > 0, "envs_per_lifetime must be positive");
  MG_CHECK(steps_per_update > 0, "steps_per_update must be positive");
  MG_CHECK(k_updates > 0, "k_updates must be positive");
  MG_CHECK(meta_updates >= 0, "meta_updates must be nonnegative");
  MG_CHECK(lifetime > 0, "lifetime must be positive");
  MG_CHECK(score_eval_episodes > 0, "score_eval_episodes must be positive");
  MG_CHECK(checkpoint_interval >= 0, "checkpoint_interval must be nonnegative");
}

std::string BatchMetrics::to_json() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"batch\":%ld,\"outer_loss\":%.17g,\"validation_return\":%.17g,"
                "\"mean_abs_pi_hat\":%.17g,\"lifetimes_scored\":%d,\"mean_score\":%.17g,"
                "\"buffer_size\":%zu,\"replayed_starts\":%d,\"fresh_starts\":%d,"
                "\"skipped\":%ld}",
                batch, mean_outer_loss, mean_validation_return, mean_abs_pi_hat, lifetimes_scored,
                mean_score, buffer_size, replayed_starts, fresh_starts, skipped);
  return std::string(buf);
}

Trainer::Trainer(TrainRunConfig cfg, OptimizerConfig ocfg, CuratorConfig ccfg,
                 LevelDistribution dist, std::vector<Level> static_pool)
    : cfg_(cfg),
      ocfg_(ocfg),
      curator_(ccfg, dist),
      static_pool_(std::move(static_pool)),
      cache_(AntagonistConfig{}),
      curator_rng_(Rng(cfg.seed).split(kCuratorStream)) {
  cfg_.validate();
  Rng eta_rng = Rng(cfg_.seed).split(kEtaStream);
  eta_ = init_optimizer(ocfg_, eta_rng);
  lifetimes_.reserve(cfg_.num_lifetimes);
  for (int i = 0; i < cfg_.num_lifetimes; ++i) lifetimes_.push_back(make_lifetime());
}

Lifetime Trainer::make_lifetime() {
  Lifetime lt;
  lt.id = next_lifetime_id_++;
  if (!static_pool_.empty()) {
    lt.level = static_pool_[curator_rng_.uniform_int(static_cast<int>(static_pool_.size()))];
    lt.replayed = false;
  } else {
    Curator::Draw d = curator_.next_level(curator_rng_);
    lt.level = d.level;
    lt.replayed = d.replayed;
  }
  lt.level.lifetime = cfg_.lifetime;
  Rng stream = Rng(cfg_.seed).split(kLifetimeStream).split(lt.id);
  Rng init_rng = stream.split(0);
  lt.theta = init_agent(lt.level.num_states(), ocfg_.n, init_rng, AgentParams::Mode::Tabular);
  lt.states.assign(cfg_.envs_per_lifetime, env_reset(lt.level));
  lt.env_rngs.clear();
  for (int e = 0; e < cfg_.envs_per_lifetime; ++e) lt.env_rngs.push_back(stream.split(1 + e));
  return lt;
}

void Trainer::score_and_reset(Lifetime& lt, BatchMetrics& m) {
  if (static_pool_.empty()) {
    ScoreContext ctx;
    ctx.kind = cfg_.score_kind;
    ctx.cache = &cache_;
    ctx.antagonist = cfg_.antagonist;
    ctx.eval_episodes = cfg_.score_eval_episodes;
    ctx.antagonist_seed = cfg_.seed;
    Rng srng = Rng(cfg_.seed).split(kScoreStream).split(lt.id);
    LevelScore s = score_level(ctx, lt.level, lt.theta, srng);
    curator_.report_score(lt.level, s.value, batch_);
    ++m.lifetimes_scored;
    m.mean_score += s.value;
  }
  lt = make_lifetime();
  if (lt.replayed)
    ++m.replayed_starts;
  else
    ++m.fresh_starts;
}

BatchMetrics Trainer::run_batch() {
  BatchMetrics m;
  m.batch = batch_;
  std::vector<Tensor> grad_accum;
  int contributed = 0;
  for (Lifetime& lt : lifetimes_) {
    try {
      MetaGradStats s =
          meta_gradient(eta_, lt.level, lt.theta, lt.states, lt.env_rngs, cfg_.k_updates,
                        cfg_.envs_per_lifetime, cfg_.steps_per_update, grad_accum);
      lt.consumed += s.interactions;
      total_interactions_ += s.interactions;
      m.mean_outer_loss += s.outer_loss;
      m.mean_validation_return += s.validation_return;
      m.mean_abs_pi_hat += s.mean_abs_pi_hat;
      ++contributed;
    } catch (const Error&) {
      // non-finite meta-gradient: drop the contribution, replace the lifetime
      ++skipped_;
      lt = make_lifetime();
      continue;
    }
    if (lt.consumed >= cfg_.lifetime) score_and_reset(lt, m);
  }
  if (contributed > 0) {
    double inv = 1.0 / contributed;
    for (Tensor& g : grad_accum)
      for (double& x : g.data) x *= inv;
    outer_update(eta_, grad_accum, adam_);
    m.mean_outer_loss *= inv;
    m.mean_validation_return *= inv;
    m.mean_abs_pi_hat *= inv;
  }
  if (m.lifetimes_scored > 0) m.mean_score /= m.lifetimes_scored;
  m.buffer_size = curator_.size();
  m.skipped = skipped_;
  ++batch_;
  metrics_.push_back(m);
  append_metrics_line(m);
  if (cfg_.checkpoint_interval > 0 && !cfg_.out_dir.empty() &&
      batch_ % cfg_.checkpoint_interval == 0)
    save_checkpoint(cfg_.out_dir + "/checkpoint.bin");
  return m;
}

void Trainer::run() {
  while (batch_ < cfg_.meta_updates) run_batch();
}

void Trainer::append_metrics_line(const BatchMetrics& m) const {
  if (cfg_.out_dir.empty()) return;
  std::ofstream os(cfg_.out_dir + "/metrics.ndjson", std::ios::app);
  MG_CHECK(os.good(), "cannot open metrics file in " + cfg_.out_dir);
  os << m.to_json() << "\n";
}

uint64_t checksum_tensors(const std::vector<const Tensor*>& ts) {
  uint64_t h = kFnvOffset;
  for (const Tensor* t : ts) {
    for (int e : t->shape) h = fnv64(h, &e, sizeof e);
    if (!t->data.empty()) h = fnv64(h, t->data.data(), t->data.size() * sizeof(double));
  }
  return h;
}

uint64_t Trainer::eta_checksum() const { return checksum_tensors(eta_.param_list()); }

uint64_t Trainer::config_hash() const {
  std::ostringstream os;
  os << cfg_.num_lifetimes << ' ' << cfg_.envs_per_lifetime << ' ' << cfg_.steps_per_update << ' '
     << cfg_.k_updates << ' ' << cfg_.meta_updates << ' ' << cfg_.lifetime << ' '
     << score_kind_name(cfg_.score_kind) << ' ' << antagonist_name(cfg_.antagonist) << ' '
     << cfg_.score_eval_episodes << ' ' << cfg_.seed << ' ';
  os << ocfg_.n << ' ' << ocfg_.embed << ' ' << ocfg_.hidden << ' ' << ocfg_.gamma << ' '
     << ocfg_.alpha_y << ' ' << ocfg_.inner_lr << ' ' << ocfg_.b_pi_ent << ' ' << ocfg_.b_y_ent
     << ' ' << ocfg_.b_pi_l2 << ' ' << ocfg_.b_y_l2 << ' ' << ocfg_.outer_lr << ' '
     << ocfg_.outer_clip << ' ';
  const CuratorConfig& cc = curator_.config();
  os << cc.capacity << ' ' << cc.p_replay << ' ' << cc.temperature << ' ' << cc.rho << ' ';
  os << static_pool_.size();
  uint64_t h = fnv64_str(kFnvOffset, os.str());
  for (const Level& lv : static_pool_) {
    uint64_t ch = lv.content_hash();
    h = fnv64(h, &ch, sizeof ch);
  }
  return h;
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  MG_CHECK(os.good(), "cannot open checkpoint for writing: " + path);
  write_u64(os, kCheckpointMagic);
  write_u64(os, config_hash());
  write_i64(os, batch_);
  write_u64(os, next_lifetime_id_);
  write_i64(os, skipped_);
  write_i64(os, total_interactions_);
  write_rng(os, curator_rng_);

  auto eta_params = eta_.param_list();
  write_u64(os, eta_params.size());
  for (const Tensor* t : eta_params) write_tensor(os, *t);

  write_i64(os, adam_.step);
  write_u64(os, adam_.m.size());
  for (const Tensor& t : adam_.m) write_tensor(os, t);
  write_u64(os, adam_.v.size());
  for (const Tensor& t : adam_.v) write_tensor(os, t);

  write_u64(os, lifetimes_.size());
  for (const Lifetime& lt : lifetimes_) {
    write_string(os, lt.level.serialize());
    write_tensor(os, lt.theta.policy_logits);
    write_tensor(os, lt.theta.boot_logits);
    write_i64(os, lt.consumed);
    write_u64(os, lt.replayed ? 1 : 0);
    write_u64(os, lt.id);
    write_u64(os, lt.states.size());
    for (const EnvState& s : lt.states) {
      write_i64(os, s.row);
      write_i64(os, s.col);
      write_u64(os, s.present);
      write_i64(os, s.steps);
      write_u64(os, s.done ? 1 : 0);
    }
    write_u64(os, lt.env_rngs.size());
    for (const Rng& r : lt.env_rngs) write_rng(os, r);
  }

  write_string(os, curator_.serialize());
  write_u64(os, kCheckpointMagic);
  os.flush();
  MG_CHECK(os.good(), "checkpoint write failed: " + path);
}

Trainer Trainer::load_checkpoint(const std::string& path, TrainRunConfig cfg, OptimizerConfig ocfg,
                                 CuratorConfig ccfg, LevelDistribution dist,
                                 std::vector<Level> static_pool) {
  std::ifstream is(path, std::ios::binary);
  MG_CHECK(is.good(), "cannot open checkpoint: " + path);

  // Build a shell trainer, then overwrite every piece of mutable state.
  Trainer tr(cfg, ocfg, ccfg, dist, std::move(static_pool));

  MG_CHECK(read_u64(is) == kCheckpointMagic, "not a checkpoint file: " + path);
  MG_CHECK(read_u64(is) == tr.config_hash(),
           "checkpoint was written with a different configuration");
  tr.batch_ = read_i64(is);
  tr.next_lifetime_id_ = read_u64(is);
  tr.skipped_ = read_i64(is);
  tr.total_interactions_ = read_i64(is);
  tr.curator_rng_ = read_rng(is);

  auto eta_params = tr.eta_.param_list();
  MG_CHECK(read_u64(is) == eta_params.size(), "checkpoint rule parameter count mismatch");
  for (Tensor* t : eta_params) {
    Tensor loaded = read_tensor(is);
    MG_CHECK(loaded.shape == t->shape, "checkpoint rule parameter shape mismatch");
    *t = loaded;
  }

  tr.adam_.step = read_i64(is);
  tr.adam_.m.resize(read_u64(is));
  for (Tensor& t : tr.adam_.m) t = read_tensor(is);
  tr.adam_.v.resize(read_u64(is));
  for (Tensor& t : tr.adam_.v) t = read_tensor(is);

  size_t num_lifetimes = read_u64(is);
  MG_CHECK(num_lifetimes == static_cast<size_t>(cfg.num_lifetimes),
           "checkpoint lifetime count mismatch");
  tr.lifetimes_.clear();
  for (size_t i = 0; i < num_lifetimes; ++i) {
    Lifetime lt;
    lt.level = Level::parse(read_string(is));
    lt.theta.mode = AgentParams::Mode::Tabular;
    lt.theta.num_states = lt.level.num_states();
    lt.theta.n = ocfg.n;
    lt.theta.policy_logits = read_tensor(is);
    lt.theta.boot_logits = read_tensor(is);
    lt.consumed = read_i64(is);
    lt.replayed = read_u64(is) != 0;
    lt.id = read_u64(is);
    lt.states.resize(read_u64(is));
    for (EnvState& s : lt.states) {
      s.row = static_cast<int>(read_i64(is));
      s.col = static_cast<int>(read_i64(is));
      s.present = static_cast<uint32_t>(read_u64(is));
      s.steps = static_cast<int>(read_i64(is));
      s.done = read_u64(is) != 0;
    }
    lt.env_rngs.resize(read_u64(is));
    for (Rng& r : lt.env_rngs) r = read_rng(is);
    tr.lifetimes_.push_back(std::move(lt));
  }

  tr.curator_ = Curator::parse(read_string(is));
  MG_CHECK(read_u64(is) == kCheckpointMagic, "checkpoint trailer missing (truncated file)");
  return tr;
}

}  // namespace metagrid
