#include "metagrid/curator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace metagrid {

Curator::Curator(CuratorConfig cfg, LevelDistribution dist)
    : cfg_(cfg), dist_(std::move(dist)) {
  MG_CHECK(cfg_.capacity >= 1, "curator: capacity must be >= 1");
  MG_CHECK(cfg_.p_replay >= 0 && cfg_.p_replay <= 1, "curator: p_replay out of range");
  MG_CHECK(cfg_.temperature > 0, "curator: temperature must be positive");
  MG_CHECK(cfg_.rho >= 0 && cfg_.rho <= 1, "curator: rho out of range");
}

std::vector<double> Curator::replay_weights(long current_batch) const {
  size_t n = entries_.size();
  std::vector<double> w(n, 0.0);
  if (n == 0) return w;

  // rank prioritization: weight (1/rank)^(1/temperature), rank 1 = top score
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return entries_[a].score > entries_[b].score; });
  std::vector<double> rank_w(n);
  double rank_sum = 0;
  for (size_t r = 0; r < n; ++r)
    rank_sum += (rank_w[order[r]] = std::pow(1.0 / (r + 1), 1.0 / cfg_.temperature));

  std::vector<double> stale_w(n);
  double stale_sum = 0;
  for (size_t i = 0; i < n; ++i)
    stale_sum += (stale_w[i] = static_cast<double>(std::max(0L, current_batch - entries_[i].last_visit)));

  for (size_t i = 0; i < n; ++i) {
    double stale = stale_sum > 0 ? stale_w[i] / stale_sum : 1.0 / n;
    w[i] = (1.0 - cfg_.rho) * rank_w[i] / rank_sum + cfg_.rho * stale;
  }
  return w;
}

Curator::Draw Curator::next_level(Rng& rng) {
  Draw d;
  if (!entries_.empty() && rng.bernoulli(cfg_.p_replay)) {
    std::vector<double> w = replay_weights(latest_batch_);
    size_t i = static_cast<size_t>(rng.categorical(w));
    d.level = entries_[i].level;
    d.replayed = true;
    return d;
  }
  d.level = sample_level(rng, dist_);
  return d;
}

void Curator::report_score(const Level& lv, double score, long batch_index) {
  MG_CHECK(std::isfinite(score), "curator: score must be finite");
  latest_batch_ = std::max(latest_batch_, batch_index);
  uint64_t h = lv.content_hash();
  auto it = index_.find(h);
  if (it != index_.end()) {
    BufferEntry& e = entries_[it->second];
    e.score = score;
    e.last_visit = batch_index;
    e.visits++;
    return;
  }
  BufferEntry e;
  e.level = lv;
  e.score = score;
  e.last_visit = batch_index;
  e.visits = 1;
  if (entries_.size() < cfg_.capacity) {
    index_[h] = entries_.size();
    entries_.push_back(std::move(e));
    return;
  }
  size_t worst = 0;
  for (size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].score < entries_[worst].score) worst = i;
  if (score <= entries_[worst].score) return;  // dropped
  index_.erase(entries_[worst].level.content_hash());
  entries_[worst] = std::move(e);
  index_[h] = worst;
}

void Curator::reindex() {
  index_.clear();
  for (size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].level.content_hash()] = i;
}

namespace {
std::string fmt_doubles(const std::vector<double>& v) {
  std::string out = std::to_string(v.size());
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), " %.17g", x);
    out += buf;
  }
  return out;
}
std::vector<double> read_doubles(std::istringstream& is) {
  size_t n;
  MG_CHECK(static_cast<bool>(is >> n), "curator parse: bad list length");
  std::vector<double> v(n);
  for (double& x : v) MG_CHECK(static_cast<bool>(is >> x), "curator parse: bad list entry");
  return v;
}
}  // namespace

std::string Curator::serialize() const {
  std::ostringstream os;
  char buf[128];
  os << "curator v1\n";
  std::snprintf(buf, sizeof(buf), "config %zu %.17g %.17g %.17g\n", cfg_.capacity, cfg_.p_replay,
                cfg_.temperature, cfg_.rho);
  os << buf << "latest " << latest_batch_ << "\n";
  os << "sizes " << dist_.grid_sizes.size();
  for (int s : dist_.grid_sizes) os << " " << s;
  std::snprintf(buf, sizeof(buf), "\nwalls %.17g\n", dist_.wall_density_max);
  os << buf;
  os << "objects " << dist_.min_objects << " " << dist_.max_objects << " "
     << (dist_.unit_rewards ? 1 : 0) << "\n";
  os << "eps_term " << fmt_doubles(dist_.eps_term_choices) << "\n";
  os << "eps_respawn " << fmt_doubles(dist_.eps_respawn_choices) << "\n";
  os << "horizons " << dist_.horizon_choices.size();
  for (int h : dist_.horizon_choices) os << " " << h;
  os << "\nlifetime " << dist_.lifetime << "\n";
  os << "entries " << entries_.size() << "\n";
  for (const BufferEntry& e : entries_) {
    std::snprintf(buf, sizeof(buf), "entry %.17g %ld %ld\n", e.score, e.last_visit, e.visits);
    os << buf << e.level.serialize();
  }
  os << "end\n";
  return os.str();
}

Curator Curator::parse(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  auto expect = [&](const char* want) {
    MG_CHECK(static_cast<bool>(is >> tok) && tok == want,
             std::string("curator parse: expected '") + want + "'");
  };
  expect("curator");
  expect("v1");
  expect("config");
  CuratorConfig cfg;
  MG_CHECK(static_cast<bool>(is >> cfg.capacity >> cfg.p_replay >> cfg.temperature >> cfg.rho),
           "curator parse: bad config");
  expect("latest");
  long latest;
  MG_CHECK(static_cast<bool>(is >> latest), "curator parse: bad latest batch");
  LevelDistribution dist;
  expect("sizes");
  size_t n;
  MG_CHECK(static_cast<bool>(is >> n), "curator parse: bad sizes");
  dist.grid_sizes.assign(n, 0);
  for (int& s : dist.grid_sizes) MG_CHECK(static_cast<bool>(is >> s), "curator parse: bad size");
  expect("walls");
  MG_CHECK(static_cast<bool>(is >> dist.wall_density_max), "curator parse: bad wall density");
  expect("objects");
  int unit;
  MG_CHECK(static_cast<bool>(is >> dist.min_objects >> dist.max_objects >> unit),
           "curator parse: bad objects");
  dist.unit_rewards = unit != 0;
  expect("eps_term");
  dist.eps_term_choices = read_doubles(is);
  expect("eps_respawn");
  dist.eps_respawn_choices = read_doubles(is);
  expect("horizons");
  MG_CHECK(static_cast<bool>(is >> n), "curator parse: bad horizons");
  dist.horizon_choices.assign(n, 0);
  for (int& h : dist.horizon_choices)
    MG_CHECK(static_cast<bool>(is >> h), "curator parse: bad horizon");
  expect("lifetime");
  MG_CHECK(static_cast<bool>(is >> dist.lifetime), "curator parse: bad lifetime");

  Curator c(cfg, dist);
  c.latest_batch_ = latest;
  expect("entries");
  MG_CHECK(static_cast<bool>(is >> n), "curator parse: bad entry count");
  is.ignore();  // trailing newline before level documents
  for (size_t i = 0; i < n; ++i) {
    expect("entry");
    BufferEntry e;
    MG_CHECK(static_cast<bool>(is >> e.score >> e.last_visit >> e.visits),
             "curator parse: bad entry header");
    is.ignore();
    std::string doc, line;
    while (std::getline(is, line)) {
      doc += line;
      doc += '\n';
      if (line == "end") break;
    }
    e.level = Level::parse(doc);
    c.entries_.push_back(std::move(e));
  }
  expect("end");
  c.reindex();
  MG_CHECK(c.entries_.size() <= cfg.capacity, "curator parse: entries exceed capacity");
  return c;
}

}  // namespace metagrid
