#include <doctest.h>

#include <map>
#include <set>

#include "metagrid/env.hpp"
#include "metagrid/level.hpp"
#include "metagrid/solver.hpp"
#include "oracles.hpp"

using namespace metagrid;

namespace {
Level empty_level(int size, int tmax = 20) {
  Level lv;
  lv.rows = lv.cols = size;
  lv.walls.assign(static_cast<size_t>(size) * size, 0);
  lv.start_row = lv.start_col = 0;
  lv.max_episode_steps = tmax;
  lv.lifetime = 100;
  return lv;
}

ObjectSpec obj(int r, int c, double reward, double et, double er) {
  ObjectSpec o;
  o.row = r;
  o.col = c;
  o.reward = reward;
  o.eps_term = et;
  o.eps_respawn = er;
  return o;
}

PolicyFn uniform_policy() {
  return [](const std::vector<int>& states, std::vector<double>& probs) {
    probs.assign(states.size() * kNumActions, 0.25);
  };
}
}  // namespace

TEST_CASE("handcrafted levels match their pinned configurations") {
  Level dense = handcrafted("dense");
  CHECK(dense.rows == 11);
  CHECK(dense.cols == 11);
  CHECK(dense.max_episode_steps == 500);
  REQUIRE(dense.objects.size() == 4);
  CHECK(dense.objects[0].reward == 1.0);
  CHECK(dense.objects[0].eps_term == 0.0);
  CHECK(dense.objects[0].eps_respawn == 0.05);
  CHECK(dense.objects[2].reward == -1.0);
  CHECK(dense.objects[2].eps_term == 0.5);
  CHECK(dense.objects[2].eps_respawn == 0.1);
  CHECK(dense.objects[3].eps_respawn == 0.5);

  Level sparse = handcrafted("sparse");
  CHECK(sparse.rows == 13);
  CHECK(sparse.max_episode_steps == 50);
  REQUIRE(sparse.objects.size() == 2);
  CHECK(sparse.objects[0].eps_term == 1.0);
  CHECK(sparse.objects[1].reward == -1.0);

  Level lh = handcrafted("longer_horizon");
  CHECK(lh.rows == 9);
  CHECK(lh.max_episode_steps == 2000);
  REQUIRE(lh.objects.size() == 7);
  int pos = 0, neg = 0;
  for (auto& o : lh.objects) (o.reward > 0 ? pos : neg)++;
  CHECK(pos == 2);
  CHECK(neg == 5);
  CHECK(lh.objects[0].eps_term == 0.1);
  CHECK(lh.objects[6].eps_respawn == 1.0);

  CHECK_THROWS_AS(handcrafted("nope"), Error);
}

TEST_CASE("level serialization round-trips bit-exactly") {
  Rng rng(77);
  LevelDistribution dist;
  dist.unit_rewards = false;
  for (int i = 0; i < 20; ++i) {
    Level lv = sample_level(rng, dist);
    Level back = Level::parse(lv.serialize());
    CHECK(back.serialize() == lv.serialize());
    CHECK(back.content_hash() == lv.content_hash());
  }
}

TEST_CASE("zero wall density gives empty wall mask") {
  Rng rng(5);
  LevelDistribution dist;
  dist.wall_density_max = 0.0;
  Level lv = sample_level(rng, dist);
  for (auto w : lv.walls) CHECK(w == 0);
}

TEST_CASE("sampled grid sizes are uniform within 3 sigma") {
  Rng rng(123);
  LevelDistribution dist;
  std::map<int, int> counts;
  const int N = 10000;
  for (int i = 0; i < N; ++i) counts[sample_level(rng, dist).rows]++;
  double expect = N / 3.0;
  double sigma = std::sqrt(N * (1.0 / 3) * (2.0 / 3));
  for (int s : {9, 11, 13}) CHECK(std::abs(counts[s] - expect) <= 3 * sigma);
}

TEST_CASE("moving into a wall or off-grid is a no-op") {
  Level lv = empty_level(3);
  lv.walls[1] = 1;  // (0,1)
  Rng rng(1);
  EnvState s = env_reset(lv);
  auto r = env_step(lv, s, 0, rng);  // up, off-grid
  CHECK(s.row == 0);
  CHECK(s.col == 0);
  CHECK(r.reward == 0);
  r = env_step(lv, s, 3, rng);  // right, into wall
  CHECK(s.col == 0);
}

TEST_CASE("collecting with eps_term=1 ends the episode") {
  Level lv = empty_level(3);
  lv.objects.push_back(obj(0, 1, 1.0, 1.0, 0.0));
  Rng rng(1);
  EnvState s = env_reset(lv);
  auto r = env_step(lv, s, 3, rng);
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  CHECK_THROWS_AS(env_step(lv, s, 3, rng), Error);
}

TEST_CASE("done is forced at steps == T_max") {
  Level lv = empty_level(3, 5);
  Rng rng(2);
  EnvState s = env_reset(lv);
  for (int t = 0; t < 5; ++t) {
    CHECK(!s.done);
    env_step(lv, s, 1, rng);
  }
  CHECK(s.done);
  CHECK(s.steps == 5);
}

TEST_CASE("greedy shortest-path policy collects at the BFS distance") {
  Level lv = empty_level(5, 10);
  lv.objects.push_back(obj(0, 3, 1.0, 1.0, 0.0));
  CHECK(lv.bfs_distance(0, 3) == 3);
  Rng rng(3);
  EnvState s = env_reset(lv);
  double reward = 0;
  int steps = 0;
  while (!s.done) {
    auto r = env_step(lv, s, 3, rng);  // always right
    reward += r.reward;
    steps++;
  }
  CHECK(steps == 3);
  CHECK(reward == 1.0);
}

TEST_CASE("state index encode/decode is a bijection on reachable states") {
  Rng rng(31);
  LevelDistribution dist;
  dist.grid_sizes = {9};
  dist.max_objects = 3;
  Level lv = sample_level(rng, dist);
  std::set<int> seen;
  for (int pos = 0; pos < lv.num_cells(); ++pos) {
    if (lv.walls[pos]) continue;
    for (uint32_t mask = 0; mask < (1u << lv.num_objects()); ++mask) {
      EnvState s;
      s.row = pos / lv.cols;
      s.col = pos % lv.cols;
      s.present = mask;
      int idx = state_index(lv, s);
      CHECK(idx >= 0);
      CHECK(idx < lv.num_states());
      CHECK(seen.insert(idx).second);
      EnvState back = state_from_index(lv, idx);
      CHECK(back.row == s.row);
      CHECK(back.col == s.col);
      CHECK(back.present == s.present);
    }
  }
}

TEST_CASE("rollout geometry and determinism") {
  Level lv = handcrafted("sparse");
  Rng rng(9);
  auto b1 = rollout_fresh(lv, uniform_policy(), 64, 20, rng);
  CHECK(b1.size() == 64 * 20);
  Rng rng2(9);
  auto b2 = rollout_fresh(lv, uniform_policy(), 64, 20, rng2);
  CHECK(b1.state == b2.state);
  CHECK(b1.action == b2.action);
  CHECK(b1.reward == b2.reward);
  double mean_r = 0;
  for (double r : b1.reward) mean_r += r;
  mean_r /= b1.size();
  CHECK(mean_r >= -1.0);
  CHECK(mean_r <= 1.0);
}

TEST_CASE("episode returns stay within the analytic bound on sampled levels") {
  Rng rng(55);
  LevelDistribution dist;
  dist.horizon_choices = {50};
  for (int i = 0; i < 5; ++i) {
    Level lv = sample_level(rng, dist);
    double bound = max_return_bound(lv);
    Rng er(100 + i);
    std::vector<EnvState> states(4, env_reset(lv));
    std::vector<Rng> rngs = {er.split(1), er.split(2), er.split(3), er.split(4)};
    double ep_ret = 0;
    auto b = rollout(lv, uniform_policy(), 4, 50, states, rngs);
    for (int e = 0; e < 4; ++e) {
      for (int t = 0; t < 50; ++t) {
        size_t idx = b.at(e, t);
        ep_ret += b.reward[idx];
        CHECK(std::isfinite(ep_ret));
        if (b.done[idx]) {
          CHECK(std::abs(ep_ret) <= bound + 1e-9);
          ep_ret = 0;
        }
      }
      ep_ret = 0;
    }
  }
}

// ---------------------------------------------------------------------------
// exact solver
// ---------------------------------------------------------------------------

TEST_CASE("no objects -> optimal value 0") {
  Level lv = empty_level(4, 8);
  CHECK(solve_optimal(lv, 0.99).start_value == 0.0);
}

TEST_CASE("walled-off object -> optimal value 0") {
  Level lv = empty_level(5, 20);
  // box the object at (4,4)
  for (auto [r, c] : std::vector<std::pair<int, int>>{{3, 3}, {3, 4}, {4, 3}})
    lv.walls[static_cast<size_t>(r) * 5 + c] = 1;
  lv.objects.push_back(obj(4, 4, 1.0, 0.0, 0.0));
  CHECK(lv.bfs_distance(4, 4) == -1);
  CHECK(solve_optimal(lv, 0.99).start_value == 0.0);
}

TEST_CASE("single deterministic object: value is gamma^(d-1)") {
  Level lv = empty_level(4, 8);
  lv.objects.push_back(obj(0, 3, 1.0, 1.0, 0.0));
  double v = solve_optimal(lv, 0.99).start_value;
  CHECK(v == doctest::Approx(std::pow(0.99, 2)).epsilon(1e-12));
  CHECK(v == doctest::Approx(oracle::enumerate_optimal(lv, 0.99)).epsilon(1e-12));
}

TEST_CASE("solver equals exhaustive enumeration on random 4x4 levels") {
  Rng rng(2024);
  LevelDistribution dist;
  int tested = 0;
  while (tested < 8) {
    // random 4x4, horizon 6, termination-only stochasticity
    Level lv = empty_level(4, 6);
    double density = rng.uniform(0.0, 0.3);
    for (auto& w : lv.walls) w = rng.bernoulli(density);
    lv.walls[0] = 0;
    int k = 1 + rng.uniform_int(3);
    for (int i = 0; i < k; ++i) {
      int r = rng.uniform_int(4), c = rng.uniform_int(4);
      if ((r == 0 && c == 0) || lv.wall_at(r, c) || lv.object_at(r, c) >= 0) continue;
      double et = std::vector<double>{0.0, 0.1, 0.5, 1.0}[rng.uniform_int(4)];
      lv.objects.push_back(obj(r, c, rng.bernoulli(0.5) ? 1.0 : -1.0, et, 0.0));
    }
    lv.validate();
    double dp = solve_optimal(lv, 0.99).start_value;
    double brute = oracle::enumerate_optimal(lv, 0.99);
    CHECK(dp == doctest::Approx(brute).epsilon(1e-9));
    tested++;
  }
}

TEST_CASE("solver budget is enforced") {
  Level lv = empty_level(13, 2000);
  for (int i = 0; i < 6; ++i) lv.objects.push_back(obj(1 + i, 2, 1.0, 0.0, 0.5));
  CHECK_THROWS_AS(solve_optimal(lv, 0.99, 1000), Error);
}

TEST_CASE("solver dominates Monte Carlo evaluation of a fixed policy") {
  Rng rng(404);
  for (int i = 0; i < 3; ++i) {
    Level lv = empty_level(4, 10);
    lv.objects.push_back(obj(1 + i, 3, 1.0, 0.5, 0.1));
    lv.objects.push_back(obj(3, 1, -1.0, 0.0, 0.0));
    double opt = solve_optimal(lv, 1.0).start_value;
    Rng er(500 + i);
    double mc = evaluate_policy(lv, uniform_policy(), 2000, er, 1.0);
    double bound = max_return_bound(lv);
    double sigma = bound / std::sqrt(2000.0);
    CHECK(opt >= mc - 3 * sigma);
  }
}
