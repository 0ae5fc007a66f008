#include <benchmark/benchmark.h>

#include "metagrid/solver.hpp"
#include "metagrid/update_rule.hpp"

using namespace metagrid;

namespace {

Level bench_level() {
  LevelDistribution dist;
  dist.grid_sizes = {9};
  dist.max_objects = 3;
  dist.horizon_choices = {50};
  Rng rng(1);
  return sample_level(rng, dist);
}

void BM_Rollout(benchmark::State& state) {
  Level lv = bench_level();
  Rng rng(2);
  AgentParams theta = init_agent(lv.num_states(), 16, rng, AgentParams::Mode::Tabular);
  PolicyFn policy = theta.policy_fn();
  std::vector<EnvState> states(64, env_reset(lv));
  std::vector<Rng> env_rngs;
  for (int e = 0; e < 64; ++e) env_rngs.push_back(rng.split(e));
  for (auto _ : state) {
    TransitionBatch b = rollout(lv, policy, 64, 20, states, env_rngs);
    benchmark::DoNotOptimize(b.reward.data());
  }
  state.SetItemsProcessed(state.iterations() * 64 * 20);
}

void BM_LstmReverseScan(benchmark::State& state) {
  int E = 64, T = 20, embed = 16, hidden = 32;
  Rng rng(3);
  LstmCellParams cell = LstmCellParams::init(embed, hidden, rng);
  Tensor x = Tensor::randn({E, embed}, rng, 1.0);
  std::vector<std::vector<double>> done(T, std::vector<double>(E, 0.0));
  for (auto _ : state) {
    Tape tape;
    LstmCellVars vars = lstm_on_tape(tape, cell, true);
    std::vector<Var> inputs(T, tape.constant(x));
    std::vector<Var> hs = lstm_scan_reverse(tape, vars, inputs, done);
    Var loss = tape.mean(hs[0]);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(vars.wx).data.data());
  }
  state.SetItemsProcessed(state.iterations() * E * T);
}

void BM_SolveOptimal(benchmark::State& state) {
  Level lv = bench_level();
  for (auto _ : state) {
    SolveResult r = solve_optimal(lv, 1.0);
    benchmark::DoNotOptimize(r.start_value);
  }
}

void BM_MetaGradient(benchmark::State& state) {
  Level lv = bench_level();
  OptimizerConfig cfg;
  Rng rng(4);
  OptimizerParams eta = init_optimizer(cfg, rng);
  for (auto _ : state) {
    AgentParams theta = init_agent(lv.num_states(), cfg.n, rng, AgentParams::Mode::Tabular);
    std::vector<EnvState> states(8, env_reset(lv));
    std::vector<Rng> env_rngs;
    for (int e = 0; e < 8; ++e) env_rngs.push_back(rng.split(e));
    std::vector<Tensor> grads;
    MetaGradStats s = meta_gradient(eta, lv, theta, states, env_rngs, 5, 8, 20, grads);
    benchmark::DoNotOptimize(s.outer_loss);
  }
  state.SetItemsProcessed(state.iterations() * 6 * 8 * 20);
}

}  // namespace

BENCHMARK(BM_Rollout);
BENCHMARK(BM_LstmReverseScan);
BENCHMARK(BM_SolveOptimal);
BENCHMARK(BM_MetaGradient);
BENCHMARK_MAIN();
