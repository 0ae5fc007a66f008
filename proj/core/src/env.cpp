#include "metagrid/env.hpp"

#include <cmath>

namespace metagrid {

EnvState env_reset(const Level& lv) {
  EnvState s;
  s.row = lv.start_row;
  s.col = lv.start_col;
  s.present = (1u << lv.num_objects()) - 1u;
  s.steps = 0;
  s.done = false;
  return s;
}

StepResult env_step(const Level& lv, EnvState& s, int action, Rng& rng) {
  MG_CHECK(!s.done, "env_step: stepping a done state");
  MG_CHECK(action >= 0 && action < kNumActions, "env_step: bad action");
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  int nr = s.row + dr[action], nc = s.col + dc[action];
  if (nr >= 0 && nr < lv.rows && nc >= 0 && nc < lv.cols && !lv.wall_at(nr, nc)) {
    s.row = nr;
    s.col = nc;
  }
  StepResult out;
  int oi = lv.object_at(s.row, s.col);
  bool terminated = false;
  if (oi >= 0 && (s.present >> oi) & 1u) {
    const ObjectSpec& o = lv.objects[oi];
    out.reward = o.reward;
    s.present &= ~(1u << oi);
    if (o.eps_term > 0 && (o.eps_term >= 1.0 || rng.bernoulli(o.eps_term))) terminated = true;
  }
  s.steps += 1;
  if (terminated || s.steps >= lv.max_episode_steps) {
    s.done = true;
  } else {
    // respawn draws only happen while the episode continues
    for (int i = 0; i < lv.num_objects(); ++i) {
      if ((s.present >> i) & 1u) continue;
      double p = lv.objects[i].eps_respawn;
      if (p > 0 && (p >= 1.0 || rng.bernoulli(p))) s.present |= 1u << i;
    }
  }
  out.done = s.done;
  return out;
}

int state_index(const Level& lv, const EnvState& s) {
  int pos = s.row * lv.cols + s.col;
  return (pos << lv.num_objects()) | static_cast<int>(s.present);
}

EnvState state_from_index(const Level& lv, int index) {
  EnvState s;
  int m = lv.num_objects();
  s.present = static_cast<uint32_t>(index & ((1 << m) - 1));
  int pos = index >> m;
  s.row = pos / lv.cols;
  s.col = pos % lv.cols;
  return s;
}

TransitionBatch rollout(const Level& lv, const PolicyFn& policy, int num_envs, int num_steps,
                        std::vector<EnvState>& states, std::vector<Rng>& env_rngs) {
  MG_CHECK(num_envs >= 1 && num_steps >= 1, "rollout: bad geometry");
  MG_CHECK(static_cast<int>(states.size()) == num_envs &&
               static_cast<int>(env_rngs.size()) == num_envs,
           "rollout: state/rng count mismatch");
  TransitionBatch b;
  b.num_envs = num_envs;
  b.num_steps = num_steps;
  size_t n = static_cast<size_t>(num_envs) * num_steps;
  b.state.resize(n);
  b.next_state.resize(n);
  b.action.resize(n);
  b.reward.resize(n);
  b.done.resize(n);
  b.action_prob.resize(n);

  std::vector<int> cur(num_envs);
  std::vector<double> probs;
  for (int t = 0; t < num_steps; ++t) {
    for (int e = 0; e < num_envs; ++e) cur[e] = state_index(lv, states[e]);
    policy(cur, probs);
    for (int e = 0; e < num_envs; ++e) {
      const double* p = &probs[static_cast<size_t>(e) * kNumActions];
      double u = env_rngs[e].uniform();
      int a = kNumActions - 1;
      double acc = 0;
      for (int j = 0; j < kNumActions; ++j) {
        acc += p[j];
        if (u < acc) {
          a = j;
          break;
        }
      }
      StepResult r = env_step(lv, states[e], a, env_rngs[e]);
      size_t i = b.at(e, t);
      b.state[i] = cur[e];
      b.action[i] = a;
      b.reward[i] = r.reward;
      b.done[i] = r.done ? 1 : 0;
      b.action_prob[i] = p[a];
      b.next_state[i] = state_index(lv, states[e]);
      if (r.done) states[e] = env_reset(lv);
    }
  }
  return b;
}

TransitionBatch rollout_fresh(const Level& lv, const PolicyFn& policy, int num_envs, int num_steps,
                              Rng& rng) {
  std::vector<EnvState> states(num_envs, env_reset(lv));
  std::vector<Rng> rngs;
  for (int e = 0; e < num_envs; ++e) rngs.push_back(rng.split(e + 1));
  return rollout(lv, policy, num_envs, num_steps, states, rngs);
}

double evaluate_policy(const Level& lv, const PolicyFn& policy, int episodes, Rng& rng,
                       double gamma) {
  double total = 0;
  std::vector<int> one(1);
  std::vector<double> probs;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng erng = rng.split(ep + 1);
    EnvState s = env_reset(lv);
    double ret = 0, disc = 1;
    while (!s.done) {
      one[0] = state_index(lv, s);
      policy(one, probs);
      double u = erng.uniform();
      int a = kNumActions - 1;
      double acc = 0;
      for (int j = 0; j < kNumActions; ++j) {
        acc += probs[j];
        if (u < acc) {
          a = j;
          break;
        }
      }
      StepResult r = env_step(lv, s, a, erng);
      ret += disc * r.reward;
      disc *= gamma;
    }
    total += ret;
  }
  return total / episodes;
}

double max_return_bound(const Level& lv) {
  double max_r = 0, max_respawn = 0;
  for (const auto& o : lv.objects) {
    max_r = std::max(max_r, std::abs(o.reward));
    max_respawn = std::max(max_respawn, o.eps_respawn);
  }
  return lv.num_objects() * max_r * (1.0 + lv.max_episode_steps * max_respawn);
}

}  // namespace metagrid
