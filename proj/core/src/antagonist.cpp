#include "metagrid/antagonist.hpp"

#include <algorithm>
#include <cmath>

#include "metagrid/optstep.hpp"
#include "metagrid/tape.hpp"

namespace metagrid {

const char* antagonist_name(AntagonistKind k) {
  switch (k) {
    case AntagonistKind::A2C: return "a2c";
    case AntagonistKind::PPO: return "ppo";
    case AntagonistKind::Random: return "random";
    case AntagonistKind::Expert: return "expert";
  }
  return "?";
}

AntagonistKind antagonist_from_name(const std::string& name) {
  if (name == "a2c") return AntagonistKind::A2C;
  if (name == "ppo") return AntagonistKind::PPO;
  if (name == "random") return AntagonistKind::Random;
  if (name == "expert") return AntagonistKind::Expert;
  throw Error("unknown antagonist kind '" + name + "'");
}

PolicyFn ActorCriticParams::policy_fn() const {
  Tensor logits = policy_logits;
  int A = num_actions;
  return [logits, A](const std::vector<int>& states, std::vector<double>& probs) {
    probs.resize(states.size() * A);
    for (size_t i = 0; i < states.size(); ++i) {
      double* row = &probs[i * A];
      double mx = logits.at(states[i], 0);
      for (int j = 1; j < A; ++j) mx = std::max(mx, logits.at(states[i], j));
      double z = 0;
      for (int j = 0; j < A; ++j) z += (row[j] = std::exp(logits.at(states[i], j) - mx));
      for (int j = 0; j < A; ++j) row[j] /= z;
    }
  };
}

namespace {

PolicyFn uniform_policy() {
  return [](const std::vector<int>& states, std::vector<double>& probs) {
    probs.assign(states.size() * kNumActions, 1.0 / kNumActions);
  };
}

// n-step returns within the window, reset at dones, value bootstrap at the
// window edge.
std::vector<double> nstep_returns(const TransitionBatch& b, const Tensor& values, double gamma) {
  std::vector<double> ret(b.size());
  for (int e = 0; e < b.num_envs; ++e) {
    double acc = 0;
    for (int t = b.num_steps - 1; t >= 0; --t) {
      size_t i = b.at(e, t);
      if (b.done[i])
        acc = b.reward[i];
      else if (t == b.num_steps - 1)
        acc = b.reward[i] + gamma * values[b.next_state[i]];
      else
        acc = b.reward[i] + gamma * acc;
      ret[i] = acc;
    }
  }
  return ret;
}

struct AcVars {
  Var logits, values;
};

Var ac_common_terms(Tape& tape, const AcVars& v, const TransitionBatch& b,
                    const std::vector<double>& returns, const AntagonistConfig& cfg) {
  int B = static_cast<int>(b.size());
  Tensor ret{B};
  ret.data = returns;
  Var vs = tape.take_cols(tape.gather_rows(v.values, b.state), std::vector<int>(B, 0));
  Var value_loss = tape.scale(tape.mean(tape.square(tape.sub(vs, tape.constant(ret)))),
                              0.5 * cfg.value_coef);
  Var probs = tape.softmax_rows(tape.gather_rows(v.logits, b.state));
  Var ent = tape.scale(tape.mean(tape.entropy_rows(probs)), cfg.entropy_coef);
  return tape.sub(value_loss, ent);
}

void a2c_update(ActorCriticParams& p, AdamState& opt, const TransitionBatch& b,
                const AntagonistConfig& cfg) {
  int B = static_cast<int>(b.size());
  std::vector<double> returns = nstep_returns(b, p.values, cfg.gamma);
  Tensor adv{B};
  for (int i = 0; i < B; ++i) adv[i] = returns[i] - p.values[b.state[i]];

  Tape tape;
  AcVars v{tape.leaf(p.policy_logits), tape.leaf(p.values)};
  Var logp = tape.take_cols(tape.log_softmax_rows(tape.gather_rows(v.logits, b.state)), b.action);
  Var pg = tape.mean(tape.mul(logp, tape.constant(adv)));
  Var loss = tape.add(tape.scale(pg, -1.0), ac_common_terms(tape, v, b, returns, cfg));
  tape.backward(loss);
  AdamConfig acfg;
  acfg.lr = cfg.lr;
  adam_step({&p.policy_logits, &p.values}, {&tape.grad(v.logits), &tape.grad(v.values)}, opt, acfg);
}

void ppo_update(ActorCriticParams& p, AdamState& opt, const TransitionBatch& b,
                const AntagonistConfig& cfg) {
  int B = static_cast<int>(b.size());
  std::vector<double> returns = nstep_returns(b, p.values, cfg.gamma);
  std::vector<double> adv(B);
  for (int i = 0; i < B; ++i) adv[i] = returns[i] - p.values[b.state[i]];

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    // Gradient of the clipped surrogate: zero wherever the clip is active and
    // binding; elsewhere it is the plain ratio-weighted policy gradient. The
    // mask is data at the current parameters, so a taped linear surrogate
    // with that mask has the exact same gradient.
    std::vector<double> probs;
    p.policy_fn()(b.state, probs);
    Tensor coeff{B};
    for (int i = 0; i < B; ++i) {
      double ratio = probs[static_cast<size_t>(i) * p.num_actions + b.action[i]] /
                     std::max(b.action_prob[i], 1e-12);
      bool clipped = (ratio > 1.0 + cfg.ppo_clip && adv[i] > 0) ||
                     (ratio < 1.0 - cfg.ppo_clip && adv[i] < 0);
      coeff[i] = clipped ? 0.0 : adv[i] / std::max(b.action_prob[i], 1e-12);
    }

    Tape tape;
    AcVars v{tape.leaf(p.policy_logits), tape.leaf(p.values)};
    Var pi = tape.take_cols(
        tape.exp(tape.log_softmax_rows(tape.gather_rows(v.logits, b.state))), b.action);
    Var pg = tape.mean(tape.mul(pi, tape.constant(coeff)));
    Var loss = tape.add(tape.scale(pg, -1.0), ac_common_terms(tape, v, b, returns, cfg));
    tape.backward(loss);
    AdamConfig acfg;
    acfg.lr = cfg.lr;
    adam_step({&p.policy_logits, &p.values}, {&tape.grad(v.logits), &tape.grad(v.values)}, opt,
              acfg);
  }
}

double expert_value(const Level& lv, int episodes, Rng& rng) {
  SolveResult sol = solve_optimal(lv, 1.0, 100000000L, true);
  double total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng er = rng.split(ep + 1);
    EnvState s = env_reset(lv);
    double ret = 0;
    while (!s.done) ret += env_step(lv, s, sol.act(s), er).reward;
    total += ret;
  }
  return total / episodes;
}

}  // namespace

AntagonistResult train_antagonist(AntagonistKind kind, const Level& lv, long budget, Rng& rng,
                                  const AntagonistConfig& cfg) {
  AntagonistResult out;
  Rng eval_rng = rng.split(1);

  if (kind == AntagonistKind::Random) {
    out.value = evaluate_policy(lv, uniform_policy(), cfg.eval_episodes, eval_rng, 1.0);
    return out;
  }
  if (kind == AntagonistKind::Expert) {
    out.value = expert_value(lv, cfg.eval_episodes, eval_rng);
    return out;
  }

  MG_CHECK(budget >= 1, "train_antagonist: budget must be >= 1");
  MG_CHECK(budget <= cfg.budget_cap, "train_antagonist: budget exceeds the configured cap");

  ActorCriticParams p;
  p.num_states = lv.num_states();
  p.policy_logits = Tensor{p.num_states, p.num_actions};
  p.values = Tensor{p.num_states, 1};
  AdamState opt;

  Rng train_rng = rng.split(2);
  std::vector<EnvState> states(cfg.num_envs, env_reset(lv));
  std::vector<Rng> env_rngs;
  for (int e = 0; e < cfg.num_envs; ++e) env_rngs.push_back(train_rng.split(e + 1));

  long remaining = budget;
  while (remaining > 0) {
    int e = cfg.num_envs;
    int st = cfg.num_steps;
    if (remaining < static_cast<long>(e) * st) {
      st = static_cast<int>(remaining / e);
      if (st == 0) {
        e = static_cast<int>(remaining);
        st = 1;
      }
    }
    TransitionBatch batch;
    if (e == cfg.num_envs) {
      batch = rollout(lv, p.policy_fn(), e, st, states, env_rngs);
    } else {
      std::vector<EnvState> sub(states.begin(), states.begin() + e);
      std::vector<Rng> rsub(env_rngs.begin(), env_rngs.begin() + e);
      batch = rollout(lv, p.policy_fn(), e, st, sub, rsub);
      std::copy(sub.begin(), sub.end(), states.begin());
      std::copy(rsub.begin(), rsub.end(), env_rngs.begin());
    }
    if (kind == AntagonistKind::A2C)
      a2c_update(p, opt, batch, cfg);
    else
      ppo_update(p, opt, batch, cfg);
    remaining -= static_cast<long>(e) * st;
    out.interactions += static_cast<long>(e) * st;
  }

  out.value = evaluate_policy(lv, p.policy_fn(), cfg.eval_episodes, eval_rng, 1.0);
  out.params = std::move(p);
  return out;
}

double AntagonistCache::value(AntagonistKind kind, const Level& lv, long budget, uint64_t seed) {
  auto key = std::make_tuple(static_cast<int>(kind), lv.content_hash(), budget, seed);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    hits_++;
    return it->second;
  }
  misses_++;
  Rng rng = Rng(seed).split(lv.content_hash() ^ static_cast<uint64_t>(kind))
                .split(static_cast<uint64_t>(budget) + 1);
  double v = train_antagonist(kind, lv, budget, rng, cfg_).value;
  cache_[key] = v;
  return v;
}

}  // namespace metagrid
