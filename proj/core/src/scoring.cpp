#include "metagrid/scoring.hpp"

#include <cmath>

#include "metagrid/solver.hpp"

namespace metagrid {

const char* score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::AR: return "ar";
    case ScoreKind::OptimalRegret: return "optimal_regret";
    case ScoreKind::L1ValueLoss: return "l1_value_loss";
    case ScoreKind::PositiveValueLoss: return "positive_value_loss";
    case ScoreKind::Uniform: return "uniform";
  }
  return "?";
}

ScoreKind score_kind_from_name(const std::string& name) {
  if (name == "ar") return ScoreKind::AR;
  if (name == "optimal_regret") return ScoreKind::OptimalRegret;
  if (name == "l1_value_loss") return ScoreKind::L1ValueLoss;
  if (name == "positive_value_loss") return ScoreKind::PositiveValueLoss;
  if (name == "uniform") return ScoreKind::Uniform;
  throw Error("unknown score kind '" + name + "'");
}

std::vector<double> gae(const TransitionBatch& batch, const std::vector<double>& values,
                        double gamma, double lambda) {
  MG_CHECK(lambda >= 0 && lambda <= 1, "gae: lambda out of range");
  std::vector<double> adv(batch.size());
  for (int e = 0; e < batch.num_envs; ++e) {
    double acc = 0;
    for (int t = batch.num_steps - 1; t >= 0; --t) {
      size_t i = batch.at(e, t);
      MG_CHECK(batch.state[i] >= 0 && batch.state[i] < static_cast<int>(values.size()) &&
                   batch.next_state[i] >= 0 && batch.next_state[i] < static_cast<int>(values.size()),
               "gae: state outside the value table");
      double cont = batch.done[i] ? 0.0 : 1.0;
      double delta = batch.reward[i] + gamma * cont * values[batch.next_state[i]] -
                     values[batch.state[i]];
      acc = delta + gamma * lambda * cont * acc;
      adv[i] = acc;
    }
  }
  return adv;
}

std::vector<double> fit_critic(const std::vector<int>& states, const std::vector<double>& targets,
                               int num_states, int steps, double lr) {
  MG_CHECK(states.size() == targets.size() && !states.empty(), "fit_critic: misaligned inputs");
  std::vector<double> v(num_states, 0.0);
  std::vector<double> grad(num_states);
  double inv_b = 1.0 / states.size();
  for (int it = 0; it < steps; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (size_t i = 0; i < states.size(); ++i)
      grad[states[i]] += 2.0 * (v[states[i]] - targets[i]) * inv_b;
    for (int s = 0; s < num_states; ++s) v[s] -= lr * grad[s];
  }
  return v;
}

namespace {

// One full episode as a single-env batch so the shared gae() applies.
struct EpisodeSet {
  std::vector<TransitionBatch> episodes;
  std::vector<double> returns;  // undiscounted per episode
};

EpisodeSet collect_episodes(const Level& lv, const PolicyFn& policy, int episodes, Rng& rng) {
  EpisodeSet out;
  std::vector<int> one_state(1);
  std::vector<double> probs;
  for (int ep = 0; ep < episodes; ++ep) {
    Rng er = rng.split(ep + 1);
    EnvState s = env_reset(lv);
    TransitionBatch b;
    b.num_envs = 1;
    double ret = 0;
    while (!s.done) {
      one_state[0] = state_index(lv, s);
      policy(one_state, probs);
      int a = er.categorical(probs);
      b.state.push_back(one_state[0]);
      b.action.push_back(a);
      b.action_prob.push_back(probs[a]);
      StepResult r = env_step(lv, s, a, er);
      b.next_state.push_back(state_index(lv, s));
      b.reward.push_back(r.reward);
      b.done.push_back(r.done ? 1 : 0);
      ret += r.reward;
    }
    b.num_steps = static_cast<int>(b.state.size());
    out.episodes.push_back(std::move(b));
    out.returns.push_back(ret);
  }
  return out;
}

}  // namespace

LevelScore score_level(const ScoreContext& ctx, const Level& lv, const AgentParams& theta,
                       Rng& rng) {
  LevelScore out;
  out.kind = ctx.kind;
  if (ctx.kind == ScoreKind::Uniform) {
    out.value = 1.0;
    return out;
  }

  Rng eval_rng = rng.split(1);
  EpisodeSet eps = collect_episodes(lv, theta.policy_fn(), ctx.eval_episodes, eval_rng);
  int n = static_cast<int>(eps.returns.size());
  double mean = 0;
  for (double r : eps.returns) mean += r;
  mean /= n;
  double var = 0;
  for (double r : eps.returns) var += (r - mean) * (r - mean);
  out.protagonist_return = mean;
  out.noise_sigma = n > 1 ? std::sqrt(var / (n - 1) / n) : 0;

  switch (ctx.kind) {
    case ScoreKind::AR: {
      MG_CHECK(ctx.cache, "score_level: AR needs an antagonist cache");
      out.reference_return =
          ctx.cache->value(ctx.antagonist, lv, lv.lifetime, ctx.antagonist_seed);
      out.has_reference = true;
      out.value = out.reference_return - out.protagonist_return;
      break;
    }
    case ScoreKind::OptimalRegret: {
      out.reference_return = solve_optimal(lv, 1.0, ctx.solver_budget).start_value;
      out.has_reference = true;
      out.value = out.reference_return - out.protagonist_return;
      break;
    }
    case ScoreKind::L1ValueLoss:
    case ScoreKind::PositiveValueLoss: {
      // discounted return-to-go targets for the critic regression
      std::vector<int> all_states;
      std::vector<double> all_targets;
      for (const TransitionBatch& b : eps.episodes) {
        double g = 0;
        std::vector<double> rtg(b.size());
        for (int t = b.num_steps - 1; t >= 0; --t) {
          g = b.reward[t] + ctx.gamma * g;
          rtg[t] = g;
        }
        all_states.insert(all_states.end(), b.state.begin(), b.state.end());
        all_targets.insert(all_targets.end(), rtg.begin(), rtg.end());
      }
      std::vector<double> critic =
          fit_critic(all_states, all_targets, lv.num_states(), ctx.critic_steps, ctx.critic_lr);
      bool positive = ctx.kind == ScoreKind::PositiveValueLoss;
      double total = 0;
      for (const TransitionBatch& b : eps.episodes) {
        std::vector<double> adv = gae(b, critic, ctx.gamma, ctx.lambda);
        double ep_mean = 0;
        for (double a : adv) ep_mean += positive ? std::max(a, 0.0) : std::abs(a);
        total += ep_mean / adv.size();
      }
      out.value = total / eps.episodes.size();
      break;
    }
    default:
      break;
  }
  return out;
}

}  // namespace metagrid
