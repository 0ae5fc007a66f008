#include "metagrid/update_rule.hpp"

#include <cmath>

namespace metagrid {

std::vector<Tensor*> OptimizerParams::param_list() {
  return {&we, &be, &lstm.wx, &lstm.wh, &lstm.b, &wp, &bp, &wy, &by};
}

std::vector<const Tensor*> OptimizerParams::param_list() const {
  auto lst = const_cast<OptimizerParams*>(this)->param_list();
  return {lst.begin(), lst.end()};
}

OptimizerParams init_optimizer(const OptimizerConfig& cfg, Rng& rng) {
  OptimizerParams p;
  p.cfg = cfg;
  int d = cfg.input_width();
  p.we = Tensor::randn({d, cfg.embed}, rng, 1.0 / std::sqrt(d));
  p.be = Tensor{cfg.embed};
  p.lstm = LstmCellParams::init(cfg.embed, cfg.hidden, rng);
  p.wp = Tensor::randn({cfg.hidden, 1}, rng, 1.0 / std::sqrt(cfg.hidden));
  p.bp = Tensor{1};
  p.wy = Tensor::randn({cfg.hidden, cfg.n}, rng, 1.0 / std::sqrt(cfg.hidden));
  p.by = Tensor{cfg.n};
  return p;
}

OptimizerVars optimizer_on_tape(Tape& tape, const OptimizerParams& eta, bool requires_grad) {
  OptimizerVars v;
  v.we = tape.leaf(eta.we, requires_grad);
  v.be = tape.leaf(eta.be, requires_grad);
  v.lstm = lstm_on_tape(tape, eta.lstm, requires_grad);
  v.wp = tape.leaf(eta.wp, requires_grad);
  v.bp = tape.leaf(eta.bp, requires_grad);
  v.wy = tape.leaf(eta.wy, requires_grad);
  v.by = tape.leaf(eta.by, requires_grad);
  return v;
}

std::vector<Var> optimizer_var_list(const OptimizerVars& v) {
  return {v.we, v.be, v.lstm.wx, v.lstm.wh, v.lstm.b, v.wp, v.bp, v.wy, v.by};
}

namespace {

// Core of the rule given the assembled per-transition input matrix X
// [B, input_width] (env-major like the batch).
TargetVars targets_from_inputs(Tape& tape, const OptimizerVars& eta, const TransitionBatch& batch,
                               Var x, const OptimizerConfig& cfg) {
  int B = static_cast<int>(batch.size());
  int E = batch.num_envs, T = batch.num_steps;

  Var emb = tape.relu(tape.add_rowvec(tape.matmul(x, eta.we), eta.be));

  std::vector<std::vector<int>> idx(T, std::vector<int>(E));
  std::vector<Var> inputs(T);
  std::vector<std::vector<double>> done(T, std::vector<double>(E));
  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < E; ++e) {
      size_t i = batch.at(e, t);
      idx[t][e] = static_cast<int>(i);
      done[t][e] = batch.done[i] ? 1.0 : 0.0;
    }
    inputs[t] = tape.gather_rows(emb, idx[t]);
  }
  std::vector<Var> hs = lstm_scan_reverse(tape, eta.lstm, inputs, done);

  Var pi_acc = tape.constant(Tensor{B, 1});
  Var y_acc = tape.constant(Tensor{B, cfg.n});
  for (int t = 0; t < T; ++t) {
    Var ph = tape.add_rowvec(tape.matmul(hs[t], eta.wp), eta.bp);
    Var yh = tape.add_rowvec(tape.matmul(hs[t], eta.wy), eta.by);
    pi_acc = tape.scatter_rows_add(pi_acc, idx[t], ph);
    y_acc = tape.scatter_rows_add(y_acc, idx[t], yh);
  }
  TargetVars out;
  out.pi_hat = tape.take_cols(pi_acc, std::vector<int>(B, 0));
  out.y_hat = tape.softmax_rows(y_acc);
  return out;
}

Tensor scalar_inputs(const TransitionBatch& batch, double gamma) {
  int B = static_cast<int>(batch.size());
  Tensor s{B, 3};
  for (int i = 0; i < B; ++i) {
    s.at(i, 0) = batch.reward[i];
    s.at(i, 1) = batch.done[i] ? 1.0 : 0.0;
    s.at(i, 2) = gamma;
  }
  return s;
}

}  // namespace

TargetVars compute_targets_on_tape(Tape& tape, const OptimizerVars& eta,
                                   const TransitionBatch& batch, Var policy_logits,
                                   Var boot_logits, const OptimizerConfig& cfg) {
  int B = static_cast<int>(batch.size());
  Var probs = tape.softmax_rows(tape.gather_rows(policy_logits, batch.state));
  Var pi_taken = tape.take_cols(probs, batch.action);
  Var pi_col = tape.mul_colvec(tape.constant(Tensor({B, 1}, 1.0)), pi_taken);
  Var y_s = tape.softmax_rows(tape.gather_rows(boot_logits, batch.state));
  Var y_next = tape.softmax_rows(tape.gather_rows(boot_logits, batch.next_state));
  Var x = tape.concat_cols({tape.constant(scalar_inputs(batch, cfg.gamma)), pi_col, y_s, y_next});
  return targets_from_inputs(tape, eta, batch, x, cfg);
}

UpdateTargets compute_targets(const OptimizerParams& eta, const TransitionBatch& batch,
                              const AgentParams& theta) {
  const OptimizerConfig& cfg = eta.cfg;
  int B = static_cast<int>(batch.size());
  std::vector<double> probs;
  theta.policy_probs(batch.state, probs);
  Tensor pi_col{B, 1};
  for (int i = 0; i < B; ++i) pi_col[i] = probs[static_cast<size_t>(i) * kNumActions + batch.action[i]];
  Tensor y_s = theta.bootstrap_probs(batch.state);
  Tensor y_next = theta.bootstrap_probs(batch.next_state);

  Tape tape;
  OptimizerVars ev = optimizer_on_tape(tape, eta, false);
  Var x = tape.concat_cols({tape.constant(scalar_inputs(batch, cfg.gamma)),
                            tape.constant(std::move(pi_col)), tape.constant(std::move(y_s)),
                            tape.constant(std::move(y_next))});
  TargetVars tv = targets_from_inputs(tape, ev, batch, x, cfg);
  UpdateTargets out;
  out.pi_hat = tape.val(tv.pi_hat);
  out.y_hat = tape.val(tv.y_hat);
  return out;
}

std::vector<double> return_to_go(const TransitionBatch& batch, double gamma) {
  std::vector<double> g(batch.size());
  for (int e = 0; e < batch.num_envs; ++e) {
    double acc = 0;  // no bootstrap past the window edge
    for (int t = batch.num_steps - 1; t >= 0; --t) {
      size_t i = batch.at(e, t);
      if (batch.done[i]) acc = 0;
      acc = batch.reward[i] + gamma * acc;
      g[i] = acc;
    }
  }
  return g;
}

MetaGradStats meta_gradient(const OptimizerParams& eta, const Level& lv, AgentParams& theta,
                            std::vector<EnvState>& states, std::vector<Rng>& env_rngs,
                            int num_updates, int num_envs, int num_steps,
                            std::vector<Tensor>& grad_accum) {
  MG_CHECK(theta.mode == AgentParams::Mode::Tabular,
           "meta_gradient: differentiable path needs a tabular student");
  MG_CHECK(num_updates >= 1, "meta_gradient: need at least one update");
  const OptimizerConfig& cfg = eta.cfg;

  Tape tape;
  OptimizerVars ev = optimizer_on_tape(tape, eta);
  Var pol = tape.leaf(theta.policy_logits, false);
  Var boot = tape.leaf(theta.boot_logits, false);

  MetaGradStats stats;
  Var pi_l2, y_l2;
  double abs_pi_sum = 0;
  long abs_pi_count = 0;
  for (int k = 0; k < num_updates; ++k) {
    AgentParams cur = theta;
    cur.policy_logits = tape.val(pol);
    cur.boot_logits = tape.val(boot);
    TransitionBatch batch = rollout(lv, cur.policy_fn(), num_envs, num_steps, states, env_rngs);
    stats.interactions += static_cast<long>(num_envs) * num_steps;

    TargetVars tv = compute_targets_on_tape(tape, ev, batch, pol, boot, cfg);
    for (double v : tape.val(tv.pi_hat).data) {
      abs_pi_sum += std::abs(v);
      abs_pi_count++;
    }
    Var pl2 = tape.mean(tape.square(tv.pi_hat));
    Var yl2 = tape.mean(tape.square(tv.y_hat));
    pi_l2 = k == 0 ? pl2 : tape.add(pi_l2, pl2);
    y_l2 = k == 0 ? yl2 : tape.add(y_l2, yl2);

    auto [new_pol, new_boot] = lpg_update_tabular_on_tape(tape, pol, boot, batch, tv.pi_hat,
                                                          tv.y_hat, cfg.alpha_y, cfg.inner_lr);
    pol = new_pol;
    boot = new_boot;
  }

  // validation window with the post-update student
  AgentParams cur = theta;
  cur.policy_logits = tape.val(pol);
  cur.boot_logits = tape.val(boot);
  TransitionBatch val = rollout(lv, cur.policy_fn(), num_envs, num_steps, states, env_rngs);
  stats.interactions += static_cast<long>(num_envs) * num_steps;

  std::vector<double> g = return_to_go(val, cfg.gamma);
  int B = static_cast<int>(val.size());
  Tensor gt{B};
  gt.data = g;
  for (int e = 0; e < num_envs; ++e) stats.validation_return += g[val.at(e, 0)];
  stats.validation_return /= num_envs;

  Var logp = tape.take_cols(tape.log_softmax_rows(tape.gather_rows(pol, val.state)), val.action);
  Var pg = tape.mean(tape.mul(logp, tape.constant(std::move(gt))));
  Var p_val = tape.softmax_rows(tape.gather_rows(pol, val.state));
  Var y_val = tape.softmax_rows(tape.gather_rows(boot, val.state));
  Var ent_pi = tape.mean(tape.entropy_rows(p_val));
  Var ent_y = tape.mean(tape.entropy_rows(y_val));

  Var loss = tape.scale(pg, -1.0);
  loss = tape.sub(loss, tape.scale(ent_pi, cfg.b_pi_ent));
  loss = tape.sub(loss, tape.scale(ent_y, cfg.b_y_ent));
  loss = tape.add(loss, tape.scale(pi_l2, cfg.b_pi_l2 / num_updates));
  loss = tape.add(loss, tape.scale(y_l2, cfg.b_y_l2 / num_updates));
  tape.backward(loss);

  std::vector<Var> evars = optimizer_var_list(ev);
  auto shapes = eta.param_list();
  if (grad_accum.empty())
    for (const Tensor* t : shapes) grad_accum.push_back(Tensor::zeros_like(*t));
  MG_CHECK(grad_accum.size() == evars.size(), "meta_gradient: gradient accumulator mismatch");
  for (size_t i = 0; i < evars.size(); ++i) {
    const Tensor& gr = tape.grad(evars[i]);
    for (size_t j = 0; j < gr.numel(); ++j) grad_accum[i][j] += gr[j];
  }

  theta.policy_logits = tape.val(pol);
  theta.boot_logits = tape.val(boot);
  stats.outer_loss = tape.val(loss)[0];
  stats.mean_abs_pi_hat = abs_pi_count ? abs_pi_sum / abs_pi_count : 0;
  return stats;
}

long train_with_rule(const OptimizerParams& eta, const Level& lv, AgentParams& theta,
                     std::vector<EnvState>& states, std::vector<Rng>& env_rngs, int num_updates,
                     int num_envs, int num_steps) {
  long steps = 0;
  for (int k = 0; k < num_updates; ++k) {
    TransitionBatch batch = rollout(lv, theta.policy_fn(), num_envs, num_steps, states, env_rngs);
    UpdateTargets targets = compute_targets(eta, batch, theta);
    lpg_update(theta, batch, targets, eta.cfg.alpha_y, eta.cfg.inner_lr);
    steps += static_cast<long>(num_envs) * num_steps;
  }
  return steps;
}

double outer_update(OptimizerParams& eta, std::vector<Tensor>& grads, AdamState& opt_state) {
  std::vector<Tensor*> gptrs;
  for (auto& g : grads) gptrs.push_back(&g);
  double pre = clip_global_norm(gptrs, eta.cfg.outer_clip);
  AdamConfig cfg;
  cfg.lr = eta.cfg.outer_lr;
  adam_step(eta.param_list(), {gptrs.begin(), gptrs.end()}, opt_state, cfg);
  return pre;
}

}  // namespace metagrid
