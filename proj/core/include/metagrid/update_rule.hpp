#pragma once

#include "metagrid/agent.hpp"
#include "metagrid/lstm.hpp"
#include "metagrid/optstep.hpp"

namespace metagrid {

// Shape and coefficient choices for the learned update rule and its
// meta-objective.
struct OptimizerConfig {
  int n = 16;       // bootstrap-vector dimension
  int embed = 16;   // input embedding width
  int hidden = 32;  // reverse-LSTM width

  double gamma = 0.99;   // discount fed to the rule and used in return-to-go
  double alpha_y = 0.5;  // KL coefficient in the student update
  double inner_lr = 40.0;

  // outer loss: -E[log pi * G] - b_pi_ent*H(pi) - b_y_ent*H(y)
  //             + b_pi_l2*mean(pi_hat^2) + b_y_l2*mean(y_hat^2)
  double b_pi_ent = 0.05;
  double b_y_ent = 0.001;
  double b_pi_l2 = 0.005;
  double b_y_l2 = 0.001;

  double outer_lr = 1e-4;
  double outer_clip = 0.5;

  // per-transition input: [reward, done, gamma, pi(a|s)] ++ y(s) ++ y(s')
  int input_width() const { return 4 + 2 * n; }
};

// Parameters eta of the rule: linear embedding, reverse LSTM over each
// environment's transition window, and linear heads producing the scalar
// policy target pi_hat and the categorical bootstrap target y_hat.
struct OptimizerParams {
  OptimizerConfig cfg;
  Tensor we, be;  // [input_width, embed], [embed]
  LstmCellParams lstm;
  Tensor wp, bp;  // [hidden, 1], [1]
  Tensor wy, by;  // [hidden, n], [n]

  std::vector<Tensor*> param_list();
  std::vector<const Tensor*> param_list() const;
};

OptimizerParams init_optimizer(const OptimizerConfig& cfg, Rng& rng);

struct OptimizerVars {
  Var we, be;
  LstmCellVars lstm;
  Var wp, bp, wy, by;
};

OptimizerVars optimizer_on_tape(Tape& tape, const OptimizerParams& eta, bool requires_grad = true);
std::vector<Var> optimizer_var_list(const OptimizerVars& v);

// Targets for every transition in the batch, env-major aligned with it.
struct TargetVars {
  Var pi_hat;  // [B]
  Var y_hat;   // [B, n], rows sum to 1
};

// Differentiable forward pass of the rule. The student's policy probability
// of the taken action and bootstrap vectors enter through `policy_logits` /
// `boot_logits`, so gradients flow both into eta and into the student chain.
TargetVars compute_targets_on_tape(Tape& tape, const OptimizerVars& eta,
                                   const TransitionBatch& batch, Var policy_logits,
                                   Var boot_logits, const OptimizerConfig& cfg);

// Convenience no-gradient path; works for dense students too.
UpdateTargets compute_targets(const OptimizerParams& eta, const TransitionBatch& batch,
                              const AgentParams& theta);

// Discounted return-to-go of each transition within its window, zeroed at
// episode ends and truncated (no bootstrap) at the window edge.
std::vector<double> return_to_go(const TransitionBatch& batch, double gamma);

struct MetaGradStats {
  double outer_loss = 0;
  long interactions = 0;         // environment steps consumed
  double mean_abs_pi_hat = 0;    // across all inner updates
  double validation_return = 0;  // mean return-to-go at window start
};

// Runs `num_updates` differentiable student updates on one level (tabular
// students only), then a validation rollout, forms the outer loss, and
// accumulates its eta-gradient into `grad_accum` (same order/shapes as
// eta.param_list()). The student parameters and environment streams advance
// in place, so consecutive calls continue the same lifetime.
MetaGradStats meta_gradient(const OptimizerParams& eta, const Level& lv, AgentParams& theta,
                            std::vector<EnvState>& states, std::vector<Rng>& env_rngs,
                            int num_updates, int num_envs, int num_steps,
                            std::vector<Tensor>& grad_accum);

// Non-differentiable lifetime segment with the frozen rule (either student
// mode); used at meta-test time. Returns environment steps consumed.
long train_with_rule(const OptimizerParams& eta, const Level& lv, AgentParams& theta,
                     std::vector<EnvState>& states, std::vector<Rng>& env_rngs, int num_updates,
                     int num_envs, int num_steps);

// Clips the accumulated gradient to cfg.outer_clip (global norm) and applies
// one Adam ascent-free (descent) step with cfg.outer_lr. Returns the
// pre-clip norm.
double outer_update(OptimizerParams& eta, std::vector<Tensor>& grads, AdamState& opt_state);

}  // namespace metagrid
