#pragma once

#include "metagrid/env.hpp"
#include "metagrid/tape.hpp"

namespace metagrid {

// Per-transition update targets produced by the learned rule.
struct UpdateTargets {
  Tensor pi_hat;  // [B]
  Tensor y_hat;   // [B, n] rows are categorical distributions
};

// Student parameters: softmax policy plus categorical bootstrap function.
// Tabular mode holds per-state logit tables; dense mode is a two-hidden-layer
// network (width 64) on a one-hot state encoding, sharing the first layer
// between the policy and bootstrap heads.
struct AgentParams {
  enum class Mode { Tabular, Dense };
  static constexpr int kHidden = 64;

  Mode mode = Mode::Tabular;
  int num_states = 0;
  int num_actions = kNumActions;
  int n = 16;  // bootstrap-vector dimension

  // tabular
  Tensor policy_logits;  // [S, A]
  Tensor boot_logits;    // [S, n]
  // dense (w1/b1 shared trunk)
  Tensor w1, b1;
  Tensor w2p, b2p, w3p, b3p;
  Tensor w2y, b2y, w3y, b3y;

  std::vector<Tensor*> param_list();
  std::vector<const Tensor*> param_list() const;

  void policy_probs(const std::vector<int>& states, std::vector<double>& probs) const;
  PolicyFn policy_fn() const;  // copies parameters into the closure
  Tensor bootstrap_probs(const std::vector<int>& states) const;  // [B, n]
};

AgentParams init_agent(int num_states, int n, Rng& rng, AgentParams::Mode mode);

// Tape handles for one agent's parameters.
struct AgentVars {
  AgentParams::Mode mode = AgentParams::Mode::Tabular;
  int num_states = 0, num_actions = 0, n = 0;
  Var policy_logits, boot_logits;
  Var w1, b1, w2p, b2p, w3p, b3p, w2y, b2y, w3y, b3y;
};

AgentVars agent_on_tape(Tape& tape, const AgentParams& p, bool requires_grad = true);
AgentParams agent_from_tape(const Tape& tape, const AgentVars& v);

// Forward passes on tape for a batch of state indices.
Var policy_logit_rows(Tape& tape, const AgentVars& a, const std::vector<int>& states);  // [B, A]
Var boot_logit_rows(Tape& tape, const AgentVars& a, const std::vector<int>& states);    // [B, n]

// Scalar surrogate whose theta-gradient is the learned update direction:
//   mean_t[ log pi(a_t|s_t) * pi_hat_t - alpha_y * KL(y(s_t) || y_hat_t) ].
Var lpg_surrogate(Tape& tape, const AgentVars& a, const TransitionBatch& batch, Var pi_hat,
                  Var y_hat, double alpha_y);

// theta' = theta + lr * grad(surrogate); averages over the batch. Generic
// path for both modes, used outside meta-gradient windows.
void lpg_update(AgentParams& theta, const TransitionBatch& batch, const UpdateTargets& targets,
                double alpha_y, double lr);

// Tabular update expressed with forward primitives so the chain stays
// differentiable w.r.t. the targets (and through them the learned rule).
// Returns updated (policy_logits, boot_logits) tape handles.
std::pair<Var, Var> lpg_update_tabular_on_tape(Tape& tape, Var policy_logits, Var boot_logits,
                                               const TransitionBatch& batch, Var pi_hat, Var y_hat,
                                               double alpha_y, double lr);

}  // namespace metagrid
