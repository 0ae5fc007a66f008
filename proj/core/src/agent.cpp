#include "metagrid/agent.hpp"

#include <cmath>

namespace metagrid {

std::vector<Tensor*> AgentParams::param_list() {
  if (mode == Mode::Tabular) return {&policy_logits, &boot_logits};
  return {&w1, &b1, &w2p, &b2p, &w3p, &b3p, &w2y, &b2y, &w3y, &b3y};
}

std::vector<const Tensor*> AgentParams::param_list() const {
  auto lst = const_cast<AgentParams*>(this)->param_list();
  return {lst.begin(), lst.end()};
}

namespace {
void softmax_inplace(double* row, int n) {
  double mx = row[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double z = 0;
  for (int j = 0; j < n; ++j) z += (row[j] = std::exp(row[j] - mx));
  for (int j = 0; j < n; ++j) row[j] /= z;
}

// dense trunk + one head, no tape
void dense_head(const AgentParams& p, int state, const Tensor& w2, const Tensor& b2,
                const Tensor& w3, const Tensor& b3, double* out, int out_n) {
  const int H = AgentParams::kHidden;
  double h1[AgentParams::kHidden], h2[AgentParams::kHidden];
  for (int j = 0; j < H; ++j) h1[j] = std::max(0.0, p.w1.at(state, j) + p.b1[j]);
  for (int j = 0; j < H; ++j) {
    double acc = b2[j];
    for (int k = 0; k < H; ++k) acc += h1[k] * w2.at(k, j);
    h2[j] = std::max(0.0, acc);
  }
  for (int j = 0; j < out_n; ++j) {
    double acc = b3[j];
    for (int k = 0; k < H; ++k) acc += h2[k] * w3.at(k, j);
    out[j] = acc;
  }
}
}  // namespace

void AgentParams::policy_probs(const std::vector<int>& states, std::vector<double>& probs) const {
  size_t B = states.size();
  probs.resize(B * num_actions);
  for (size_t i = 0; i < B; ++i) {
    double* row = &probs[i * num_actions];
    if (mode == Mode::Tabular) {
      for (int j = 0; j < num_actions; ++j) row[j] = policy_logits.at(states[i], j);
    } else {
      dense_head(*this, states[i], w2p, b2p, w3p, b3p, row, num_actions);
    }
    softmax_inplace(row, num_actions);
  }
}

PolicyFn AgentParams::policy_fn() const {
  AgentParams copy = *this;
  return [copy](const std::vector<int>& states, std::vector<double>& probs) {
    copy.policy_probs(states, probs);
  };
}

Tensor AgentParams::bootstrap_probs(const std::vector<int>& states) const {
  int B = static_cast<int>(states.size());
  Tensor out{B, n};
  for (int i = 0; i < B; ++i) {
    double* row = &out.data[static_cast<size_t>(i) * n];
    if (mode == Mode::Tabular) {
      for (int j = 0; j < n; ++j) row[j] = boot_logits.at(states[i], j);
    } else {
      dense_head(*this, states[i], w2y, b2y, w3y, b3y, row, n);
    }
    softmax_inplace(row, n);
  }
  return out;
}

AgentParams init_agent(int num_states, int n, Rng& rng, AgentParams::Mode mode) {
  MG_CHECK(n >= 2, "init_agent: n must be >= 2");
  AgentParams p;
  p.mode = mode;
  p.num_states = num_states;
  p.n = n;
  const int H = AgentParams::kHidden;
  if (mode == AgentParams::Mode::Tabular) {
    p.policy_logits = Tensor{num_states, p.num_actions};
    p.boot_logits = Tensor{num_states, n};
  } else {
    p.w1 = Tensor::randn({num_states, H}, rng, 1.0 / std::sqrt(num_states));
    p.b1 = Tensor{H};
    p.w2p = Tensor::randn({H, H}, rng, 1.0 / std::sqrt(H));
    p.b2p = Tensor{H};
    p.w3p = Tensor::randn({H, p.num_actions}, rng, 1.0 / std::sqrt(H));
    p.b3p = Tensor{p.num_actions};
    p.w2y = Tensor::randn({H, H}, rng, 1.0 / std::sqrt(H));
    p.b2y = Tensor{H};
    p.w3y = Tensor::randn({H, n}, rng, 1.0 / std::sqrt(H));
    p.b3y = Tensor{n};
  }
  return p;
}

AgentVars agent_on_tape(Tape& tape, const AgentParams& p, bool requires_grad) {
  AgentVars v;
  v.mode = p.mode;
  v.num_states = p.num_states;
  v.num_actions = p.num_actions;
  v.n = p.n;
  if (p.mode == AgentParams::Mode::Tabular) {
    v.policy_logits = tape.leaf(p.policy_logits, requires_grad);
    v.boot_logits = tape.leaf(p.boot_logits, requires_grad);
  } else {
    v.w1 = tape.leaf(p.w1, requires_grad);
    v.b1 = tape.leaf(p.b1, requires_grad);
    v.w2p = tape.leaf(p.w2p, requires_grad);
    v.b2p = tape.leaf(p.b2p, requires_grad);
    v.w3p = tape.leaf(p.w3p, requires_grad);
    v.b3p = tape.leaf(p.b3p, requires_grad);
    v.w2y = tape.leaf(p.w2y, requires_grad);
    v.b2y = tape.leaf(p.b2y, requires_grad);
    v.w3y = tape.leaf(p.w3y, requires_grad);
    v.b3y = tape.leaf(p.b3y, requires_grad);
  }
  return v;
}

AgentParams agent_from_tape(const Tape& tape, const AgentVars& v) {
  AgentParams p;
  p.mode = v.mode;
  p.num_states = v.num_states;
  p.num_actions = v.num_actions;
  p.n = v.n;
  if (v.mode == AgentParams::Mode::Tabular) {
    p.policy_logits = tape.val(v.policy_logits);
    p.boot_logits = tape.val(v.boot_logits);
  } else {
    p.w1 = tape.val(v.w1);
    p.b1 = tape.val(v.b1);
    p.w2p = tape.val(v.w2p);
    p.b2p = tape.val(v.b2p);
    p.w3p = tape.val(v.w3p);
    p.b3p = tape.val(v.b3p);
    p.w2y = tape.val(v.w2y);
    p.b2y = tape.val(v.b2y);
    p.w3y = tape.val(v.w3y);
    p.b3y = tape.val(v.b3y);
  }
  return p;
}

namespace {
Var dense_head_on_tape(Tape& tape, const AgentVars& a, const std::vector<int>& states, Var w2,
                       Var b2, Var w3, Var b3) {
  Var h1 = tape.relu(tape.add_rowvec(tape.gather_rows(a.w1, states), a.b1));
  Var h2 = tape.relu(tape.add_rowvec(tape.matmul(h1, w2), b2));
  return tape.add_rowvec(tape.matmul(h2, w3), b3);
}
}  // namespace

Var policy_logit_rows(Tape& tape, const AgentVars& a, const std::vector<int>& states) {
  if (a.mode == AgentParams::Mode::Tabular) return tape.gather_rows(a.policy_logits, states);
  return dense_head_on_tape(tape, a, states, a.w2p, a.b2p, a.w3p, a.b3p);
}

Var boot_logit_rows(Tape& tape, const AgentVars& a, const std::vector<int>& states) {
  if (a.mode == AgentParams::Mode::Tabular) return tape.gather_rows(a.boot_logits, states);
  return dense_head_on_tape(tape, a, states, a.w2y, a.b2y, a.w3y, a.b3y);
}

Var lpg_surrogate(Tape& tape, const AgentVars& a, const TransitionBatch& batch, Var pi_hat,
                  Var y_hat, double alpha_y) {
  MG_CHECK(tape.val(pi_hat).numel() == batch.size() &&
               tape.val(y_hat).shape[0] == static_cast<int>(batch.size()),
           "lpg_surrogate: batch/target misalignment");
  Var logp_rows = tape.log_softmax_rows(policy_logit_rows(tape, a, batch.state));
  Var logp = tape.take_cols(logp_rows, batch.action);
  Var y = tape.softmax_rows(boot_logit_rows(tape, a, batch.state));
  Var kl = tape.kl_rows(y, y_hat);
  return tape.sub(tape.mean(tape.mul(logp, pi_hat)), tape.scale(tape.mean(kl), alpha_y));
}

void lpg_update(AgentParams& theta, const TransitionBatch& batch, const UpdateTargets& targets,
                double alpha_y, double lr) {
  MG_CHECK(targets.pi_hat.numel() == batch.size() &&
               targets.y_hat.shape ==
                   std::vector<int>({static_cast<int>(batch.size()), theta.n}),
           "lpg_update: batch/target misalignment");
  Tape tape;
  AgentVars a = agent_on_tape(tape, theta);
  Var pi_hat = tape.constant(targets.pi_hat);
  Var y_hat = tape.constant(targets.y_hat);
  Var loss = lpg_surrogate(tape, a, batch, pi_hat, y_hat, alpha_y);
  tape.backward(loss);
  auto params = theta.param_list();
  std::vector<Var> vars;
  if (theta.mode == AgentParams::Mode::Tabular) {
    vars = {a.policy_logits, a.boot_logits};
  } else {
    vars = {a.w1, a.b1, a.w2p, a.b2p, a.w3p, a.b3p, a.w2y, a.b2y, a.w3y, a.b3y};
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor& gt = tape.grad(vars[i]);
    for (size_t j = 0; j < params[i]->numel(); ++j) (*params[i])[j] += lr * gt[j];
  }
}

std::pair<Var, Var> lpg_update_tabular_on_tape(Tape& tape, Var policy_logits, Var boot_logits,
                                               const TransitionBatch& batch, Var pi_hat, Var y_hat,
                                               double alpha_y, double lr) {
  int B = static_cast<int>(batch.size());
  int A = tape.val(policy_logits).shape[1];
  int n = tape.val(boot_logits).shape[1];
  double inv_b = 1.0 / B;

  // policy rows: pi_hat_t * (onehot(a_t) - pi(s_t))
  Var p = tape.softmax_rows(tape.gather_rows(policy_logits, batch.state));
  Tensor onehot{B, A};
  for (int i = 0; i < B; ++i) onehot.at(i, batch.action[i]) = 1.0;
  Var rows_pi = tape.mul_colvec(tape.sub(tape.constant(onehot), p), pi_hat);

  // bootstrap rows: -alpha_y * y * ((log y - log y_hat) - KL(y || y_hat))
  Var z = tape.gather_rows(boot_logits, batch.state);
  Var y = tape.softmax_rows(z);
  Var diff = tape.sub(tape.log_softmax_rows(z), tape.log(y_hat));
  Var klv = tape.sum_cols(tape.mul(y, diff));
  Var ones = tape.constant(Tensor({B, n}, 1.0));
  Var rows_y = tape.mul(y, tape.sub(diff, tape.mul_colvec(ones, klv)));

  Var new_pol = tape.scatter_rows_add(policy_logits, batch.state, tape.scale(rows_pi, lr * inv_b));
  Var new_boot =
      tape.scatter_rows_add(boot_logits, batch.state, tape.scale(rows_y, -alpha_y * lr * inv_b));
  return {new_pol, new_boot};
}

}  // namespace metagrid
