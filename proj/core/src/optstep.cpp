#include "metagrid/optstep.hpp"

#include <cmath>

namespace metagrid {

void AdamState::ensure_shapes(const std::vector<Tensor*>& params) {
  if (m.size() == params.size()) return;
  MG_CHECK(m.empty(), "adam state size mismatch");
  for (Tensor* p : params) {
    m.push_back(Tensor::zeros_like(*p));
    v.push_back(Tensor::zeros_like(*p));
  }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg) {
  MG_CHECK(params.size() == grads.size(), "adam: param/grad count mismatch");
  state.ensure_shapes(params);
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& gt = *grads[i];
    MG_CHECK(p.same_shape(gt), "adam: shape mismatch");
    Tensor& mi = state.m[i];
    Tensor& vi = state.v[i];
    for (size_t j = 0; j < p.numel(); ++j) {
      double gj = gt[j];
      mi[j] = cfg.beta1 * mi[j] + (1.0 - cfg.beta1) * gj;
      vi[j] = cfg.beta2 * vi[j] + (1.0 - cfg.beta2) * gj * gj;
      double mhat = mi[j] / bc1;
      double vhat = vi[j] / bc2;
      p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void sgd_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              double lr) {
  MG_CHECK(params.size() == grads.size(), "sgd: param/grad count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& gt = *grads[i];
    MG_CHECK(p.same_shape(gt), "sgd: shape mismatch");
    for (size_t j = 0; j < p.numel(); ++j) p[j] -= lr * gt[j];
  }
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
  double sq = 0;
  for (const Tensor* gt : grads)
    for (double x : gt->data) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    double s = max_norm / norm;
    for (Tensor* gt : grads)
      for (double& x : gt->data) x *= s;
  }
  return norm;
}

}  // namespace metagrid
