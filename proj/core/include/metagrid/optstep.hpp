#pragma once

#include <vector>

#include "metagrid/tensor.hpp"

namespace metagrid {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment state for a list of parameter tensors.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;

  void ensure_shapes(const std::vector<Tensor*>& params);
};

// params[i] -= update computed from grads[i]; gradient-descent convention.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg);

void sgd_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              double lr);

// Scales grads in place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

}  // namespace metagrid
