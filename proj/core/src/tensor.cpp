#include "metagrid/tensor.hpp"

#include <cmath>

namespace metagrid {

bool Tensor::finite() const {
  double acc = 0;
  for (double v : data) acc += v;
  return std::isfinite(acc) || data.empty();
}

}  // namespace metagrid
