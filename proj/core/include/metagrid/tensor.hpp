#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "metagrid/common.hpp"
#include "metagrid/rng.hpp"

namespace metagrid {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 or 2 in practice.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::initializer_list<int> s, double fill = 0.0) : shape(s) {
    data.assign(numel_of(shape), fill);
  }
  explicit Tensor(const std::vector<int>& s, double fill = 0.0) : shape(s) {
    data.assign(numel_of(shape), fill);
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int e : s) {
      MG_CHECK(e >= 0, "negative extent");
      n *= static_cast<size_t>(e);
    }
    return n;
  }

  static Tensor scalar(double v) {
    Tensor t;
    t.data.assign(1, v);
    return t;
  }
  static Tensor row(const std::vector<double>& v) {
    Tensor t{static_cast<int>(v.size())};
    t.data = v;
    return t;
  }
  static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape, 0.0); }
  static Tensor randn(const std::vector<int>& s, Rng& rng, double scale) {
    Tensor t(s);
    for (auto& x : t.data) x = scale * rng.normal();
    return t;
  }

  size_t numel() const { return data.size(); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const {
    if (shape.size() >= 2) return shape[1];
    return shape.empty() ? 1 : shape[0];
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }
  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool finite() const;
};

}  // namespace metagrid
