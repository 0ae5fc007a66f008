#pragma once

#include <functional>
#include <vector>

#include "metagrid/tensor.hpp"

namespace metagrid {

// Handle into a Tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Append-only record of primitive operations for reverse-mode
// differentiation. Nodes are created in topological order by construction;
// backward() visits each node exactly once, in reverse.
//
// Every completed op is checked for non-finite values and throws instead of
// propagating NaN/Inf.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  const Tensor& val(Var v) const { return nodes_[check(v)].value; }
  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // ---- elementwise / arithmetic ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var square(Var a);
  Var log(Var a);
  Var exp(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);

  // ---- linear algebra / shaping ----
  Var matmul(Var a, Var b);                       // [m,k]x[k,n] -> [m,n]
  Var add_rowvec(Var a, Var v);                   // [m,n] + [n] broadcast
  Var mul_colvec(Var a, Var v);                   // row i of a scaled by v[i]
  Var concat_cols(const std::vector<Var>& parts); // [m,n1],[m,n2].. -> [m,sum]
  Var slice_cols(Var a, int c0, int c1);          // columns [c0, c1)
  Var gather_rows(Var table, std::vector<int> idx);
  Var scatter_rows_add(Var base, std::vector<int> idx, Var rows);
  Var take_cols(Var a, std::vector<int> idx);     // [m,n],[m] -> [m], a[i,idx[i]]

  // ---- reductions ----
  Var sum(Var a);        // -> scalar
  Var mean(Var a);       // -> scalar
  Var sum_cols(Var a);   // [m,n] -> [m] row sums

  // ---- categorical primitives (rows are distributions) ----
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  Var kl_rows(Var p, Var q);       // [m,n],[m,n] -> [m]
  Var entropy_rows(Var p);         // [m,n] -> [m]

  // Reverse-mode pass from a scalar loss. Fills gradients for every node
  // with requires_grad; leaves off the path to loss get zeros.
  void backward(Var loss);
  // Same, seeding the output gradient explicitly (output need not be scalar).
  void backward_with_seed(Var out, const Tensor& seed);

  // Gradient from the most recent backward pass. Zero tensor if untouched.
  const Tensor& grad(Var v) const { return grads_[check(v)]; }

 private:
  // Backprop closure: receives the tape and the node's own id; reads the
  // output gradient with g(self) and accumulates into input gradients.
  using Backprop = std::function<void(Tape&, int self)>;

  struct Node {
    Tensor value;
    bool requires_grad = false;
    Backprop backprop;
  };

  int check(Var v) const {
    MG_CHECK(v.id >= 0 && v.id < static_cast<int>(nodes_.size()), "invalid tape handle");
    return v.id;
  }
  Var push(Tensor value, bool requires_grad, Backprop backprop);
  Tensor& g(int id) { return grads_[id]; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
};

// Probabilities below this are clamped before any log inside kl/entropy.
inline constexpr double kProbFloor = 1e-12;

}  // namespace metagrid
