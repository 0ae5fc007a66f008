#include <doctest.h>

#include "metagrid/lstm.hpp"
#include "oracles.hpp"

using namespace metagrid;

namespace {
std::vector<Var> put_inputs(Tape& t, const std::vector<Tensor>& xs) {
  std::vector<Var> out;
  for (const auto& x : xs) out.push_back(t.constant(x));
  return out;
}
}  // namespace

TEST_CASE("all-zero parameters give zero hidden states") {
  LstmCellParams p = LstmCellParams::zeros(3, 4);
  Tape t;
  LstmCellVars v = lstm_on_tape(t, p);
  Rng rng(1);
  std::vector<Tensor> xs = {Tensor::randn({2, 3}, rng, 1.0), Tensor::randn({2, 3}, rng, 1.0)};
  auto hs = lstm_scan_reverse(t, v, put_inputs(t, xs));
  for (Var h : hs)
    for (double x : t.val(h).data) CHECK(x == 0.0);
}

TEST_CASE("reverse causality: output[t] depends on future, not past") {
  Rng rng(9);
  LstmCellParams p = LstmCellParams::init(3, 4, rng);
  auto run = [&](const std::vector<Tensor>& xs) {
    Tape t;
    LstmCellVars v = lstm_on_tape(t, p);
    auto hs = lstm_scan_reverse(t, v, put_inputs(t, xs));
    std::vector<Tensor> out;
    for (Var h : hs) out.push_back(t.val(h));
    return out;
  };
  std::vector<Tensor> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(Tensor::randn({1, 3}, rng, 1.0));
  auto base = run(xs);

  auto perturbed = xs;
  perturbed[2][0] += 0.5;  // future of t=1, past of t=3
  auto out = run(perturbed);
  CHECK(oracle::max_mismatch(out[1], base[1], 1e-12, 0) > 0);  // t=1 changes
  CHECK(oracle::max_mismatch(out[3], base[3], 1e-15, 0) <= 0); // t=3 unchanged
}

TEST_CASE("done flag cuts the backward-flowing state") {
  Rng rng(13);
  LstmCellParams p = LstmCellParams::init(2, 3, rng);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(Tensor::randn({1, 2}, rng, 1.0));
  std::vector<std::vector<double>> done = {{1.0}, {0.0}, {0.0}};  // episode ends at t=0

  auto run = [&](const std::vector<Tensor>& in) {
    Tape t;
    LstmCellVars v = lstm_on_tape(t, p);
    auto hs = lstm_scan_reverse(t, v, put_inputs(t, in), done);
    return t.val(hs[0]);
  };
  auto base = run(xs);
  auto perturbed = xs;
  perturbed[1][0] += 1.0;  // next episode; must not leak into t=0
  CHECK(oracle::max_mismatch(run(perturbed), base, 1e-15, 0) <= 0);
}

TEST_CASE("empty sequence is rejected") {
  LstmCellParams p = LstmCellParams::zeros(2, 2);
  Tape t;
  LstmCellVars v = lstm_on_tape(t, p);
  CHECK_THROWS_AS(lstm_scan_reverse(t, v, {}), Error);
}

TEST_CASE("scan gradient w.r.t. parameters matches finite differences") {
  Rng rng(21);
  LstmCellParams p = LstmCellParams::init(3, 4, rng);
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(Tensor::randn({1, 3}, rng, 1.0));

  auto eval = [&](const std::vector<Tensor>& ps) {
    LstmCellParams q = p;
    q.wx = ps[0];
    q.wh = ps[1];
    q.b = ps[2];
    Tape t;
    LstmCellVars v = lstm_on_tape(t, q);
    auto hs = lstm_scan_reverse(t, v, put_inputs(t, xs));
    Var total = t.sum(hs[0]);
    for (size_t i = 1; i < hs.size(); ++i) total = t.add(total, t.sum(hs[i]));
    return t.val(total)[0];
  };

  Tape t;
  LstmCellVars v = lstm_on_tape(t, p);
  auto hs = lstm_scan_reverse(t, v, put_inputs(t, xs));
  Var total = t.sum(hs[0]);
  for (size_t i = 1; i < hs.size(); ++i) total = t.add(total, t.sum(hs[i]));
  t.backward(total);

  auto fd = oracle::fd_gradients(eval, {p.wx, p.wh, p.b}, 1e-5);
  CHECK(oracle::max_mismatch(t.grad(v.wx), fd[0], 1e-7, 1e-4) <= 0);
  CHECK(oracle::max_mismatch(t.grad(v.wh), fd[1], 1e-7, 1e-4) <= 0);
  CHECK(oracle::max_mismatch(t.grad(v.b), fd[2], 1e-7, 1e-4) <= 0);
}
