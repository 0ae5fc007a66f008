#include "metagrid/lstm.hpp"

#include <cmath>

namespace metagrid {

LstmCellParams LstmCellParams::init(int input_size, int hidden_size, Rng& rng) {
  LstmCellParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.wx = Tensor::randn({input_size, 4 * hidden_size}, rng, 1.0 / std::sqrt(input_size));
  p.wh = Tensor::randn({hidden_size, 4 * hidden_size}, rng, 1.0 / std::sqrt(hidden_size));
  p.b = Tensor{4 * hidden_size};
  // forget-gate bias starts at 1
  for (int j = hidden_size; j < 2 * hidden_size; ++j) p.b[j] = 1.0;
  return p;
}

LstmCellParams LstmCellParams::zeros(int input_size, int hidden_size) {
  LstmCellParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.wx = Tensor{input_size, 4 * hidden_size};
  p.wh = Tensor{hidden_size, 4 * hidden_size};
  p.b = Tensor{4 * hidden_size};
  return p;
}

LstmCellVars lstm_on_tape(Tape& tape, const LstmCellParams& p, bool requires_grad) {
  MG_CHECK(p.wx.shape == std::vector<int>({p.input_size, 4 * p.hidden_size}) &&
               p.wh.shape == std::vector<int>({p.hidden_size, 4 * p.hidden_size}) &&
               static_cast<int>(p.b.numel()) == 4 * p.hidden_size,
           "lstm: inconsistent parameter shapes");
  LstmCellVars v;
  v.input_size = p.input_size;
  v.hidden_size = p.hidden_size;
  v.wx = tape.leaf(p.wx, requires_grad);
  v.wh = tape.leaf(p.wh, requires_grad);
  v.b = tape.leaf(p.b, requires_grad);
  return v;
}

std::pair<Var, Var> lstm_cell(Tape& tape, const LstmCellVars& p, Var x, Var h_in, Var c_in) {
  int h = p.hidden_size;
  Var z = tape.add_rowvec(tape.add(tape.matmul(x, p.wx), tape.matmul(h_in, p.wh)), p.b);
  Var i = tape.sigmoid(tape.slice_cols(z, 0, h));
  Var f = tape.sigmoid(tape.slice_cols(z, h, 2 * h));
  Var g = tape.tanh(tape.slice_cols(z, 2 * h, 3 * h));
  Var o = tape.sigmoid(tape.slice_cols(z, 3 * h, 4 * h));
  Var c = tape.add(tape.mul(f, c_in), tape.mul(i, g));
  Var hs = tape.mul(o, tape.tanh(c));
  return {hs, c};
}

std::vector<Var> lstm_scan_reverse(Tape& tape, const LstmCellVars& p,
                                   const std::vector<Var>& inputs,
                                   const std::vector<std::vector<double>>& done) {
  MG_CHECK(!inputs.empty(), "lstm_scan_reverse: empty sequence");
  int T = static_cast<int>(inputs.size());
  int B = tape.val(inputs[0]).shape[0];
  for (Var v : inputs)
    MG_CHECK(tape.val(v).shape.size() == 2 && tape.val(v).shape[0] == B &&
                 tape.val(v).shape[1] == p.input_size,
             "lstm_scan_reverse: inconsistent input width");
  MG_CHECK(done.empty() || static_cast<int>(done.size()) == T,
           "lstm_scan_reverse: done mask length mismatch");

  std::vector<Var> hidden(T);
  Var h = tape.constant(Tensor{B, p.hidden_size});
  Var c = tape.constant(Tensor{B, p.hidden_size});
  for (int t = T - 1; t >= 0; --t) {
    if (t < T - 1 && !done.empty()) {
      Tensor keep{B};
      for (int b = 0; b < B; ++b) keep[b] = 1.0 - done[t][b];
      Var kv = tape.constant(keep);
      h = tape.mul_colvec(h, kv);
      c = tape.mul_colvec(c, kv);
    }
    auto [hs, cs] = lstm_cell(tape, p, inputs[t], h, c);
    hidden[t] = hs;
    h = hs;
    c = cs;
  }
  return hidden;
}

}  // namespace metagrid
