#pragma once

#include <vector>

#include "metagrid/tape.hpp"

namespace metagrid {

// LSTM cell parameters, gate order i|f|g|o along the 4h axis.
struct LstmCellParams {
  int input_size = 0;
  int hidden_size = 0;
  Tensor wx;  // [input_size, 4h]
  Tensor wh;  // [hidden_size, 4h]
  Tensor b;   // [4h]

  static LstmCellParams init(int input_size, int hidden_size, Rng& rng);
  static LstmCellParams zeros(int input_size, int hidden_size);
};

// Tape handles for one cell's parameters.
struct LstmCellVars {
  int input_size = 0;
  int hidden_size = 0;
  Var wx, wh, b;
};

LstmCellVars lstm_on_tape(Tape& tape, const LstmCellParams& p, bool requires_grad = true);

// One cell step: returns (h, c) given batched input x [B,in] and carried
// state (h_in, c_in) [B,h].
std::pair<Var, Var> lstm_cell(Tape& tape, const LstmCellVars& p, Var x, Var h_in, Var c_in);

// Reverse scan: processes inputs from last step to first so output[t]
// depends only on inputs[t..T-1]. `done[t]`, when nonempty, holds per-batch
// episode-termination flags for transition t; carried state entering t from
// t+1 is zeroed where done[t] is set.
// inputs[t]: Var [B, input_size]. Returns hidden state per t, [B, hidden].
std::vector<Var> lstm_scan_reverse(Tape& tape, const LstmCellVars& p,
                                   const std::vector<Var>& inputs,
                                   const std::vector<std::vector<double>>& done = {});

}  // namespace metagrid
