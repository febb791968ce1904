#pragma once

#include "dualpath/nn/tape.hpp"

namespace dualpath::nn {

// Gate order i, f, g, o along the 4H rows.
struct LstmWeights {
  Var wx;  // [4H x D_in]
  Var wh;  // [4H x H]
  Var b;   // [4H]
};

struct LstmResult {
  Var outputs;  // [L x H]
  Var h;        // [H]
  Var c;        // [H]
};

// Runs the recurrence over the rows of x ([L x D_in]) from (h0, c0). The
// whole scan is one tape node with its own backpropagation through time.
LstmResult lstm_scan(Var x, const LstmWeights& w, Var h0, Var c0);

}  // namespace dualpath::nn
