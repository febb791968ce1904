#pragma once

#include <cstddef>

#include "dualpath/nn/tape.hpp"

namespace dualpath::nn {

// Elementwise, equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

// Sum of all elements as a 1-element tensor.
Var sum(Var a);
Var mean(Var a);

// Same data, new shape of equal size.
Var reshape(Var a, Shape shape);
// Contiguous flat range [offset, offset + size(shape)) reshaped to `shape`.
Var slice(Var a, std::size_t offset, Shape shape);
// Flat concatenation of two tensors as a rank-1 tensor.
Var concat(Var a, Var b);
// Rank-2 transpose.
Var transpose(Var a);

// Forward identity, no gradient upstream.
Var stop_gradient(Var a);

// x: [C_in x L], w: [C_out x C_in x K] (K odd), b: [C_out]; "same" padding.
Var conv1d(Var x, Var w, Var b);

// x: [D_in] -> [D_out], or [L x D_in] -> [L x D_out] applied per row.
// w: [D_out x D_in], b: [D_out].
Var linear(Var x, Var w, Var b);

// [C x L] -> [C], per-channel mean.
Var global_avg_pool(Var x);

// Rank-1 softmax.
Var softmax(Var x);

// Complex ops on 2xN tensors.
Var complex_mul(Var a, Var b);
// Same-length FIR, taps as 2xK; forward runs the signal-path kernel.
Var complex_fir(Var x, Var taps);
// x[k] exp(-j 2 pi f k) with f a 1-element tensor.
Var frequency_shift(Var x, Var f);
// For each lag L: arg sum_k u[k] conj(u[k-L]) with u = x^power, as a
// tensor of lags.size() angles. Zero gradient where the sum vanishes.
Var power_lag_phase(Var x, int power, const std::vector<std::size_t>& lags);

}  // namespace dualpath::nn
