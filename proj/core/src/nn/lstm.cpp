#include "dualpath/nn/lstm.hpp"

#include <cmath>
#include <memory>

#include "dualpath/errors.hpp"
#include "dualpath/nn/ops.hpp"

namespace dualpath::nn {
namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Per-step activations kept for the backward pass.
struct Trace {
  std::vector<double> gates;   // [L x 4H], post-activation
  std::vector<double> cells;   // [(L + 1) x H], row 0 is c0
  std::vector<double> hidden;  // [(L + 1) x H], row 0 is h0
  std::vector<double> tanh_c;  // [L x H]
};

}  // namespace

LstmResult lstm_scan(Var x, const LstmWeights& w, Var h0, Var c0) {
  Tape* t = x.tape;
  const Shape& xs = x.shape();
  if (xs.size() != 2) fail(ErrorKind::kDimension, "LSTM input must be [L x D_in]");
  const std::size_t len = xs[0], din = xs[1];
  const std::size_t hd = h0.size();
  const std::size_t g4 = 4 * hd;
  if (w.wx.shape() != Shape{g4, din} || w.wh.shape() != Shape{g4, hd} || w.b.shape() != Shape{g4} ||
      c0.size() != hd) {
    fail(ErrorKind::kDimension, "LSTM weight shapes do not match input and state sizes");
  }

  auto trace = std::make_shared<Trace>();
  trace->gates.resize(len * g4);
  trace->cells.resize((len + 1) * hd);
  trace->hidden.resize((len + 1) * hd);
  trace->tanh_c.resize(len * hd);
  std::copy(h0.value().data.begin(), h0.value().data.end(), trace->hidden.begin());
  std::copy(c0.value().data.begin(), c0.value().data.end(), trace->cells.begin());

  const double* xv = x.value().data.data();
  const double* wx = w.wx.value().data.data();
  const double* wh = w.wh.value().data.data();
  const double* bv = w.b.value().data.data();
  std::vector<double> z(g4);
  for (std::size_t s = 0; s < len; ++s) {
    const double* xt = xv + s * din;
    const double* hp = trace->hidden.data() + s * hd;
    const double* cp = trace->cells.data() + s * hd;
    for (std::size_t r = 0; r < g4; ++r) {
      double acc = bv[r];
      const double* wxr = wx + r * din;
      for (std::size_t i = 0; i < din; ++i) acc += wxr[i] * xt[i];
      const double* whr = wh + r * hd;
      for (std::size_t i = 0; i < hd; ++i) acc += whr[i] * hp[i];
      z[r] = acc;
    }
    double* gate = trace->gates.data() + s * g4;
    double* cn = trace->cells.data() + (s + 1) * hd;
    double* hn = trace->hidden.data() + (s + 1) * hd;
    double* tc = trace->tanh_c.data() + s * hd;
    for (std::size_t j = 0; j < hd; ++j) {
      const double ig = logistic(z[j]);
      const double fg = logistic(z[hd + j]);
      const double gg = std::tanh(z[2 * hd + j]);
      const double og = logistic(z[3 * hd + j]);
      gate[j] = ig;
      gate[hd + j] = fg;
      gate[2 * hd + j] = gg;
      gate[3 * hd + j] = og;
      cn[j] = fg * cp[j] + ig * gg;
      tc[j] = std::tanh(cn[j]);
      hn[j] = og * tc[j];
    }
  }

  // Packed result: outputs (L x H), then final h, then final c.
  Tensor packed({len * hd + 2 * hd});
  std::copy(trace->hidden.begin() + static_cast<long>(hd), trace->hidden.end(), packed.data.begin());
  std::copy(trace->hidden.end() - static_cast<long>(hd), trace->hidden.end(),
            packed.data.begin() + static_cast<long>(len * hd));
  std::copy(trace->cells.end() - static_cast<long>(hd), trace->cells.end(),
            packed.data.begin() + static_cast<long>(len * hd + hd));

  const LstmWeights wc = w;
  Var all = t->record(std::move(packed), {x, w.wx, w.wh, w.b, h0, c0},
                      [x, wc, h0, c0, trace, len, din, hd, g4](const Tensor& g) {
    Tape* tp = x.tape;
    const double* wx = wc.wx.value().data.data();
    const double* wh = wc.wh.value().data.data();
    const double* xv = x.value().data.data();
    const bool need_x = tp->requires_grad(x);
    const bool need_wx = tp->requires_grad(wc.wx);
    const bool need_wh = tp->requires_grad(wc.wh);
    const bool need_b = tp->requires_grad(wc.b);
    double* gx = need_x ? tp->grad(x).data.data() : nullptr;
    double* gwx = need_wx ? tp->grad(wc.wx).data.data() : nullptr;
    double* gwh = need_wh ? tp->grad(wc.wh).data.data() : nullptr;
    double* gb = need_b ? tp->grad(wc.b).data.data() : nullptr;

    std::vector<double> dh(g.data.begin() + static_cast<long>(len * hd),
                           g.data.begin() + static_cast<long>(len * hd + hd));
    std::vector<double> dc(g.data.begin() + static_cast<long>(len * hd + hd), g.data.end());
    std::vector<double> dz(g4);
    std::vector<double> dh_prev(hd);
    for (std::size_t s = len; s-- > 0;) {
      const double* gate = trace->gates.data() + s * g4;
      const double* cp = trace->cells.data() + s * hd;
      const double* hp = trace->hidden.data() + s * hd;
      const double* tc = trace->tanh_c.data() + s * hd;
      const double* gout = g.data.data() + s * hd;
      for (std::size_t j = 0; j < hd; ++j) {
        const double ig = gate[j], fg = gate[hd + j], gg = gate[2 * hd + j], og = gate[3 * hd + j];
        const double dht = dh[j] + gout[j];
        const double dct = dc[j] + dht * og * (1.0 - tc[j] * tc[j]);
        dz[j] = dct * gg * ig * (1.0 - ig);
        dz[hd + j] = dct * cp[j] * fg * (1.0 - fg);
        dz[2 * hd + j] = dct * ig * (1.0 - gg * gg);
        dz[3 * hd + j] = dht * tc[j] * og * (1.0 - og);
        dc[j] = dct * fg;
      }
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      const double* xt = xv + s * din;
      for (std::size_t r = 0; r < g4; ++r) {
        const double d = dz[r];
        if (d == 0.0) continue;
        if (gb != nullptr) gb[r] += d;
        if (gwx != nullptr) {
          double* row = gwx + r * din;
          for (std::size_t i = 0; i < din; ++i) row[i] += d * xt[i];
        }
        if (gx != nullptr) {
          const double* row = wx + r * din;
          double* gxt = gx + s * din;
          for (std::size_t i = 0; i < din; ++i) gxt[i] += d * row[i];
        }
        if (gwh != nullptr) {
          double* row = gwh + r * hd;
          for (std::size_t i = 0; i < hd; ++i) row[i] += d * hp[i];
        }
        const double* row = wh + r * hd;
        for (std::size_t i = 0; i < hd; ++i) dh_prev[i] += d * row[i];
      }
      dh.swap(dh_prev);
    }
    if (tp->requires_grad(h0)) {
      auto& g0 = tp->grad(h0).data;
      for (std::size_t j = 0; j < hd; ++j) g0[j] += dh[j];
    }
    if (tp->requires_grad(c0)) {
      auto& g0 = tp->grad(c0).data;
      for (std::size_t j = 0; j < hd; ++j) g0[j] += dc[j];
    }
  });

  LstmResult r;
  r.outputs = slice(all, 0, {len, hd});
  r.h = slice(all, len * hd, {hd});
  r.c = slice(all, len * hd + hd, {hd});
  return r;
}

}  // namespace dualpath::nn
