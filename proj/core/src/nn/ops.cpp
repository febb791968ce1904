#include "dualpath/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualpath/errors.hpp"
#include "dualpath/sigpath.hpp"

namespace dualpath::nn {
namespace {

void same_shape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::kDimension, std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                                    shape_string(b.shape()) + " differ");
  }
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) fail(ErrorKind::kInvalidArgument, "variables live on different tapes");
}

// Applies f elementwise; df(x, y) is the local derivative given input and output.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
  Tape* t = a.tape;
  const std::size_t out_id = t->node_count();
  return t->record(std::move(y), {a}, [a, t, out_id, df](const Tensor& g) {
    const Tensor& x = a.value();
    const Tensor& y = t->value(Var{t, out_id});
    auto& ga = t->grad(a).data;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.data[i] * df(x.data[i], y.data[i]);
  });
}

std::size_t complex_len(Var v, const char* op) {
  const Shape& s = v.shape();
  if (s.size() != 2 || s[0] != 2) fail(ErrorKind::kDimension, std::string(op) + " expects a 2xN tensor");
  return s[1];
}

}  // namespace

Var add(Var a, Var b) {
  same_tape(a, b);
  same_shape(a, b, "add");
  Tensor y = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += bv[i];
  return a.tape->record(std::move(y), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  same_shape(a, b, "sub");
  Tensor y = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= bv[i];
  return a.tape->record(std::move(y), {a, b}, [a, b](const Tensor& g) {
    accumulate(a, g);
    if (b.tape->requires_grad(b)) {
      auto& gb = b.tape->grad(b).data;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g.data[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  same_shape(a, b, "mul");
  Tensor y = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= bv[i];
  return a.tape->record(std::move(y), {a, b}, [a, b](const Tensor& g) {
    Tape* t = a.tape;
    if (t->requires_grad(a)) {
      auto& ga = t->grad(a).data;
      const auto& bv = b.value().data;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.data[i] * bv[i];
    }
    if (t->requires_grad(b)) {
      auto& gb = t->grad(b).data;
      const auto& av = a.value().data;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.data[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor y = a.value();
  for (auto& v : y.data) v *= factor;
  return a.tape->record(std::move(y), {a}, [a, factor](const Tensor& g) {
    auto& ga = a.tape->grad(a).data;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * g.data[i];
  });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [a](const Tensor& g) {
    auto& ga = a.tape->grad(a).data;
    for (auto& v : ga) v += g.data[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.size());
  if (n == 0.0) fail(ErrorKind::kEmptyInput, "mean of an empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.size()) fail(ErrorKind::kDimension, "reshape changes the element count");
  Tensor y(std::move(shape), a.value().data);
  return a.tape->record(std::move(y), {a}, [a](const Tensor& g) {
    auto& ga = a.tape->grad(a).data;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g.data[i];
  });
}

Var slice(Var a, std::size_t offset, Shape shape) {
  const std::size_t n = shape_size(shape);
  if (offset + n > a.size()) fail(ErrorKind::kDimension, "slice runs past the end of the tensor");
  const auto& src = a.value().data;
  Tensor y(std::move(shape), std::vector<double>(src.begin() + static_cast<long>(offset),
                                                 src.begin() + static_cast<long>(offset + n)));
  return a.tape->record(std::move(y), {a}, [a, offset](const Tensor& g) {
    auto& ga = a.tape->grad(a).data;
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g.data[i];
  });
}

Var concat(Var a, Var b) {
  same_tape(a, b);
  std::vector<double> d = a.value().data;
  const auto& bv = b.value().data;
  d.insert(d.end(), bv.begin(), bv.end());
  const std::size_t na = a.size(), n = d.size();
  Tensor y({n}, std::move(d));
  return a.tape->record(std::move(y), {a, b}, [a, b, na](const Tensor& g) {
    Tape* t = a.tape;
    if (t->requires_grad(a)) {
      auto& ga = t->grad(a).data;
      for (std::size_t i = 0; i < na; ++i) ga[i] += g.data[i];
    }
    if (t->requires_grad(b)) {
      auto& gb = t->grad(b).data;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.data[na + i];
    }
  });
}

Var transpose(Var a) {
  const Shape& s = a.shape();
  if (s.size() != 2) fail(ErrorKind::kDimension, "transpose expects a rank-2 tensor");
  const std::size_t r = s[0], c = s[1];
  const auto& x = a.value().data;
  Tensor y({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) y.data[j * r + i] = x[i * c + j];
  }
  return a.tape->record(std::move(y), {a}, [a, r, c](const Tensor& g) {
    auto& ga = a.tape->grad(a).data;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g.data[j * r + i];
    }
  });
}

Var stop_gradient(Var a) { return a.tape->constant(a.value()); }

Var conv1d(Var x, Var w, Var b) {
  same_tape(x, w);
  same_tape(x, b);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() != 2 || ws.size() != 3) fail(ErrorKind::kDimension, "conv1d expects x [C x L] and w [O x C x K]");
  const std::size_t ci = xs[0], len = xs[1], co = ws[0], k = ws[2];
  if (ws[1] != ci) fail(ErrorKind::kDimension, "conv1d channel mismatch");
  if (k % 2 == 0) fail(ErrorKind::kDimension, "conv1d kernel length must be odd");
  if (b.shape() != Shape{co}) fail(ErrorKind::kDimension, "conv1d bias must have one entry per output channel");
  const long c = static_cast<long>(k / 2);
  const long n = static_cast<long>(len);

  const double* xv = x.value().data.data();
  const double* wv = w.value().data.data();
  const double* bv = b.value().data.data();
  Tensor y({co, len});
  for (std::size_t o = 0; o < co; ++o) {
    double* out = y.data.data() + o * len;
    std::fill(out, out + len, bv[o]);
    for (std::size_t i = 0; i < ci; ++i) {
      const double* in = xv + i * len;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double wk = wv[(o * ci + i) * k + kk];
        const long off = static_cast<long>(kk) - c;  // out[l] += wk * in[l + off]
        const long lo = std::max(0L, -off), hi = std::min(n, n - off);
        for (long l = lo; l < hi; ++l) out[l] += wk * in[l + off];
      }
    }
  }

  return x.tape->record(std::move(y), {x, w, b}, [x, w, b, ci, co, k, c, n](const Tensor& g) {
    Tape* t = x.tape;
    const auto len = static_cast<std::size_t>(n);
    const double* gv = g.data.data();
    if (t->requires_grad(b)) {
      auto& gb = t->grad(b).data;
      for (std::size_t o = 0; o < co; ++o) {
        double s = 0.0;
        for (std::size_t l = 0; l < len; ++l) s += gv[o * len + l];
        gb[o] += s;
      }
    }
    const bool need_w = t->requires_grad(w);
    const bool need_x = t->requires_grad(x);
    if (!need_w && !need_x) return;
    const double* xv = x.value().data.data();
    const double* wv = w.value().data.data();
    double* gw = need_w ? t->grad(w).data.data() : nullptr;
    double* gx = need_x ? t->grad(x).data.data() : nullptr;
    for (std::size_t o = 0; o < co; ++o) {
      const double* go = gv + o * len;
      for (std::size_t i = 0; i < ci; ++i) {
        const double* in = xv + i * len;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const long off = static_cast<long>(kk) - c;
          const long lo = std::max(0L, -off), hi = std::min(n, n - off);
          const std::size_t wi = (o * ci + i) * k + kk;
          if (gw != nullptr) {
            double s = 0.0;
            for (long l = lo; l < hi; ++l) s += go[l] * in[l + off];
            gw[wi] += s;
          }
          if (gx != nullptr) {
            double* gin = gx + i * len;
            const double wk = wv[wi];
            for (long l = lo; l < hi; ++l) gin[l + off] += wk * go[l];
          }
        }
      }
    }
  });
}

Var linear(Var x, Var w, Var b) {
  same_tape(x, w);
  same_tape(x, b);
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws.size() != 2) fail(ErrorKind::kDimension, "linear weight must be [D_out x D_in]");
  const std::size_t dout = ws[0], din = ws[1];
  if (b.shape() != Shape{dout}) fail(ErrorKind::kDimension, "linear bias must be [D_out]");
  std::size_t rows = 0;
  Shape out_shape;
  if (xs.size() == 1 && xs[0] == din) {
    rows = 1;
    out_shape = {dout};
  } else if (xs.size() == 2 && xs[1] == din) {
    rows = xs[0];
    out_shape = {rows, dout};
  } else {
    fail(ErrorKind::kDimension, "linear input " + shape_string(xs) + " does not match weight " + shape_string(ws));
  }

  const double* xv = x.value().data.data();
  const double* wv = w.value().data.data();
  const double* bv = b.value().data.data();
  Tensor y(std::move(out_shape));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv + r * din;
    double* out = y.data.data() + r * dout;
    for (std::size_t o = 0; o < dout; ++o) {
      const double* wr = wv + o * din;
      double s = bv[o];
      for (std::size_t i = 0; i < din; ++i) s += wr[i] * in[i];
      out[o] = s;
    }
  }

  return x.tape->record(std::move(y), {x, w, b}, [x, w, b, rows, din, dout](const Tensor& g) {
    Tape* t = x.tape;
    const double* gv = g.data.data();
    if (t->requires_grad(b)) {
      auto& gb = t->grad(b).data;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < dout; ++o) gb[o] += gv[r * dout + o];
      }
    }
    if (t->requires_grad(w)) {
      double* gw = t->grad(w).data.data();
      const double* xv = x.value().data.data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < dout; ++o) {
          const double go = gv[r * dout + o];
          double* row = gw + o * din;
          for (std::size_t i = 0; i < din; ++i) row[i] += go * xv[r * din + i];
        }
      }
    }
    if (t->requires_grad(x)) {
      double* gx = t->grad(x).data.data();
      const double* wv = w.value().data.data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < dout; ++o) {
          const double go = gv[r * dout + o];
          const double* row = wv + o * din;
          for (std::size_t i = 0; i < din; ++i) gx[r * din + i] += go * row[i];
        }
      }
    }
  });
}

Var global_avg_pool(Var x) {
  const Shape& s = x.shape();
  if (s.size() != 2 || s[1] == 0) fail(ErrorKind::kDimension, "global_avg_pool expects a non-empty [C x L] tensor");
  const std::size_t ch = s[0], len = s[1];
  const auto& xv = x.value().data;
  Tensor y({ch});
  for (std::size_t c = 0; c < ch; ++c) {
    double acc = 0.0;
    for (std::size_t l = 0; l < len; ++l) acc += xv[c * len + l];
    y.data[c] = acc / static_cast<double>(len);
  }
  return x.tape->record(std::move(y), {x}, [x, ch, len](const Tensor& g) {
    auto& gx = x.tape->grad(x).data;
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t l = 0; l < len; ++l) gx[c * len + l] += g.data[c] * inv;
    }
  });
}

Var softmax(Var x) {
  if (x.shape().size() != 1) fail(ErrorKind::kDimension, "softmax expects a rank-1 tensor");
  const auto& xv = x.value().data;
  const double m = *std::max_element(xv.begin(), xv.end());
  Tensor y(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) z += (y.data[i] = std::exp(xv[i] - m));
  for (auto& v : y.data) v /= z;
  Tape* t = x.tape;
  const std::size_t out_id = t->node_count();
  return t->record(std::move(y), {x}, [x, t, out_id](const Tensor& g) {
    const auto& yv = t->value(Var{t, out_id}).data;
    double dot = 0.0;
    for (std::size_t i = 0; i < yv.size(); ++i) dot += g.data[i] * yv[i];
    auto& gx = t->grad(x).data;
    for (std::size_t i = 0; i < yv.size(); ++i) gx[i] += yv[i] * (g.data[i] - dot);
  });
}

Var complex_mul(Var a, Var b) {
  same_tape(a, b);
  const std::size_t n = complex_len(a, "complex_mul");
  if (complex_len(b, "complex_mul") != n) fail(ErrorKind::kDimension, "complex_mul lengths differ");
  const auto& av = a.value().data;
  const auto& bv = b.value().data;
  Tensor y({2, n});
  for (std::size_t k = 0; k < n; ++k) {
    const Complex p = Complex(av[k], av[n + k]) * Complex(bv[k], bv[n + k]);
    y.data[k] = p.real();
    y.data[n + k] = p.imag();
  }
  return a.tape->record(std::move(y), {a, b}, [a, b, n](const Tensor& g) {
    Tape* t = a.tape;
    const auto& av = a.value().data;
    const auto& bv = b.value().data;
    // dL/da = g conj(b), dL/db = g conj(a)
    for (int side = 0; side < 2; ++side) {
      const Var target = side == 0 ? a : b;
      if (!t->requires_grad(target)) continue;
      const auto& other = side == 0 ? bv : av;
      auto& gt = t->grad(target).data;
      for (std::size_t k = 0; k < n; ++k) {
        const Complex d = Complex(g.data[k], g.data[n + k]) * std::conj(Complex(other[k], other[n + k]));
        gt[k] += d.real();
        gt[n + k] += d.imag();
      }
    }
  });
}

Var complex_fir(Var x, Var taps) {
  same_tape(x, taps);
  const std::size_t n = complex_len(x, "complex_fir");
  const std::size_t k_len = complex_len(taps, "complex_fir");
  const ComplexSequence xs = complex_from(x.value());
  const ComplexSequence ts = complex_from(taps.value());
  Tensor y = planar_tensor(sigpath::fir_same(xs, ts));

  return x.tape->record(std::move(y), {x, taps}, [x, taps, n, k_len](const Tensor& g) {
    Tape* t = x.tape;
    const ComplexSequence gy = complex_from(g);
    const auto nl = static_cast<long>(n);
    const long center = static_cast<long>(k_len / 2);
    // y[m] = sum_k t[k] x[m + center - k]
    if (t->requires_grad(x)) {
      const ComplexSequence ts = complex_from(taps.value());
      ComplexSequence gx(n, Complex{});
      for (long k = 0; k < static_cast<long>(k_len); ++k) {
        const Complex tc = std::conj(ts[static_cast<std::size_t>(k)]);
        const long off = center - k;
        const long lo = std::max(0L, -off), hi = std::min(nl, nl - off);
        for (long m = lo; m < hi; ++m) gx[static_cast<std::size_t>(m + off)] += gy[static_cast<std::size_t>(m)] * tc;
      }
      accumulate(x, planar_tensor(gx));
    }
    if (t->requires_grad(taps)) {
      const ComplexSequence xs = complex_from(x.value());
      ComplexSequence gt(k_len, Complex{});
      for (long k = 0; k < static_cast<long>(k_len); ++k) {
        const long off = center - k;
        const long lo = std::max(0L, -off), hi = std::min(nl, nl - off);
        Complex s{};
        for (long m = lo; m < hi; ++m) {
          s += gy[static_cast<std::size_t>(m)] * std::conj(xs[static_cast<std::size_t>(m + off)]);
        }
        gt[static_cast<std::size_t>(k)] = s;
      }
      accumulate(taps, planar_tensor(gt));
    }
  });
}

Var frequency_shift(Var x, Var f) {
  same_tape(x, f);
  const std::size_t n = complex_len(x, "frequency_shift");
  if (f.size() != 1) fail(ErrorKind::kDimension, "frequency must be a 1-element tensor");
  Tensor y = planar_tensor(sigpath::correct_cfo(complex_from(x.value()), f.value().data[0]));
  Tape* t = x.tape;
  const std::size_t out_id = t->node_count();

  return t->record(std::move(y), {x, f}, [x, f, t, n, out_id](const Tensor& g) {
    const double freq = f.value().data[0];
    if (t->requires_grad(x)) {
      // dL/dx = g exp(+j 2 pi f k)
      const ComplexSequence gy = complex_from(g);
      ComplexSequence gx(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double ph = 2.0 * std::numbers::pi * freq * static_cast<double>(k);
        gx[k] = gy[k] * Complex(std::cos(ph), std::sin(ph));
      }
      accumulate(x, planar_tensor(gx));
    }
    if (t->requires_grad(f)) {
      // dy/df = -j 2 pi k y
      const auto& yv = t->value(Var{t, out_id}).data;
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const Complex dy = Complex(0.0, -2.0 * std::numbers::pi * static_cast<double>(k)) * Complex(yv[k], yv[n + k]);
        s += g.data[k] * dy.real() + g.data[n + k] * dy.imag();
      }
      t->grad(f).data[0] += s;
    }
  });
}

Var power_lag_phase(Var x, int power, const std::vector<std::size_t>& lags) {
  const std::size_t n = complex_len(x, "power_lag_phase");
  if (power < 1) fail(ErrorKind::kInvalidArgument, "power must be >= 1");
  if (lags.empty()) fail(ErrorKind::kEmptyInput, "power_lag_phase needs at least one lag");
  for (std::size_t l : lags) {
    if (l == 0 || l >= n) fail(ErrorKind::kInvalidArgument, "lag must lie in [1, n)");
  }
  const ComplexSequence xs = complex_from(x.value());
  ComplexSequence u(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex v = xs[k];
    for (int p = 1; p < power; ++p) v *= xs[k];
    u[k] = v;
  }
  std::vector<Complex> r(lags.size());
  Tensor y(Shape{lags.size()});
  for (std::size_t i = 0; i < lags.size(); ++i) {
    for (std::size_t k = lags[i]; k < n; ++k) r[i] += u[k] * std::conj(u[k - lags[i]]);
    y.data[i] = std::arg(r[i]);
  }
  Tape* t = x.tape;
  return t->record(std::move(y), {x}, [x, t, n, power, lags, xs, u, r](const Tensor& g) {
    if (!t->requires_grad(x)) return;
    // gradient with respect to u, packed as re + j im
    ComplexSequence gu(n);
    for (std::size_t i = 0; i < lags.size(); ++i) {
      if (std::norm(r[i]) == 0.0) continue;
      const std::size_t l = lags[i];
      const Complex inv = g.data[i] / r[i];
      for (std::size_t k = l; k < n; ++k) {
        const Complex c = std::conj(u[k - l]) * inv;  // Im(c du[k])
        gu[k] += Complex(c.imag(), c.real());
        const Complex d = u[k] * inv;  // Im(d conj(du[k-l]))
        gu[k - l] += Complex(d.imag(), -d.real());
      }
    }
    Tensor gx(Shape{2, n});
    for (std::size_t k = 0; k < n; ++k) {
      Complex du(static_cast<double>(power), 0.0);
      for (int p = 1; p < power; ++p) du *= xs[k];
      const Complex v = std::conj(du) * gu[k];
      gx.data[k] = v.real();
      gx.data[n + k] = v.imag();
    }
    accumulate(x, gx);
  });
}

}  // namespace dualpath::nn
