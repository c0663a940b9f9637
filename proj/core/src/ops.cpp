#include "hgconv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hgconv/rng.hpp"

namespace hgconv {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw std::invalid_argument("op on empty Var");
  return *v.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      for (std::size_t j = 0; j < m; ++j) out(i, j) += aip * B(p, j);
    }
  Tape* tp = &tape_of(a);
  return tp->record("matmul", std::move(out), {a, b}, [a, b, tp, n, k, m](const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (a.requires_grad()) {
      Tensor& ga = tp->grad_buffer(a);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g(i, j) * B(p, j);
          ga(i, p) += acc;
        }
    }
    if (b.requires_grad()) {
      Tensor& gb = tp->grad_buffer(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          for (std::size_t j = 0; j < m; ++j) gb(p, j) += aip * g(i, j);
        }
    }
  });
}

Var linear(Var x, Var w) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.cols() != W.cols()) shape_error("linear", X, W);
  const std::size_t n = X.rows(), in = X.cols(), out_dim = W.rows();
  Tensor out(n, out_dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto xr = X.row(i);
    for (std::size_t o = 0; o < out_dim; ++o) {
      auto wr = W.row(o);
      double acc = 0.0;
      for (std::size_t p = 0; p < in; ++p) acc += xr[p] * wr[p];
      out(i, o) = acc;
    }
  }
  Tape* tp = &tape_of(x);
  return tp->record("linear", std::move(out), {x, w},
                    [x, w, tp, n, in, out_dim](const Tensor& g) {
                      const Tensor& X = x.value();
                      const Tensor& W = w.value();
                      if (x.requires_grad()) {
                        Tensor& gx = tp->grad_buffer(x);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t o = 0; o < out_dim; ++o) {
                            const double gio = g(i, o);
                            if (gio == 0.0) continue;
                            for (std::size_t p = 0; p < in; ++p) gx(i, p) += gio * W(o, p);
                          }
                      }
                      if (w.requires_grad()) {
                        Tensor& gw = tp->grad_buffer(w);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t o = 0; o < out_dim; ++o) {
                            const double gio = g(i, o);
                            if (gio == 0.0) continue;
                            for (std::size_t p = 0; p < in; ++p) gw(o, p) += gio * X(i, p);
                          }
                      }
                    });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor out = A;
  auto o = out.data();
  auto bs = B.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
  Tape* tp = &tape_of(a);
  return tp->record("add", std::move(out), {a, b}, [a, b, tp](const Tensor& g) {
    tp->accumulate(a, g);
    tp->accumulate(b, g);
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& X = x.value();
  const Tensor& B = bias.value();
  if (B.rows() != 1 || B.cols() != X.cols()) shape_error("add_bias", X, B);
  Tensor out = X;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += B(0, j);
  Tape* tp = &tape_of(x);
  return tp->record("add_bias", std::move(out), {x, bias}, [x, bias, tp](const Tensor& g) {
    tp->accumulate(x, g);
    if (bias.requires_grad()) {
      Tensor& gb = tp->grad_buffer(bias);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  Tape* tp = &tape_of(a);
  return tp->record("scale", std::move(out), {a}, [a, tp, s](const Tensor& g) {
    Tensor& ga = tp->grad_buffer(a);
    auto gs = g.data();
    auto o = ga.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += s * gs[i];
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  Tape* tp = &tape_of(a);
  return tp->record("sum", Tensor::scalar(acc), {a}, [a, tp](const Tensor& g) {
    const double gv = g(0, 0);
    for (double& v : tp->grad_buffer(a).data()) v += gv;
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != n) shape_error("concat_cols", parts.front().value(), p.value());
    total += p.cols();
  }
  Tensor out(n, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) out(i, off + j) = P(i, j);
    off += P.cols();
  }
  Tape* tp = &tape_of(parts.front());
  return tp->record("concat_cols", std::move(out), parts, [parts, tp](const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : parts) {
      const std::size_t c = p.cols();
      if (p.requires_grad()) {
        Tensor& gp = tp->grad_buffer(p);
        for (std::size_t i = 0; i < gp.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) gp(i, j) += g(i, off + j);
      }
      off += c;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t m = parts.front().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.cols() != m) shape_error("concat_rows", parts.front().value(), p.value());
    total += p.rows();
  }
  std::vector<double> values;
  values.reserve(total * m);
  for (const Var& p : parts) {
    auto d = p.value().data();
    values.insert(values.end(), d.begin(), d.end());
  }
  Tape* tp = &tape_of(parts.front());
  return tp->record("concat_rows", Tensor(total, m, std::move(values)), parts,
                    [parts, tp](const Tensor& g) {
                      std::size_t off = 0;
                      for (const Var& p : parts) {
                        const std::size_t len = p.value().size();
                        if (p.requires_grad()) {
                          auto gp = tp->grad_buffer(p).data();
                          auto gs = g.data();
                          for (std::size_t i = 0; i < len; ++i) gp[i] += gs[off + i];
                        }
                        off += len;
                      }
                    });
}

Var row_select(Var a, const Index& rows) {
  const Tensor& A = a.value();
  Tensor out(rows.size(), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= A.rows()) throw std::out_of_range("row_select: row index out of range");
    auto src = A.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  Tape* tp = &tape_of(a);
  return tp->record("row_select", std::move(out), {a}, [a, rows, tp](const Tensor& g) {
    Tensor& ga = tp->grad_buffer(a);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = ga.row(rows[i]);
      auto src = g.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

namespace {

// Shared elementwise driver: forward f(x), backward multiplies by df(x, y).
template <class F, class DF>
Var elementwise(const char* op, Var a, F f, DF df) {
  const Tensor& X = a.value();
  Tensor out(X.rows(), X.cols());
  auto xs = X.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = f(xs[i]);
  Tape* tp = &tape_of(a);
  // Output values are needed by some derivatives; keep a copy in the closure.
  Tensor y_copy = out;
  return tp->record(op, std::move(out), {a}, [a, tp, df, y = std::move(y_copy)](const Tensor& g) {
    auto xs = a.value().data();
    auto ys = y.data();
    auto gs = g.data();
    auto o = tp->grad_buffer(a).data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += gs[i] * df(xs[i], ys[i]);
  });
}

}  // namespace

Var leaky_relu(Var a, double slope) {
  return elementwise(
      "leaky_relu", a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var relu(Var a) {
  return elementwise(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elu(Var a, double alpha) {
  return elementwise(
      "elu", a, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
      [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

Var sigmoid(Var a) {
  return elementwise(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log_sigmoid(Var a) {
  return elementwise(
      "log_sigmoid", a,
      [](double x) { return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)))); },
      [](double x, double) {
        // d/dx log σ(x) = σ(-x)
        if (x >= 0.0) {
          const double e = std::exp(-x);
          return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(x));
      });
}

Var activate(Var a, Activation kind) {
  switch (kind) {
    case Activation::relu: return relu(a);
    case Activation::elu: return elu(a);
    case Activation::sigmoid: return sigmoid(a);
    case Activation::identity: return a;
  }
  throw std::invalid_argument("activate: unknown activation");
}

Var dropout(Var a, double p, std::uint64_t seed, bool train) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (!train || p == 0.0) return a;
  const Tensor& X = a.value();
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(X.rows(), X.cols());
  for (double& m : mask.data()) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = X;
  auto o = out.data();
  auto ms = mask.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= ms[i];
  Tape* tp = &tape_of(a);
  return tp->record("dropout", std::move(out), {a}, [a, tp, mask = std::move(mask)](const Tensor& g) {
    auto o = tp->grad_buffer(a).data();
    auto gs = g.data();
    auto ms = mask.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += gs[i] * ms[i];
  });
}

Var segment_sum(Var values, const Index& segment_ids, std::size_t num_segments) {
  const Tensor& X = values.value();
  if (segment_ids.size() != X.rows()) {
    throw std::invalid_argument("segment_sum: one segment id per row required");
  }
  Tensor out(num_segments, X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const std::size_t s = segment_ids[i];
    if (s >= num_segments) throw std::out_of_range("segment_sum: segment id out of range");
    auto dst = out.row(s);
    auto src = X.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  Tape* tp = &tape_of(values);
  return tp->record("segment_sum", std::move(out), {values},
                    [values, segment_ids, tp](const Tensor& g) {
                      Tensor& gv = tp->grad_buffer(values);
                      for (std::size_t i = 0; i < segment_ids.size(); ++i) {
                        auto dst = gv.row(i);
                        auto src = g.row(segment_ids[i]);
                        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                      }
                    });
}

Var segment_softmax(Var scores, const Index& segment_ids, std::size_t num_segments) {
  const Tensor& S = scores.value();
  const std::size_t rows = S.rows(), cols = S.cols();
  if (segment_ids.size() != rows) {
    throw std::invalid_argument("segment_softmax: one segment id per row required");
  }
  std::vector<std::size_t> counts(num_segments, 0);
  for (std::size_t s : segment_ids) {
    if (s >= num_segments) throw std::out_of_range("segment_softmax: segment id out of range");
    ++counts[s];
  }
  for (std::size_t s = 0; s < num_segments; ++s) {
    if (counts[s] == 0) {
      throw std::invalid_argument("segment_softmax: empty segment " + std::to_string(s));
    }
  }
  Tensor seg_max(num_segments, cols, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k)
      seg_max(segment_ids[i], k) = std::max(seg_max(segment_ids[i], k), S(i, k));
  Tensor out(rows, cols);
  Tensor denom(num_segments, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) {
      const double e = std::exp(S(i, k) - seg_max(segment_ids[i], k));
      out(i, k) = e;
      denom(segment_ids[i], k) += e;
    }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) out(i, k) /= denom(segment_ids[i], k);

  Tensor y = out;
  Tape* tp = &tape_of(scores);
  return tp->record(
      "segment_softmax", std::move(out), {scores},
      [scores, segment_ids, num_segments, tp, y = std::move(y)](const Tensor& g) {
        const std::size_t rows = y.rows(), cols = y.cols();
        Tensor dot(num_segments, cols);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t k = 0; k < cols; ++k) dot(segment_ids[i], k) += g(i, k) * y(i, k);
        Tensor& gs = tp->grad_buffer(scores);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t k = 0; k < cols; ++k)
            gs(i, k) += y(i, k) * (g(i, k) - dot(segment_ids[i], k));
      });
}

Var head_dot(Var x, Var att, std::size_t offset) {
  const Tensor& X = x.value();
  const Tensor& A = att.value();
  const std::size_t heads = A.rows();
  if (heads == 0 || X.cols() % heads != 0) shape_error("head_dot", X, A);
  const std::size_t d = X.cols() / heads;
  if (offset + d > A.cols()) shape_error("head_dot", X, A);
  const std::size_t n = X.rows();
  Tensor out(n, heads);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < heads; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += X(i, k * d + j) * A(k, offset + j);
      out(i, k) = acc;
    }
  Tape* tp = &tape_of(x);
  return tp->record("head_dot", std::move(out), {x, att},
                    [x, att, offset, heads, d, n, tp](const Tensor& g) {
                      const Tensor& X = x.value();
                      const Tensor& A = att.value();
                      if (x.requires_grad()) {
                        Tensor& gx = tp->grad_buffer(x);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t k = 0; k < heads; ++k)
                            for (std::size_t j = 0; j < d; ++j)
                              gx(i, k * d + j) += g(i, k) * A(k, offset + j);
                      }
                      if (att.requires_grad()) {
                        Tensor& ga = tp->grad_buffer(att);
                        for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t k = 0; k < heads; ++k)
                            for (std::size_t j = 0; j < d; ++j)
                              ga(k, offset + j) += g(i, k) * X(i, k * d + j);
                      }
                    });
}

Var head_scale(Var x, Var w) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  const std::size_t heads = W.cols();
  if (W.rows() != X.rows() || heads == 0 || X.cols() % heads != 0) shape_error("head_scale", X, W);
  const std::size_t d = X.cols() / heads;
  const std::size_t n = X.rows();
  Tensor out(n, X.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < heads; ++k)
      for (std::size_t j = 0; j < d; ++j) out(i, k * d + j) = X(i, k * d + j) * W(i, k);
  Tape* tp = &tape_of(x);
  return tp->record("head_scale", std::move(out), {x, w}, [x, w, heads, d, n, tp](const Tensor& g) {
    const Tensor& X = x.value();
    const Tensor& W = w.value();
    if (x.requires_grad()) {
      Tensor& gx = tp->grad_buffer(x);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < heads; ++k)
          for (std::size_t j = 0; j < d; ++j) gx(i, k * d + j) += g(i, k * d + j) * W(i, k);
    }
    if (w.requires_grad()) {
      Tensor& gw = tp->grad_buffer(w);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < heads; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += g(i, k * d + j) * X(i, k * d + j);
          gw(i, k) += acc;
        }
    }
  });
}

Var lerp(Var x, Var y, Var s) {
  const Tensor& X = x.value();
  const Tensor& Y = y.value();
  if (!X.same_shape(Y)) shape_error("lerp", X, Y);
  if (s.value().size() != 1) throw std::invalid_argument("lerp: weight must be 1x1");
  const double w = s.value().item();
  Tensor out(X.rows(), X.cols());
  auto xs = X.data();
  auto ys = Y.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = w * xs[i] + (1.0 - w) * ys[i];
  Tape* tp = &tape_of(x);
  return tp->record("lerp", std::move(out), {x, y, s}, [x, y, s, w, tp](const Tensor& g) {
    auto gs = g.data();
    if (x.requires_grad()) {
      auto o = tp->grad_buffer(x).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += w * gs[i];
    }
    if (y.requires_grad()) {
      auto o = tp->grad_buffer(y).data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += (1.0 - w) * gs[i];
    }
    if (s.requires_grad()) {
      auto xs = x.value().data();
      auto ys = y.value().data();
      double acc = 0.0;
      for (std::size_t i = 0; i < gs.size(); ++i) acc += gs[i] * (xs[i] - ys[i]);
      tp->grad_buffer(s)(0, 0) += acc;
    }
  });
}

Var row_dot(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("row_dot", A, B);
  Tensor out(A.rows(), 1);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) acc += A(i, j) * B(i, j);
    out(i, 0) = acc;
  }
  Tape* tp = &tape_of(a);
  return tp->record("row_dot", std::move(out), {a, b}, [a, b, tp](const Tensor& g) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (a.requires_grad()) {
      Tensor& ga = tp->grad_buffer(a);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) ga(i, j) += g(i, 0) * B(i, j);
    }
    if (b.requires_grad()) {
      Tensor& gb = tp->grad_buffer(b);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) gb(i, j) += g(i, 0) * A(i, j);
    }
  });
}

Var softmax_cross_entropy(Var logits, const Index& labels) {
  const Tensor& L = logits.value();
  if (labels.size() != L.rows()) {
    throw std::invalid_argument("softmax_cross_entropy: one label per row required");
  }
  const std::size_t n = L.rows(), c = L.cols();
  Tensor probs(n, c);
  double loss = 0.0, carry = 0.0;  // Neumaier-compensated row sum
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                              " outside [0, " + std::to_string(c) + ")");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, L(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs(i, j) = std::exp(L(i, j) - mx);
      z += probs(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) probs(i, j) /= z;
    const double term = (mx + std::log(z)) - L(i, labels[i]);
    const double next = loss + term;
    carry += std::abs(loss) >= std::abs(term) ? (loss - next) + term : (term - next) + loss;
    loss = next;
  }
  loss += carry;
  Tape* tp = &tape_of(logits);
  return tp->record("softmax_cross_entropy", Tensor::scalar(loss), {logits},
                    [logits, labels, tp, p = std::move(probs)](const Tensor& g) {
                      const double gv = g(0, 0);
                      Tensor& gl = tp->grad_buffer(logits);
                      for (std::size_t i = 0; i < p.rows(); ++i)
                        for (std::size_t j = 0; j < p.cols(); ++j)
                          gl(i, j) += gv * (p(i, j) - (j == labels[i] ? 1.0 : 0.0));
                    });
}

}  // namespace hgconv
