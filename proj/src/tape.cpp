#include "posegen/tape.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "posegen/kernels.hpp"

namespace posegen {

double gaussian_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double gelu_value(double x) { return x * gaussian_cdf(x); }

namespace {

constexpr double kLayerNormEps = 1e-5;

double gaussian_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     Tensor<T>::shape_string(a.shape) + " vs " +
                     Tensor<T>::shape_string(b.shape));
  }
}

template <class T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

}  // namespace

template <class T>
typename Tape<T>::Id Tape<T>::push(Tensor<T> value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, requires_grad, {}});
  return nodes_.size() - 1;
}

template <class T>
typename Tape<T>::Id Tape<T>::constant(Tensor<T> value) {
  check_finite(value, "constant");
  return push(std::move(value), false);
}

template <class T>
typename Tape<T>::Id Tape<T>::param(Parameter<T>& p) {
  if (p.grad.shape != p.value.shape) p.grad = Tensor<T>(p.value.shape);
  nodes_.push_back(Node{{}, {}, &p, true, {}});
  return nodes_.size() - 1;
}

template <class T>
const Tensor<T>& Tape<T>::value(Id id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->value : n.value;
}

template <class T>
const Tensor<T>& Tape<T>::grad(Id id) const {
  const Node& n = nodes_.at(id);
  return n.param ? n.param->grad : n.grad;
}

template <class T>
Tensor<T>& Tape<T>::grad_buffer(Id id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (n.grad.shape != n.value.shape) n.grad = Tensor<T>(n.value.shape);
  return n.grad;
}

template <class T>
void Tape<T>::check_finite(const Tensor<T>& t, const char* op) const {
  for (T v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op +
                         (scope_.empty() ? "" : " in " + scope_));
    }
  }
}

template <class T>
void Tape<T>::clear() {
  nodes_.clear();
}

template <class T>
typename Tape<T>::Id Tape<T>::affine(Id x, Id w, Id b) {
  const Tensor<T>& X = value(x);
  const Tensor<T>& W = value(w);
  const Tensor<T>& Bv = value(b);
  if (W.shape.size() != 2 || X.cols() != W.shape[0] || Bv.size() != W.shape[1]) {
    throw ShapeError("affine: incompatible shapes x" +
                     Tensor<T>::shape_string(X.shape) + " W" +
                     Tensor<T>::shape_string(W.shape) + " b" +
                     Tensor<T>::shape_string(Bv.shape));
  }
  const std::size_t rows = X.rows(), in = W.shape[0], out = W.shape[1];
  std::vector<std::size_t> yshape = X.shape;
  yshape.back() = out;
  Tensor<T> Y(yshape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(Bv.data.begin(), Bv.data.end(), Y.data.begin() + r * out);
  }
  kernels::gemm<T>(rows, out, in, X.ptr(), in, 1, W.ptr(), out, Y.ptr(), out);
  check_finite(Y, "affine");
  const bool need = requires_grad(x) || requires_grad(w) || requires_grad(b);
  const Id y = push(std::move(Y), need);
  if (need) {
    nodes_[y].backward = [this, x, w, b, y, rows, in, out] {
      const Tensor<T>& dY = nodes_[y].grad;
      if (requires_grad(x)) {
        const Tensor<T>& Wv = value(w);
        std::vector<T> wt(in * out);
        transpose(Wv.ptr(), in, out, wt.data());
        kernels::gemm<T>(rows, in, out, dY.ptr(), out, 1, wt.data(), in,
                         grad_buffer(x).ptr(), in);
      }
      if (requires_grad(w)) {
        kernels::gemm<T>(in, out, rows, value(x).ptr(), 1, in, dY.ptr(), out,
                         grad_buffer(w).ptr(), out);
      }
      if (requires_grad(b)) {
        T* db = grad_buffer(b).ptr();
        for (std::size_t r = 0; r < rows; ++r) {
          kernels::axpy<T>(out, T(1), dY.ptr() + r * out, db);
        }
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::gelu(Id x) {
  const Tensor<T>& X = value(x);
  Tensor<T> Y(X.shape);
  for (std::size_t i = 0; i < X.size(); ++i) {
    Y.data[i] = static_cast<T>(gelu_value(static_cast<double>(X.data[i])));
  }
  check_finite(Y, "gelu");
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y] {
      const Tensor<T>& X = value(x);
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t i = 0; i < X.size(); ++i) {
        const double v = X.data[i];
        dX.data[i] += static_cast<T>(
            dY.data[i] * (gaussian_cdf(v) + v * gaussian_pdf(v)));
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::layer_norm(Id x, Id gain, Id bias) {
  const Tensor<T>& X = value(x);
  const std::size_t d = X.cols(), rows = X.rows();
  if (d < 2 || value(gain).size() != d || value(bias).size() != d) {
    throw ShapeError("layer_norm: feature width mismatch for x" +
                     Tensor<T>::shape_string(X.shape));
  }
  Tensor<T> Y(X.shape);
  // Normalized rows and inverse std are kept for backward.
  auto xhat = std::make_shared<std::vector<T>>(X.size());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  const T* g = value(gain).ptr();
  const T* bb = value(bias).ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = X.ptr() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = xr[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    (*rstd)[r] = static_cast<T>(rs);
    for (std::size_t i = 0; i < d; ++i) {
      const T xh = static_cast<T>((xr[i] - mean) * rs);
      (*xhat)[r * d + i] = xh;
      Y.data[r * d + i] = xh * g[i] + bb[i];
    }
  }
  check_finite(Y, "layer_norm");
  const bool need = requires_grad(x) || requires_grad(gain) || requires_grad(bias);
  const Id y = push(std::move(Y), need);
  if (need) {
    nodes_[y].backward = [this, x, gain, bias, y, xhat, rstd, rows, d] {
      const Tensor<T>& dY = nodes_[y].grad;
      const T* g = value(gain).ptr();
      T* dg = requires_grad(gain) ? grad_buffer(gain).ptr() : nullptr;
      T* db = requires_grad(bias) ? grad_buffer(bias).ptr() : nullptr;
      T* dx = requires_grad(x) ? grad_buffer(x).ptr() : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        const T* dyr = dY.ptr() + r * d;
        const T* xh = xhat->data() + r * d;
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double dxh = static_cast<double>(dyr[i]) * g[i];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xh[i];
          if (dg) dg[i] += dyr[i] * xh[i];
          if (db) db[i] += dyr[i];
        }
        mean_dxh /= static_cast<double>(d);
        mean_dxh_xh /= static_cast<double>(d);
        if (dx) {
          const double rs = (*rstd)[r];
          for (std::size_t i = 0; i < d; ++i) {
            const double dxh = static_cast<double>(dyr[i]) * g[i];
            dx[r * d + i] +=
                static_cast<T>(rs * (dxh - mean_dxh - xh[i] * mean_dxh_xh));
          }
        }
      }
    };
  }
  return y;
}

namespace {

template <class T>
void softmax_row(const T* x, T* y, std::size_t n) {
  T mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(static_cast<double>(x[i] - mx));
    y[i] = static_cast<T>(e);
    sum += e;
  }
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<T>(y[i] / sum);
}

// dx += y * (dy - <dy, y>)
template <class T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(dy[i]) * y[i];
  for (std::size_t i = 0; i < n; ++i) dx[i] += static_cast<T>(y[i] * (dy[i] - s));
}

}  // namespace

template <class T>
typename Tape<T>::Id Tape<T>::softmax(Id x) {
  const Tensor<T>& X = value(x);
  const std::size_t n = X.cols();
  Tensor<T> Y(X.shape);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    softmax_row(X.ptr() + r * n, Y.ptr() + r * n, n);
  }
  check_finite(Y, "softmax");
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y, n] {
      const Tensor<T>& Yv = nodes_[y].value;
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t r = 0; r < Yv.rows(); ++r) {
        softmax_row_backward(Yv.ptr() + r * n, dY.ptr() + r * n,
                             dX.ptr() + r * n, n);
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::attention(Id q, Id k, Id v, std::size_t seq_len,
                                        std::size_t heads) {
  const Tensor<T>& Q = value(q);
  const Tensor<T>& K = value(k);
  const Tensor<T>& V = value(v);
  require_same_shape(Q, K, "attention");
  require_same_shape(Q, V, "attention");
  const std::size_t d = Q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  if (seq_len == 0 || Q.rows() % seq_len != 0) {
    throw ShapeError("attention: row count not a multiple of sequence length");
  }
  const std::size_t n_seq = Q.rows() / seq_len, dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  // Attention weights per (sequence, head): seq_len x seq_len.
  auto probs = std::make_shared<std::vector<T>>(n_seq * heads * seq_len * seq_len);
  Tensor<T> O(Q.shape);
  std::vector<T> logits(seq_len);
  for (std::size_t s = 0; s < n_seq; ++s) {
    for (std::size_t h = 0; h < heads; ++h) {
      T* P = probs->data() + (s * heads + h) * seq_len * seq_len;
      for (std::size_t i = 0; i < seq_len; ++i) {
        const T* qi = Q.ptr() + (s * seq_len + i) * d + h * dh;
        for (std::size_t j = 0; j < seq_len; ++j) {
          const T* kj = K.ptr() + (s * seq_len + j) * d + h * dh;
          logits[j] = kernels::dot<T>(dh, qi, kj) * scale;
        }
        softmax_row(logits.data(), P + i * seq_len, seq_len);
        T* oi = O.ptr() + (s * seq_len + i) * d + h * dh;
        for (std::size_t j = 0; j < seq_len; ++j) {
          const T* vj = V.ptr() + (s * seq_len + j) * d + h * dh;
          kernels::axpy<T>(dh, P[i * seq_len + j], vj, oi);
        }
      }
    }
  }
  check_finite(O, "attention");
  const bool need = requires_grad(q) || requires_grad(k) || requires_grad(v);
  const Id y = push(std::move(O), need);
  if (need) {
    nodes_[y].backward = [this, q, k, v, y, probs, seq_len, heads, n_seq, d, dh,
                          scale] {
      const Tensor<T>& Qv = value(q);
      const Tensor<T>& Kv = value(k);
      const Tensor<T>& Vv = value(v);
      const Tensor<T>& dO = nodes_[y].grad;
      Tensor<T>* dQ = requires_grad(q) ? &grad_buffer(q) : nullptr;
      Tensor<T>* dK = requires_grad(k) ? &grad_buffer(k) : nullptr;
      Tensor<T>* dV = requires_grad(v) ? &grad_buffer(v) : nullptr;
      std::vector<T> dP(seq_len), dS(seq_len);
      for (std::size_t s = 0; s < n_seq; ++s) {
        for (std::size_t h = 0; h < heads; ++h) {
          const T* P = probs->data() + (s * heads + h) * seq_len * seq_len;
          for (std::size_t i = 0; i < seq_len; ++i) {
            const std::size_t ri = (s * seq_len + i) * d + h * dh;
            const T* doi = dO.ptr() + ri;
            for (std::size_t j = 0; j < seq_len; ++j) {
              const std::size_t rj = (s * seq_len + j) * d + h * dh;
              dP[j] = kernels::dot<T>(dh, doi, Vv.ptr() + rj);
              if (dV) kernels::axpy<T>(dh, P[i * seq_len + j], doi, dV->ptr() + rj);
            }
            std::fill(dS.begin(), dS.end(), T(0));
            softmax_row_backward(P + i * seq_len, dP.data(), dS.data(), seq_len);
            for (std::size_t j = 0; j < seq_len; ++j) {
              const std::size_t rj = (s * seq_len + j) * d + h * dh;
              const T g = dS[j] * scale;
              if (dQ) kernels::axpy<T>(dh, g, Kv.ptr() + rj, dQ->ptr() + ri);
              if (dK) kernels::axpy<T>(dh, g, Qv.ptr() + ri, dK->ptr() + rj);
            }
          }
        }
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::dropout(Id x, double p, bool train, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
  if (!train || p == 0.0) return x;
  const Tensor<T>& X = value(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  auto mask = std::make_shared<std::vector<T>>(X.size());
  Tensor<T> Y(X.shape);
  for (std::size_t i = 0; i < X.size(); ++i) {
    (*mask)[i] = rng.bernoulli(p) ? T(0) : keep_scale;
    Y.data[i] = X.data[i] * (*mask)[i];
  }
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y, mask] {
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t i = 0; i < dY.size(); ++i) dX.data[i] += dY.data[i] * (*mask)[i];
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::add(Id a, Id b) {
  const Tensor<T>& A = value(a);
  const Tensor<T>& B = value(b);
  require_same_shape(A, B, "add");
  Tensor<T> Y = A;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] += B.data[i];
  check_finite(Y, "add");
  const bool need = requires_grad(a) || requires_grad(b);
  const Id y = push(std::move(Y), need);
  if (need) {
    nodes_[y].backward = [this, a, b, y] {
      const Tensor<T>& dY = nodes_[y].grad;
      for (Id src : {a, b}) {
        if (!requires_grad(src)) continue;
        kernels::axpy<T>(dY.size(), T(1), dY.ptr(), grad_buffer(src).ptr());
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::add_row(Id x, Id row) {
  const Tensor<T>& X = value(x);
  const Tensor<T>& R = value(row);
  const std::size_t d = X.cols();
  if (R.size() != d) {
    throw ShapeError("add_row: row width " + std::to_string(R.size()) +
                     " vs " + std::to_string(d));
  }
  Tensor<T> Y = X;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    kernels::axpy<T>(d, T(1), R.ptr(), Y.ptr() + r * d);
  }
  check_finite(Y, "add_row");
  const bool need = requires_grad(x) || requires_grad(row);
  const Id y = push(std::move(Y), need);
  if (need) {
    nodes_[y].backward = [this, x, row, y, d] {
      const Tensor<T>& dY = nodes_[y].grad;
      if (requires_grad(x)) {
        kernels::axpy<T>(dY.size(), T(1), dY.ptr(), grad_buffer(x).ptr());
      }
      if (requires_grad(row)) {
        T* dr = grad_buffer(row).ptr();
        for (std::size_t r = 0; r < dY.rows(); ++r) {
          kernels::axpy<T>(d, T(1), dY.ptr() + r * d, dr);
        }
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::l2_normalize(Id x) {
  const Tensor<T>& X = value(x);
  const std::size_t d = X.cols();
  Tensor<T> Y(X.shape);
  auto inv_norm = std::make_shared<std::vector<T>>(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      n2 += static_cast<double>(X.data[r * d + i]) * X.data[r * d + i];
    }
    if (n2 == 0.0) {
      throw NumericError("l2_normalize: zero vector" +
                         (scope_.empty() ? std::string() : " in " + scope_));
    }
    const double inv = 1.0 / std::sqrt(n2);
    (*inv_norm)[r] = static_cast<T>(inv);
    for (std::size_t i = 0; i < d; ++i) {
      Y.data[r * d + i] = static_cast<T>(X.data[r * d + i] * inv);
    }
  }
  check_finite(Y, "l2_normalize");
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y, inv_norm, d] {
      const Tensor<T>& Yv = nodes_[y].value;
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t r = 0; r < Yv.rows(); ++r) {
        const T* yr = Yv.ptr() + r * d;
        const T* dyr = dY.ptr() + r * d;
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(yr[i]) * dyr[i];
        for (std::size_t i = 0; i < d; ++i) {
          dX.data[r * d + i] += static_cast<T>((dyr[i] - yr[i] * s) * (*inv_norm)[r]);
        }
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::clamp(Id x, T lo, T hi) {
  const Tensor<T>& X = value(x);
  Tensor<T> Y(X.shape);
  for (std::size_t i = 0; i < X.size(); ++i) {
    Y.data[i] = std::min(std::max(X.data[i], lo), hi);
  }
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y, lo, hi] {
      const Tensor<T>& Xv = value(x);
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t i = 0; i < Xv.size(); ++i) {
        if (Xv.data[i] >= lo && Xv.data[i] <= hi) dX.data[i] += dY.data[i];
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::prepend_tokens(Id x, Id tokens) {
  const Tensor<T>& X = value(x);
  const Tensor<T>& Tk = value(tokens);
  const std::size_t d = X.cols();
  if (Tk.cols() != d) throw ShapeError("prepend_tokens: width mismatch");
  const std::size_t n = X.rows(), k = Tk.rows(), s = k + 1;
  Tensor<T> Y({n * s, d});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(Tk.data.begin(), Tk.data.end(), Y.data.begin() + i * s * d);
    std::copy(X.data.begin() + i * d, X.data.begin() + (i + 1) * d,
              Y.data.begin() + (i * s + k) * d);
  }
  const bool need = requires_grad(x) || requires_grad(tokens);
  const Id y = push(std::move(Y), need);
  if (need) {
    nodes_[y].backward = [this, x, tokens, y, n, k, s, d] {
      const Tensor<T>& dY = nodes_[y].grad;
      for (std::size_t i = 0; i < n; ++i) {
        if (requires_grad(tokens)) {
          kernels::axpy<T>(k * d, T(1), dY.ptr() + i * s * d,
                           grad_buffer(tokens).ptr());
        }
        if (requires_grad(x)) {
          kernels::axpy<T>(d, T(1), dY.ptr() + (i * s + k) * d,
                           grad_buffer(x).ptr() + i * d);
        }
      }
    };
  }
  return y;
}

template <class T>
typename Tape<T>::Id Tape<T>::mean_pool(Id x, std::size_t group) {
  const Tensor<T>& X = value(x);
  const std::size_t d = X.cols();
  if (group == 0 || X.rows() % group != 0) {
    throw ShapeError("mean_pool: rows not a multiple of the group size");
  }
  const std::size_t n = X.rows() / group;
  const T inv = static_cast<T>(1.0 / static_cast<double>(group));
  Tensor<T> Y({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < group; ++g) {
      kernels::axpy<T>(d, inv, X.ptr() + (i * group + g) * d, Y.ptr() + i * d);
    }
  }
  const Id y = push(std::move(Y), requires_grad(x));
  if (requires_grad(x)) {
    nodes_[y].backward = [this, x, y, n, group, d, inv] {
      const Tensor<T>& dY = nodes_[y].grad;
      Tensor<T>& dX = grad_buffer(x);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < group; ++g) {
          kernels::axpy<T>(d, inv, dY.ptr() + i * d, dX.ptr() + (i * group + g) * d);
        }
      }
    };
  }
  return y;
}

template <class T>
void Tape<T>::seed_grad(Id id, const Tensor<T>& seed) {
  if (value(id).size() != seed.size()) {
    throw ShapeError("seed_grad: gradient shape " +
                     Tensor<T>::shape_string(seed.shape) + " vs value " +
                     Tensor<T>::shape_string(value(id).shape));
  }
  if (!requires_grad(id)) return;
  Tensor<T>& g = grad_buffer(id);
  for (std::size_t i = 0; i < seed.size(); ++i) g.data[i] += seed.data[i];
}

template <class T>
void Tape<T>::backward(Id out, const Tensor<T>& seed) {
  seed_grad(out, seed);
  backward();
}

template <class T>
void Tape<T>::backward() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    if (n.grad.shape != n.value.shape) continue;  // not reached
    n.backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace posegen
