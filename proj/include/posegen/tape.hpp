#pragma once

// Reverse-mode differentiation over an explicit tape.
//
// Values are appended in execution order; backward() walks the tape in
// reverse and accumulates gradients. Leaves bound to a Parameter write their
// gradient straight into Parameter::grad (accumulating across calls, the
// optimizer zeroes it). Constants never receive gradients, so no work is
// spent on d(input).
//
// A tape is single-threaded. Every forward primitive checks its output for
// NaN/Inf and throws NumericError naming the current scope.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "posegen/rng.hpp"
#include "posegen/tensor.hpp"

namespace posegen {

template <class T>
class Tape {
 public:
  using Id = std::size_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Id constant(Tensor<T> value);
  Id param(Parameter<T>& p);

  const Tensor<T>& value(Id id) const;
  // Gradient of id after backward(); empty when the node was not reached.
  const Tensor<T>& grad(Id id) const;
  std::size_t size() const { return nodes_.size(); }

  // Label used in NaN diagnostics, e.g. "encoder.1.ffn".
  void set_scope(std::string scope) { scope_ = std::move(scope); }
  const std::string& scope() const { return scope_; }

  // --- primitives --------------------------------------------------------

  // y = x W + b for x [rows, in], W [in, out], b [out].
  Id affine(Id x, Id w, Id b);
  // Exact x * Phi(x).
  Id gelu(Id x);
  // Row-wise normalization with variance epsilon 1e-5, then gain and bias.
  Id layer_norm(Id x, Id gain, Id bias);
  // Row-wise, max-subtracted.
  Id softmax(Id x);
  // Scaled dot-product attention core. q, k, v are [n_seq * seq_len, d];
  // each sequence attends only within itself, per head of width d / heads.
  Id attention(Id q, Id k, Id v, std::size_t seq_len, std::size_t heads);
  // Identity in eval mode or when p == 0; otherwise inverted dropout.
  Id dropout(Id x, double p, bool train, Rng& rng);

  // --- structural helpers (differentiable) -------------------------------

  Id add(Id a, Id b);
  // x [rows, d] + row [d] broadcast over rows.
  Id add_row(Id x, Id row);
  // Row-wise x / ||x||_2.
  Id l2_normalize(Id x);
  // Gradient passes only where lo <= x <= hi.
  Id clamp(Id x, T lo, T hi);
  // x [n, d], tokens [k, d] -> [n * (k + 1), d]: per sequence the k tokens
  // followed by the row of x.
  Id prepend_tokens(Id x, Id tokens);
  // [n * group, d] -> [n, d] by averaging consecutive groups of rows.
  Id mean_pool(Id x, std::size_t group);

  // Adds g to d(id). Several outputs can be seeded before one backward().
  void seed_grad(Id id, const Tensor<T>& g);
  // Runs the tape backwards from the last node.
  void backward();
  // seed_grad(out, seed) followed by backward().
  void backward(Id out, const Tensor<T>& seed);

  // Clears all nodes; parameters keep their accumulated gradients.
  void clear();

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Id push(Tensor<T> value, bool requires_grad);
  Tensor<T>& grad_buffer(Id id);
  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }
  void check_finite(const Tensor<T>& t, const char* op) const;

  std::vector<Node> nodes_;
  std::string scope_;
};

extern template class Tape<float>;
extern template class Tape<double>;

// Exact Gaussian CDF and GELU, exposed for tests and oracles.
double gaussian_cdf(double x);
double gelu_value(double x);

}  // namespace posegen
