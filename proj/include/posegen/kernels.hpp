#pragma once

// Data-parallel inner loops used by the tape. Every kernel has a scalar
// reference and, where the host supports it, an AVX2+FMA variant. The active
// backend is picked once at startup (CPUID, overridable with the
// POSEGEN_KERNELS environment variable: "scalar" or "avx2") and can be
// switched explicitly for equivalence tests.
//
// Only f32 is dispatched; f64 (gradient checking) always runs the scalar
// templates below.

#include <cmath>
#include <cstddef>
#include <string_view>
#include <type_traits>

namespace posegen::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  // C[M,N] += A * B where A(i,k) = a[i*a_rs + k*a_cs] and B is row-major
  // with leading dimension ldb. Strided A covers both A and A^T.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const float* a,
               std::size_t a_rs, std::size_t a_cs, const float* b,
               std::size_t ldb, float* c, std::size_t ldc);
  float (*dot)(std::size_t n, const float* x, const float* y);
  // y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
  // One Adam step over n parameters. bc1/bc2 are the bias corrections
  // 1 - beta^t.
  void (*adam)(std::size_t n, float* param, const float* grad, float* m,
               float* v, float lr, float beta1, float beta2, float eps,
               float bc1, float bc2);
};

bool available(Backend b);
const KernelTable& table(Backend b);
const KernelTable& active();
Backend active_backend();
// Throws ConfigError when the backend is not supported on this host.
void set_backend(Backend b);
std::string_view backend_name(Backend b);

// RAII override used by tests.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend b) : prev_(active_backend()) { set_backend(b); }
  ~ScopedBackend() { set_backend(prev_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend prev_;
};

namespace scalar {

template <class T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t a_rs, std::size_t a_cs, const T* b, std::size_t ldb,
          T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * a_rs + p * a_cs];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
T dot(std::size_t n, const T* x, const T* y) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void adam(std::size_t n, T* param, const T* grad, T* m, T* v, T lr, T beta1,
          T beta2, T eps, T bc1, T bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * g;
    v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

const KernelTable& table();

}  // namespace scalar

namespace avx2 {
// Null table entries when compiled for a non-x86 target.
const KernelTable* table();
}  // namespace avx2

// Typed front doors: f32 goes through the active backend, f64 through the
// scalar templates.
template <class T>
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a,
                 std::size_t a_rs, std::size_t a_cs, const T* b,
                 std::size_t ldb, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>) {
    active().gemm(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
  } else {
    scalar::gemm<T>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
  }
}

template <class T>
inline T dot(std::size_t n, const T* x, const T* y) {
  if constexpr (std::is_same_v<T, float>) {
    return active().dot(n, x, y);
  } else {
    return scalar::dot<T>(n, x, y);
  }
}

template <class T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) {
    active().axpy(n, alpha, x, y);
  } else {
    scalar::axpy<T>(n, alpha, x, y);
  }
}

}  // namespace posegen::kernels
