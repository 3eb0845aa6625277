#include "posegen/kernels.hpp"

namespace posegen::kernels::scalar {

namespace {

void gemm_f32(std::size_t m, std::size_t n, std::size_t k, const float* a,
              std::size_t a_rs, std::size_t a_cs, const float* b,
              std::size_t ldb, float* c, std::size_t ldc) {
  gemm<float>(m, n, k, a, a_rs, a_cs, b, ldb, c, ldc);
}

float dot_f32(std::size_t n, const float* x, const float* y) {
  return dot<float>(n, x, y);
}

void axpy_f32(std::size_t n, float alpha, const float* x, float* y) {
  axpy<float>(n, alpha, x, y);
}

void adam_f32(std::size_t n, float* param, const float* grad, float* m,
              float* v, float lr, float beta1, float beta2, float eps,
              float bc1, float bc2) {
  adam<float>(n, param, grad, m, v, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{gemm_f32, dot_f32, axpy_f32, adam_f32};
  return t;
}

}  // namespace posegen::kernels::scalar
