// Compiled with -mavx2 -mfma. Must not instantiate any inline template shared
// with other translation units, or the linker may keep the AVX2 copy.
#include "posegen/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace posegen::kernels::avx2 {

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

// 4x16 register tile: 8 accumulators, 2 B loads and 4 broadcasts per k.
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a,
          std::size_t a_rs, std::size_t a_cs, const float* b, std::size_t ldb,
          float* c, std::size_t ldc) {
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 16;
  std::size_t j = 0;
  for (; j + NR <= n; j += NR) {
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
      float* c0 = c + (i + 0) * ldc + j;
      float* c1 = c + (i + 1) * ldc + j;
      float* c2 = c + (i + 2) * ldc + j;
      float* c3 = c + (i + 3) * ldc + j;
      __m256 acc00 = _mm256_loadu_ps(c0), acc01 = _mm256_loadu_ps(c0 + 8);
      __m256 acc10 = _mm256_loadu_ps(c1), acc11 = _mm256_loadu_ps(c1 + 8);
      __m256 acc20 = _mm256_loadu_ps(c2), acc21 = _mm256_loadu_ps(c2 + 8);
      __m256 acc30 = _mm256_loadu_ps(c3), acc31 = _mm256_loadu_ps(c3 + 8);
      const float* a0 = a + (i + 0) * a_rs;
      const float* a1 = a + (i + 1) * a_rs;
      const float* a2 = a + (i + 2) * a_rs;
      const float* a3 = a + (i + 3) * a_rs;
      for (std::size_t p = 0; p < k; ++p) {
        const float* brow = b + p * ldb + j;
        const __m256 b0 = _mm256_loadu_ps(brow);
        const __m256 b1 = _mm256_loadu_ps(brow + 8);
        const std::size_t off = p * a_cs;
        __m256 av = _mm256_broadcast_ss(a0 + off);
        acc00 = _mm256_fmadd_ps(av, b0, acc00);
        acc01 = _mm256_fmadd_ps(av, b1, acc01);
        av = _mm256_broadcast_ss(a1 + off);
        acc10 = _mm256_fmadd_ps(av, b0, acc10);
        acc11 = _mm256_fmadd_ps(av, b1, acc11);
        av = _mm256_broadcast_ss(a2 + off);
        acc20 = _mm256_fmadd_ps(av, b0, acc20);
        acc21 = _mm256_fmadd_ps(av, b1, acc21);
        av = _mm256_broadcast_ss(a3 + off);
        acc30 = _mm256_fmadd_ps(av, b0, acc30);
        acc31 = _mm256_fmadd_ps(av, b1, acc31);
      }
      _mm256_storeu_ps(c0, acc00);
      _mm256_storeu_ps(c0 + 8, acc01);
      _mm256_storeu_ps(c1, acc10);
      _mm256_storeu_ps(c1 + 8, acc11);
      _mm256_storeu_ps(c2, acc20);
      _mm256_storeu_ps(c2 + 8, acc21);
      _mm256_storeu_ps(c3, acc30);
      _mm256_storeu_ps(c3 + 8, acc31);
    }
    for (; i < m; ++i) {
      float* crow = c + i * ldc + j;
      __m256 acc0 = _mm256_loadu_ps(crow), acc1 = _mm256_loadu_ps(crow + 8);
      const float* arow = a + i * a_rs;
      for (std::size_t p = 0; p < k; ++p) {
        const float* brow = b + p * ldb + j;
        const __m256 av = _mm256_broadcast_ss(arow + p * a_cs);
        acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), acc0);
        acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), acc1);
      }
      _mm256_storeu_ps(crow, acc0);
      _mm256_storeu_ps(crow + 8, acc1);
    }
  }
  for (; j + 8 <= n; j += 8) {
    for (std::size_t i = 0; i < m; ++i) {
      float* crow = c + i * ldc + j;
      __m256 acc = _mm256_loadu_ps(crow);
      const float* arow = a + i * a_rs;
      for (std::size_t p = 0; p < k; ++p) {
        acc = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + p * a_cs),
                              _mm256_loadu_ps(b + p * ldb + j), acc);
      }
      _mm256_storeu_ps(crow, acc);
    }
  }
  if (j < n) {
    for (std::size_t i = 0; i < m; ++i) {
      float* crow = c + i * ldc;
      const float* arow = a + i * a_rs;
      for (std::size_t p = 0; p < k; ++p) {
        const float av = arow[p * a_cs];
        const float* brow = b + p * ldb;
        for (std::size_t jj = j; jj < n; ++jj) {
          crow[jj] = std::fma(av, brow[jj], crow[jj]);
        }
      }
    }
  }
}

float dot(std::size_t n, const float* x, const float* y) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8),
                           _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void adam(std::size_t n, float* param, const float* grad, float* m, float* v,
          float lr, float beta1, float beta2, float eps, float bc1,
          float bc2) {
  const __m256 b1 = _mm256_set1_ps(beta1), omb1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 b2 = _mm256_set1_ps(beta2), omb2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vbc1 = _mm256_set1_ps(bc1), vbc2 = _mm256_set1_ps(bc2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)),
                              _mm256_mul_ps(omb1, g));
    __m256 vi = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(_mm256_mul_ps(omb2, g), g));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_div_ps(mi, vbc1);
    const __m256 vhat = _mm256_div_ps(vi, vbc2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(vlr, mhat),
                                      _mm256_add_ps(_mm256_sqrt_ps(vhat), veps));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), step));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.0f - beta1) * g;
    v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
    param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const KernelTable* table() {
  static const KernelTable t{gemm, dot, axpy, adam};
  return &t;
}

}  // namespace posegen::kernels::avx2

#else

namespace posegen::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace posegen::kernels::avx2

#endif
