// AVX2+FMA float kernels. This translation unit is the only one compiled
// with -mavx2 -mfma; everything here is reached through the dispatch table
// after a CPUID check.

#include <immintrin.h>

#include "maner/kernels.hpp"

namespace maner::kernels::detail {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

void gemm_avx2(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
               bool accumulate) {
  const size_t n8 = n - n % 8;
  for (size_t i = 0; i < m; ++i) {
    float* crow = c + i * n;
    if (!accumulate) {
      size_t j = 0;
      for (; j < n8; j += 8) {
        _mm256_storeu_ps(crow + j, _mm256_setzero_ps());
      }
      for (; j < n; ++j) {
        crow[j] = 0.0f;
      }
    }
    const float* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const __m256 av = _mm256_set1_ps(arow[p]);
      const float* brow = b + p * n;
      size_t j = 0;
      for (; j < n8; j += 8) {
        __m256 acc = _mm256_loadu_ps(crow + j);
        acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), acc);
        _mm256_storeu_ps(crow + j, acc);
      }
      const float as = arow[p];
      for (; j < n; ++j) {
        crow[j] += as * brow[j];
      }
    }
  }
}

void gemm_at_avx2(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
                  bool accumulate) {
  if (!accumulate) {
    const size_t total = m * n;
    size_t i = 0;
    for (; i + 8 <= total; i += 8) {
      _mm256_storeu_ps(c + i, _mm256_setzero_ps());
    }
    for (; i < total; ++i) {
      c[i] = 0.0f;
    }
  }
  const size_t n8 = n - n % 8;
  for (size_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* brow = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const __m256 av = _mm256_set1_ps(arow[i]);
      float* crow = c + i * n;
      size_t j = 0;
      for (; j < n8; j += 8) {
        __m256 acc = _mm256_loadu_ps(crow + j);
        acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), acc);
        _mm256_storeu_ps(crow + j, acc);
      }
      const float as = arow[i];
      for (; j < n; ++j) {
        crow[j] += as * brow[j];
      }
    }
  }
}

void gemm_bt_avx2(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
                  bool accumulate) {
  const size_t k8 = k - k % 8;
  for (size_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const float* brow = b + j * k;
      __m256 acc = _mm256_setzero_ps();
      size_t p = 0;
      for (; p < k8; p += 8) {
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), acc);
      }
      float tail = 0.0f;
      for (; p < k; ++p) {
        tail += arow[p] * brow[p];
      }
      const float val = hsum8(acc) + tail;
      crow[j] = accumulate ? crow[j] + val : val;
    }
  }
}

void axpy_avx2(size_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 acc = _mm256_loadu_ps(y + i);
    acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), acc);
    _mm256_storeu_ps(y + i, acc);
  }
  for (; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

float dot_avx2(size_t n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  }
  float tail = 0.0f;
  for (; i < n; ++i) {
    tail += x[i] * y[i];
  }
  return hsum8(acc) + tail;
}

void add_avx2(size_t n, const float* x, const float* y, float* out) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) {
    out[i] = x[i] + y[i];
  }
}

void scale_avx2(size_t n, float alpha, float* x) {
  const __m256 av = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(x + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  }
  for (; i < n; ++i) {
    x[i] *= alpha;
  }
}

float sum_avx2(size_t n, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  }
  float tail = 0.0f;
  for (; i < n; ++i) {
    tail += x[i];
  }
  return hsum8(acc) + tail;
}

}  // namespace

const FloatKernels& avx2_kernels() {
  static const FloatKernels table = {
      gemm_avx2, gemm_at_avx2, gemm_bt_avx2, axpy_avx2, dot_avx2, add_avx2, scale_avx2, sum_avx2,
  };
  return table;
}

}  // namespace maner::kernels::detail
