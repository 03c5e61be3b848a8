#include "maner/kernels.hpp"

namespace maner::kernels::detail {

// Reference kernels. Fixed accumulation order: these define the numbers the
// SIMD variants are checked against.

template <typename T>
void gemm_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!accumulate) {
      for (size_t j = 0; j < n; ++j) {
        crow[j] = T(0);
      }
    }
    const T* arow = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void gemm_at_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate) {
  // a is [k x m]; c[i,j] = sum_p a[p,i] * b[p,j]
  if (!accumulate) {
    for (size_t i = 0; i < m * n; ++i) {
      c[i] = T(0);
    }
  }
  for (size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (size_t j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

template <typename T>
void gemm_bt_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate) {
  // b is [n x k]; c[i,j] = dot(a row i, b row j)
  for (size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (size_t p = 0; p < k; ++p) {
        acc += arow[p] * brow[p];
      }
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

template <typename T>
void axpy_ref(size_t n, T alpha, const T* x, T* y) {
  for (size_t i = 0; i < n; ++i) {
    y[i] += alpha * x[i];
  }
}

template <typename T>
T dot_ref(size_t n, const T* x, const T* y) {
  T acc = T(0);
  for (size_t i = 0; i < n; ++i) {
    acc += x[i] * y[i];
  }
  return acc;
}

template <typename T>
void add_ref(size_t n, const T* x, const T* y, T* out) {
  for (size_t i = 0; i < n; ++i) {
    out[i] = x[i] + y[i];
  }
}

template <typename T>
void scale_ref(size_t n, T alpha, T* x) {
  for (size_t i = 0; i < n; ++i) {
    x[i] *= alpha;
  }
}

template <typename T>
T sum_ref(size_t n, const T* x) {
  T acc = T(0);
  for (size_t i = 0; i < n; ++i) {
    acc += x[i];
  }
  return acc;
}

template void gemm_ref<float>(size_t, size_t, size_t, const float*, const float*, float*, bool);
template void gemm_ref<double>(size_t, size_t, size_t, const double*, const double*, double*,
                               bool);
template void gemm_at_ref<float>(size_t, size_t, size_t, const float*, const float*, float*,
                                 bool);
template void gemm_at_ref<double>(size_t, size_t, size_t, const double*, const double*, double*,
                                  bool);
template void gemm_bt_ref<float>(size_t, size_t, size_t, const float*, const float*, float*,
                                 bool);
template void gemm_bt_ref<double>(size_t, size_t, size_t, const double*, const double*, double*,
                                  bool);
template void axpy_ref<float>(size_t, float, const float*, float*);
template void axpy_ref<double>(size_t, double, const double*, double*);
template float dot_ref<float>(size_t, const float*, const float*);
template double dot_ref<double>(size_t, const double*, const double*);
template void add_ref<float>(size_t, const float*, const float*, float*);
template void add_ref<double>(size_t, const double*, const double*, double*);
template void scale_ref<float>(size_t, float, float*);
template void scale_ref<double>(size_t, double, double*);
template float sum_ref<float>(size_t, const float*);
template double sum_ref<double>(size_t, const double*);

}  // namespace maner::kernels::detail
