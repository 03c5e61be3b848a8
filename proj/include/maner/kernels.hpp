#pragma once

#include <cstddef>

namespace maner::kernels {

// Runtime-dispatched inner loops for the float training path. Double always
// takes the scalar reference path; gradient-check tests run in double so
// they are independent of the SIMD selection.
enum class Isa {
  scalar,
  avx2,
};

// ISA active for float kernels. Picked once from CPUID (overridable with the
// MANER_SIMD environment variable: "scalar" or "avx2").
Isa active_isa();
const char* isa_name(Isa isa);
bool cpu_has_avx2();

// Force a specific ISA (equivalence tests). Throws maner::Error if the CPU
// does not support it.
void force_isa(Isa isa);

// c[m x n] = a[m x k] * b[k x n]        (+= when accumulate)
void gemm(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
          bool accumulate);
void gemm(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
          bool accumulate);

// c[m x n] = a^T * b with a stored [k x m] (+= when accumulate)
void gemm_at(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_at(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
             bool accumulate);

// c[m x n] = a * b^T with b stored [n x k] (+= when accumulate)
void gemm_bt(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
             bool accumulate);
void gemm_bt(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
             bool accumulate);

// y += alpha * x
void axpy(size_t n, float alpha, const float* x, float* y);
void axpy(size_t n, double alpha, const double* x, double* y);

float dot(size_t n, const float* x, const float* y);
double dot(size_t n, const double* x, const double* y);

// out = x + y
void add(size_t n, const float* x, const float* y, float* out);
void add(size_t n, const double* x, const double* y, double* out);

void scale_inplace(size_t n, float alpha, float* x);
void scale_inplace(size_t n, double alpha, double* x);

float sum(size_t n, const float* x);
double sum(size_t n, const double* x);

namespace detail {

template <typename T>
void gemm_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_at_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void gemm_bt_ref(size_t m, size_t n, size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void axpy_ref(size_t n, T alpha, const T* x, T* y);
template <typename T>
T dot_ref(size_t n, const T* x, const T* y);
template <typename T>
void add_ref(size_t n, const T* x, const T* y, T* out);
template <typename T>
void scale_ref(size_t n, T alpha, T* x);
template <typename T>
T sum_ref(size_t n, const T* x);

struct FloatKernels {
  void (*gemm)(size_t, size_t, size_t, const float*, const float*, float*, bool);
  void (*gemm_at)(size_t, size_t, size_t, const float*, const float*, float*, bool);
  void (*gemm_bt)(size_t, size_t, size_t, const float*, const float*, float*, bool);
  void (*axpy)(size_t, float, const float*, float*);
  float (*dot)(size_t, const float*, const float*);
  void (*add)(size_t, const float*, const float*, float*);
  void (*scale)(size_t, float, float*);
  float (*sum)(size_t, const float*);
};

const FloatKernels& avx2_kernels();

}  // namespace detail

}  // namespace maner::kernels
