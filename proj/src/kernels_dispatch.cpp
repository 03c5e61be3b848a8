#include <atomic>
#include <cstdlib>
#include <string>

#include "maner/common.hpp"
#include "maner/kernels.hpp"

namespace maner::kernels {

namespace {

using detail::FloatKernels;

const FloatKernels& scalar_kernels() {
  static const FloatKernels table = {
      detail::gemm_ref<float>, detail::gemm_at_ref<float>, detail::gemm_bt_ref<float>,
      detail::axpy_ref<float>, detail::dot_ref<float>,     detail::add_ref<float>,
      detail::scale_ref<float>, detail::sum_ref<float>,
  };
  return table;
}

Isa pick_default_isa() {
  if (const char* env = std::getenv("MANER_SIMD")) {
    const std::string v(env);
    if (v == "scalar") {
      return Isa::scalar;
    }
    if (v == "avx2") {
      if (!cpu_has_avx2()) {
        throw Error("MANER_SIMD=avx2 requested but the CPU lacks AVX2/FMA");
      }
      return Isa::avx2;
    }
    throw Error("MANER_SIMD must be 'scalar' or 'avx2', got '" + v + "'");
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const FloatKernels*> g_table{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};

const FloatKernels& table() {
  const FloatKernels* t = g_table.load(std::memory_order_acquire);
  if (t == nullptr) {
    const Isa isa = pick_default_isa();
    t = isa == Isa::avx2 ? &detail::avx2_kernels() : &scalar_kernels();
    g_isa.store(isa, std::memory_order_release);
    g_table.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  table();
  return g_isa.load(std::memory_order_acquire);
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2()) {
    throw Error("force_isa(avx2): CPU lacks AVX2/FMA support");
  }
  g_isa.store(isa, std::memory_order_release);
  g_table.store(isa == Isa::avx2 ? &detail::avx2_kernels() : &scalar_kernels(),
                std::memory_order_release);
}

void gemm(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
          bool accumulate) {
  table().gemm(m, n, k, a, b, c, accumulate);
}
void gemm(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
          bool accumulate) {
  detail::gemm_ref<double>(m, n, k, a, b, c, accumulate);
}

void gemm_at(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
  table().gemm_at(m, n, k, a, b, c, accumulate);
}
void gemm_at(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  detail::gemm_at_ref<double>(m, n, k, a, b, c, accumulate);
}

void gemm_bt(size_t m, size_t n, size_t k, const float* a, const float* b, float* c,
             bool accumulate) {
  table().gemm_bt(m, n, k, a, b, c, accumulate);
}
void gemm_bt(size_t m, size_t n, size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  detail::gemm_bt_ref<double>(m, n, k, a, b, c, accumulate);
}

void axpy(size_t n, float alpha, const float* x, float* y) { table().axpy(n, alpha, x, y); }
void axpy(size_t n, double alpha, const double* x, double* y) {
  detail::axpy_ref<double>(n, alpha, x, y);
}

float dot(size_t n, const float* x, const float* y) { return table().dot(n, x, y); }
double dot(size_t n, const double* x, const double* y) { return detail::dot_ref<double>(n, x, y); }

void add(size_t n, const float* x, const float* y, float* out) { table().add(n, x, y, out); }
void add(size_t n, const double* x, const double* y, double* out) {
  detail::add_ref<double>(n, x, y, out);
}

void scale_inplace(size_t n, float alpha, float* x) { table().scale(n, alpha, x); }
void scale_inplace(size_t n, double alpha, double* x) { detail::scale_ref<double>(n, alpha, x); }

float sum(size_t n, const float* x) { return table().sum(n, x); }
double sum(size_t n, const double* x) { return detail::sum_ref<double>(n, x); }

}  // namespace maner::kernels
