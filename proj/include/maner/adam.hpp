#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "maner/common.hpp"
#include "maner/tensor.hpp"

namespace maner {

template <typename Real>
struct AdamConfig {
  Real lr = Real(1e-3);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real epsilon = Real(1e-8);
};

// First/second-moment state for one parameter array.
template <typename Real>
struct AdamSlot {
  std::vector<Real> m;
  std::vector<Real> v;
};

// Standard Adam with bias correction. One shared step counter across all
// parameter arrays; t increments by exactly 1 per step() call.
template <typename Real>
class Adam {
 public:
  explicit Adam(AdamConfig<Real> cfg) : cfg_(cfg) {}

  const AdamConfig<Real>& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  // params[i] is updated in place from grads[i].
  void step(std::span<Array<Real>* const> params, std::span<const std::span<const Real>> grads) {
    if (params.size() != grads.size()) {
      throw DimensionError("adam: " + std::to_string(params.size()) + " params vs " +
                           std::to_string(grads.size()) + " grads");
    }
    if (slots_.empty()) {
      slots_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        slots_[i].m.assign(params[i]->numel(), Real(0));
        slots_[i].v.assign(params[i]->numel(), Real(0));
      }
    }
    if (slots_.size() != params.size()) {
      throw DimensionError("adam: parameter count changed between steps");
    }
    ++t_;
    const Real bc1 = Real(1) - std::pow(cfg_.beta1, static_cast<Real>(t_));
    const Real bc2 = Real(1) - std::pow(cfg_.beta2, static_cast<Real>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      Array<Real>& p = *params[i];
      const std::span<const Real> g = grads[i];
      if (g.size() != p.numel() || slots_[i].m.size() != p.numel()) {
        throw DimensionError("adam: shape mismatch on parameter " + std::to_string(i) + ": " +
                             std::to_string(p.numel()) + " values vs " +
                             std::to_string(g.size()) + " gradients");
      }
      Real* m = slots_[i].m.data();
      Real* v = slots_[i].v.data();
      Real* x = p.data.data();
      for (size_t j = 0; j < g.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (Real(1) - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (Real(1) - cfg_.beta2) * g[j] * g[j];
        const Real mhat = m[j] / bc1;
        const Real vhat = v[j] / bc2;
        x[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        if (!std::isfinite(static_cast<double>(x[j]))) {
          throw TrainingError("adam: non-finite parameter after update");
        }
      }
    }
  }

  // Single-array convenience used by tests.
  void step(Array<Real>& param, std::span<const Real> grad) {
    Array<Real>* p = &param;
    const std::span<const Real> g = grad;
    step(std::span<Array<Real>* const>(&p, 1), std::span<const std::span<const Real>>(&g, 1));
  }

 private:
  AdamConfig<Real> cfg_;
  std::vector<AdamSlot<Real>> slots_;
  int64_t t_ = 0;
};

}  // namespace maner
