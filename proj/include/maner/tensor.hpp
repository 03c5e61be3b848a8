#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "maner/common.hpp"
#include "maner/kernels.hpp"

namespace maner {

// Label value meaning "no loss at this position". Deliberately out of range
// of every class id so it can never be trained on by accident.
inline constexpr int kIgnoreLabel = -1;

// ----------------------------- shape -----------------------------
// Rank 0 (scalar), 1 (vector) or 2 (matrix). That is all the model needs.
class Shape {
 public:
  Shape() = default;
  explicit Shape(size_t n) : rank_(1) { dims_[0] = n; }
  Shape(size_t r, size_t c) : rank_(2) {
    dims_[0] = r;
    dims_[1] = c;
  }

  static Shape scalar() { return Shape(); }

  int rank() const { return rank_; }
  size_t rows() const { return rank_ == 2 ? dims_[0] : (rank_ == 1 ? dims_[0] : 1); }
  size_t cols() const { return rank_ == 2 ? dims_[1] : 1; }
  size_t dim(int i) const { return dims_[static_cast<size_t>(i)]; }

  size_t numel() const {
    if (rank_ == 0) {
      return 1;
    }
    return rank_ == 1 ? dims_[0] : dims_[0] * dims_[1];
  }

  bool operator==(const Shape& o) const { return rank_ == o.rank_ && dims_ == o.dims_; }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::ostringstream os;
    os << '[';
    for (int i = 0; i < rank_; ++i) {
      os << dims_[static_cast<size_t>(i)] << (i + 1 < rank_ ? "x" : "");
    }
    os << ']';
    return os.str();
  }

 private:
  std::array<size_t, 2> dims_{1, 1};
  int rank_ = 0;
};

// ----------------------------- array -----------------------------
// Plain dense value; the storage behind parameters and test fixtures.
template <typename Real>
struct Array {
  Shape shape;
  std::vector<Real> data;

  Array() = default;
  explicit Array(Shape s) : shape(s), data(s.numel(), Real(0)) {}
  Array(Shape s, std::vector<Real> d) : shape(s), data(std::move(d)) {
    if (shape.numel() != data.size()) {
      throw DimensionError("array shape " + shape.str() + " does not match data length " +
                           std::to_string(data.size()));
    }
  }

  size_t numel() const { return data.size(); }
  Real& at(size_t r, size_t c) { return data[r * shape.cols() + c]; }
  Real at(size_t r, size_t c) const { return data[r * shape.cols() + c]; }
};

template <typename Real>
class GradGraph;

// ----------------------------- tensor -----------------------------
// Lightweight handle into a GradGraph slot. Copyable; valid while the graph
// lives.
template <typename Real>
class Tensor {
 public:
  Tensor() = default;

  Shape shape() const;
  std::span<const Real> value() const;
  std::span<const Real> grad() const;
  Real scalar_value() const;
  int id() const { return id_; }

 private:
  friend class GradGraph<Real>;
  Tensor(GradGraph<Real>* g, int id) : graph_(g), id_(id) {}

  GradGraph<Real>* graph_ = nullptr;
  int id_ = -1;
};

// ----------------------------- grad graph -----------------------------
// Tape of operations in creation order. backward() walks it once in reverse.
// Leaves view storage owned by the caller (parameters outlive the graph);
// interior values are owned by the graph.
template <typename Real>
class GradGraph {
 public:
  GradGraph() = default;
  explicit GradGraph(bool grads_enabled) : grads_enabled_(grads_enabled) {}

  GradGraph(const GradGraph&) = delete;
  GradGraph& operator=(const GradGraph&) = delete;

  bool grads_enabled() const { return grads_enabled_; }

  // Registers a parameter/input. The array must outlive the graph.
  Tensor<Real> leaf(const Array<Real>& a) {
    const int id = add_slot(a.shape, a.data.data());
    slots_[static_cast<size_t>(id)].is_leaf = true;
    check_finite(id, "leaf");
    return handle(id);
  }

  // Constant input by value (test convenience).
  Tensor<Real> input(Shape s, std::vector<Real> data) {
    if (s.numel() != data.size()) {
      throw DimensionError("input shape " + s.str() + " does not match data length " +
                           std::to_string(data.size()));
    }
    const int id = add_slot(s, std::move(data));
    slots_[static_cast<size_t>(id)].is_leaf = true;
    check_finite(id, "input");
    return handle(id);
  }

  // c = a * b
  Tensor<Real> matmul(Tensor<Real> a, Tensor<Real> b) {
    const Shape sa = shape_of(a);
    const Shape sb = shape_of(b);
    if (sa.rank() != 2 || sb.rank() != 2 || sa.cols() != sb.rows()) {
      throw DimensionError("matmul: incompatible shapes " + sa.str() + " and " + sb.str());
    }
    const size_t m = sa.rows(), k = sa.cols(), n = sb.cols();
    const int out = add_slot(Shape(m, n));
    kernels::gemm(m, n, k, value_ptr(a), value_ptr(b), value_mut(out), false);
    check_finite(out, "matmul");
    record([this, a, b, out, m, n, k] {
      const Real* g = grad_ptr(out);
      // dA += dC * B^T ; dB += A^T * dC
      kernels::gemm_bt(m, k, n, g, value_ptr(b), grad_mut(a), true);
      kernels::gemm_at(k, n, m, value_ptr(a), g, grad_mut(b), true);
    });
    return handle(out);
  }

  // c = a * b^T with b stored [n x k]; used for the tied vocabulary head.
  Tensor<Real> matmul_nt(Tensor<Real> a, Tensor<Real> b) {
    const Shape sa = shape_of(a);
    const Shape sb = shape_of(b);
    if (sa.rank() != 2 || sb.rank() != 2 || sa.cols() != sb.cols()) {
      throw DimensionError("matmul_nt: incompatible shapes " + sa.str() + " and " + sb.str());
    }
    const size_t m = sa.rows(), k = sa.cols(), n = sb.rows();
    const int out = add_slot(Shape(m, n));
    kernels::gemm_bt(m, n, k, value_ptr(a), value_ptr(b), value_mut(out), false);
    check_finite(out, "matmul_nt");
    record([this, a, b, out, m, n, k] {
      const Real* g = grad_ptr(out);
      kernels::gemm(m, k, n, g, value_ptr(b), grad_mut(a), true);
      kernels::gemm_at(n, k, m, g, value_ptr(a), grad_mut(b), true);
    });
    return handle(out);
  }

  // Row-broadcast bias add: x[T x K] + b[K].
  Tensor<Real> add_bias(Tensor<Real> x, Tensor<Real> b) {
    const Shape sx = shape_of(x);
    const Shape sb = shape_of(b);
    if (sx.rank() != 2 || sb.rank() != 1 || sx.cols() != sb.dim(0)) {
      throw DimensionError("add_bias: incompatible shapes " + sx.str() + " and " + sb.str());
    }
    const size_t rows = sx.rows(), cols = sx.cols();
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    const Real* bv = value_ptr(b);
    Real* ov = value_mut(out);
    for (size_t r = 0; r < rows; ++r) {
      kernels::add(cols, xv + r * cols, bv, ov + r * cols);
    }
    check_finite(out, "add_bias");
    record([this, x, b, out, rows, cols] {
      const Real* g = grad_ptr(out);
      kernels::axpy(rows * cols, Real(1), g, grad_mut(x));
      Real* gb = grad_mut(b);
      for (size_t r = 0; r < rows; ++r) {
        kernels::axpy(cols, Real(1), g + r * cols, gb);
      }
    });
    return handle(out);
  }

  Tensor<Real> add(Tensor<Real> a, Tensor<Real> b) {
    const Shape sa = shape_of(a);
    if (sa != shape_of(b)) {
      throw DimensionError("add: shape mismatch " + sa.str() + " vs " + shape_of(b).str());
    }
    const int out = add_slot(sa);
    kernels::add(sa.numel(), value_ptr(a), value_ptr(b), value_mut(out));
    check_finite(out, "add");
    record([this, a, b, out, n = sa.numel()] {
      const Real* g = grad_ptr(out);
      kernels::axpy(n, Real(1), g, grad_mut(a));
      kernels::axpy(n, Real(1), g, grad_mut(b));
    });
    return handle(out);
  }

  // Gathers rows of table [V x D] at the given ids -> [T x D].
  Tensor<Real> embedding(Tensor<Real> table, std::vector<int> ids) {
    const Shape st = shape_of(table);
    if (st.rank() != 2) {
      throw DimensionError("embedding: table must be rank 2, got " + st.str());
    }
    const size_t v = st.rows(), d = st.cols(), t = ids.size();
    for (const int id : ids) {
      if (id < 0 || static_cast<size_t>(id) >= v) {
        throw DimensionError("embedding: id " + std::to_string(id) + " out of range [0, " +
                             std::to_string(v) + ")");
      }
    }
    const int out = add_slot(Shape(t, d));
    const Real* tv = value_ptr(table);
    Real* ov = value_mut(out);
    for (size_t r = 0; r < t; ++r) {
      std::copy_n(tv + static_cast<size_t>(ids[r]) * d, d, ov + r * d);
    }
    check_finite(out, "embedding");
    record([this, table, out, d, ids = std::move(ids)] {
      const Real* g = grad_ptr(out);
      Real* gt = grad_mut(table);
      for (size_t r = 0; r < ids.size(); ++r) {
        kernels::axpy(d, Real(1), g + r * d, gt + static_cast<size_t>(ids[r]) * d);
      }
    });
    return handle(out);
  }

  // Selects rows of x -> [len(rows) x D]. Backward scatter-adds.
  Tensor<Real> gather_rows(Tensor<Real> x, std::vector<size_t> rows) {
    const Shape sx = shape_of(x);
    if (sx.rank() != 2) {
      throw DimensionError("gather_rows: input must be rank 2, got " + sx.str());
    }
    const size_t d = sx.cols();
    for (const size_t r : rows) {
      if (r >= sx.rows()) {
        throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range [0, " +
                             std::to_string(sx.rows()) + ")");
      }
    }
    const int out = add_slot(Shape(rows.size(), d));
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    for (size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(xv + rows[i] * d, d, ov + i * d);
    }
    check_finite(out, "gather_rows");
    record([this, x, out, d, rows = std::move(rows)] {
      const Real* g = grad_ptr(out);
      Real* gx = grad_mut(x);
      for (size_t i = 0; i < rows.size(); ++i) {
        kernels::axpy(d, Real(1), g + i * d, gx + rows[i] * d);
      }
    });
    return handle(out);
  }

  // Row-wise layer norm with learned gain/bias.
  Tensor<Real> layer_norm(Tensor<Real> x, Tensor<Real> gain, Tensor<Real> bias,
                          Real eps = Real(1e-5)) {
    const Shape sx = shape_of(x);
    const size_t cols = sx.cols(), rows = sx.rows();
    if (shape_of(gain) != Shape(cols) || shape_of(bias) != Shape(cols)) {
      throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(cols) + "]");
    }
    const int out = add_slot(sx);
    std::vector<Real> mean(rows), inv_std(rows);
    const Real* xv = value_ptr(x);
    const Real* gv = value_ptr(gain);
    const Real* bv = value_ptr(bias);
    Real* ov = value_mut(out);
    for (size_t r = 0; r < rows; ++r) {
      const Real* row = xv + r * cols;
      const Real mu = kernels::sum(cols, row) / static_cast<Real>(cols);
      Real var = Real(0);
      for (size_t c = 0; c < cols; ++c) {
        const Real d = row[c] - mu;
        var += d * d;
      }
      var /= static_cast<Real>(cols);
      const Real is = Real(1) / std::sqrt(var + eps);
      mean[r] = mu;
      inv_std[r] = is;
      Real* orow = ov + r * cols;
      for (size_t c = 0; c < cols; ++c) {
        orow[c] = (row[c] - mu) * is * gv[c] + bv[c];
      }
    }
    check_finite(out, "layer_norm");
    record([this, x, gain, bias, out, rows, cols, mean = std::move(mean),
            inv_std = std::move(inv_std)] {
      const Real* g = grad_ptr(out);
      const Real* xv2 = value_ptr(x);
      const Real* gv2 = value_ptr(gain);
      Real* gx = grad_mut(x);
      Real* gg = grad_mut(gain);
      Real* gb = grad_mut(bias);
      for (size_t r = 0; r < rows; ++r) {
        const Real* grow = g + r * cols;
        const Real* xrow = xv2 + r * cols;
        Real* gxrow = gx + r * cols;
        const Real is = inv_std[r];
        const Real mu = mean[r];
        Real sum_gd = Real(0), sum_gdx = Real(0);
        for (size_t c = 0; c < cols; ++c) {
          const Real xhat = (xrow[c] - mu) * is;
          const Real gd = grow[c] * gv2[c];
          sum_gd += gd;
          sum_gdx += gd * xhat;
          gg[c] += grow[c] * xhat;
          gb[c] += grow[c];
        }
        const Real inv_n = Real(1) / static_cast<Real>(cols);
        for (size_t c = 0; c < cols; ++c) {
          const Real xhat = (xrow[c] - mu) * is;
          const Real gd = grow[c] * gv2[c];
          gxrow[c] += is * (gd - inv_n * sum_gd - xhat * inv_n * sum_gdx);
        }
      }
    });
    return handle(out);
  }

  // Exact (erf) GELU.
  Tensor<Real> gelu(Tensor<Real> x) {
    const Shape sx = shape_of(x);
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    const size_t n = sx.numel();
    for (size_t i = 0; i < n; ++i) {
      ov[i] = Real(0.5) * xv[i] * (Real(1) + std::erf(xv[i] * Real(0.7071067811865476)));
    }
    check_finite(out, "gelu");
    record([this, x, out, n] {
      const Real* g = grad_ptr(out);
      const Real* xv2 = value_ptr(x);
      Real* gx = grad_mut(x);
      constexpr Real inv_sqrt2 = Real(0.7071067811865476);
      constexpr Real inv_sqrt2pi = Real(0.3989422804014327);
      for (size_t i = 0; i < n; ++i) {
        const Real cdf = Real(0.5) * (Real(1) + std::erf(xv2[i] * inv_sqrt2));
        const Real pdf = inv_sqrt2pi * std::exp(Real(-0.5) * xv2[i] * xv2[i]);
        gx[i] += g[i] * (cdf + xv2[i] * pdf);
      }
    });
    return handle(out);
  }

  // Inverted dropout. rate == 0 is a no-op passthrough.
  Tensor<Real> dropout(Tensor<Real> x, Real rate, Rng& rng) {
    if (rate == Real(0)) {
      return x;
    }
    if (rate < Real(0) || rate >= Real(1)) {
      throw DimensionError("dropout: rate must be in [0, 1)");
    }
    const Shape sx = shape_of(x);
    const size_t n = sx.numel();
    std::vector<Real> mask(n);
    const Real keep = Real(1) - rate;
    const Real scale = Real(1) / keep;
    for (size_t i = 0; i < n; ++i) {
      mask[i] = rng.uniform() < static_cast<double>(rate) ? Real(0) : scale;
    }
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    for (size_t i = 0; i < n; ++i) {
      ov[i] = xv[i] * mask[i];
    }
    check_finite(out, "dropout");
    record([this, x, out, n, mask = std::move(mask)] {
      const Real* g = grad_ptr(out);
      Real* gx = grad_mut(x);
      for (size_t i = 0; i < n; ++i) {
        gx[i] += g[i] * mask[i];
      }
    });
    return handle(out);
  }

  // Softmax over the last axis, max-subtracted.
  Tensor<Real> softmax(Tensor<Real> x) {
    const Shape sx = shape_of(x);
    if (sx.rank() < 1 || sx.cols() < 1) {
      throw DimensionError("softmax: need at least one class, got " + sx.str());
    }
    const size_t rows = sx.rank() == 2 ? sx.rows() : 1;
    const size_t cols = sx.rank() == 2 ? sx.cols() : sx.numel();
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    for (size_t r = 0; r < rows; ++r) {
      softmax_row(xv + r * cols, ov + r * cols, cols, "softmax");
    }
    check_finite(out, "softmax");
    record([this, x, out, rows, cols] {
      const Real* g = grad_ptr(out);
      const Real* p = value_ptr(out);
      Real* gx = grad_mut(x);
      for (size_t r = 0; r < rows; ++r) {
        const Real* prow = p + r * cols;
        const Real* grow = g + r * cols;
        const Real inner = kernels::dot(cols, grow, prow);
        for (size_t c = 0; c < cols; ++c) {
          gx[r * cols + c] += prow[c] * (grow[c] - inner);
        }
      }
    });
    return handle(out);
  }

  // Bidirectional multi-head scaled dot-product self-attention.
  // q, k, v are [T x D]; D must divide evenly into heads.
  Tensor<Real> attention(Tensor<Real> q, Tensor<Real> k, Tensor<Real> v, size_t heads) {
    const Shape sq = shape_of(q);
    if (sq != shape_of(k) || sq != shape_of(v)) {
      throw DimensionError("attention: q/k/v shapes must match");
    }
    const size_t t = sq.rows(), d = sq.cols();
    if (heads == 0 || d % heads != 0) {
      throw DimensionError("attention: dim " + std::to_string(d) + " not divisible by heads " +
                           std::to_string(heads));
    }
    const size_t hd = d / heads;
    const Real scale = Real(1) / std::sqrt(static_cast<Real>(hd));
    const int out = add_slot(Shape(t, d));

    // probs: heads x t x t, stored per head for backward
    std::vector<Real> probs(heads * t * t);
    const Real* qv = value_ptr(q);
    const Real* kv = value_ptr(k);
    const Real* vv = value_ptr(v);
    Real* ov = value_mut(out);
    std::vector<Real> scores(t);
    for (size_t h = 0; h < heads; ++h) {
      const size_t off = h * hd;
      Real* hp = probs.data() + h * t * t;
      for (size_t i = 0; i < t; ++i) {
        const Real* qrow = qv + i * d + off;
        for (size_t j = 0; j < t; ++j) {
          scores[j] = scale * kernels::dot(hd, qrow, kv + j * d + off);
        }
        softmax_row(scores.data(), hp + i * t, t, "attention");
      }
      for (size_t i = 0; i < t; ++i) {
        Real* orow = ov + i * d + off;
        std::fill_n(orow, hd, Real(0));
        const Real* prow = hp + i * t;
        for (size_t j = 0; j < t; ++j) {
          kernels::axpy(hd, prow[j], vv + j * d + off, orow);
        }
      }
    }
    check_finite(out, "attention");
    record([this, q, k, v, out, heads, t, d, hd, scale, probs = std::move(probs)] {
      const Real* g = grad_ptr(out);
      const Real* qv2 = value_ptr(q);
      const Real* kv2 = value_ptr(k);
      const Real* vv2 = value_ptr(v);
      Real* gq = grad_mut(q);
      Real* gk = grad_mut(k);
      Real* gv = grad_mut(v);
      std::vector<Real> dp(t), ds(t);
      for (size_t h = 0; h < heads; ++h) {
        const size_t off = h * hd;
        const Real* hp = probs.data() + h * t * t;
        for (size_t i = 0; i < t; ++i) {
          const Real* grow = g + i * d + off;
          const Real* prow = hp + i * t;
          // dV and dP
          for (size_t j = 0; j < t; ++j) {
            dp[j] = kernels::dot(hd, grow, vv2 + j * d + off);
            kernels::axpy(hd, prow[j], grow, gv + j * d + off);
          }
          // softmax backward to scores
          const Real inner = kernels::dot(t, dp.data(), prow);
          for (size_t j = 0; j < t; ++j) {
            ds[j] = prow[j] * (dp[j] - inner) * scale;
          }
          // dQ_i += sum_j ds_j K_j ; dK_j += ds_j Q_i
          Real* gqrow = gq + i * d + off;
          const Real* qrow = qv2 + i * d + off;
          for (size_t j = 0; j < t; ++j) {
            kernels::axpy(hd, ds[j], kv2 + j * d + off, gqrow);
            kernels::axpy(hd, ds[j], qrow, gk + j * d + off);
          }
        }
      }
    });
    return handle(out);
  }

  // Mean negative log-likelihood over positions with a real label. Any
  // negative label is the ignore sentinel (kIgnoreLabel is the canonical
  // value); ignored positions contribute exactly zero loss and zero
  // gradient. Fused log-softmax.
  Tensor<Real> masked_cross_entropy(Tensor<Real> logits, const std::vector<int>& labels) {
    const Shape sl = shape_of(logits);
    if (sl.rank() != 2) {
      throw DimensionError("masked_cross_entropy: logits must be rank 2, got " + sl.str());
    }
    const size_t t = sl.rows(), kclasses = sl.cols();
    if (labels.size() != t) {
      throw DimensionError("masked_cross_entropy: " + std::to_string(labels.size()) +
                           " labels for " + std::to_string(t) + " positions");
    }
    std::vector<size_t> active;
    for (size_t i = 0; i < t; ++i) {
      if (labels[i] < 0) {
        continue;  // ignore sentinel
      }
      if (static_cast<size_t>(labels[i]) >= kclasses) {
        throw DimensionError("masked_cross_entropy: label " + std::to_string(labels[i]) +
                             " out of range [0, " + std::to_string(kclasses) + ")");
      }
      active.push_back(i);
    }
    if (active.empty()) {
      throw Error("masked_cross_entropy: every position is ignored");
    }
    const Real* lv = value_ptr(logits);
    // log-softmax per active row: log p_c = x_c - max - log(sum exp(x - max))
    std::vector<Real> row_max(active.size()), row_lse(active.size());
    Real loss = Real(0);
    for (size_t a = 0; a < active.size(); ++a) {
      const Real* row = lv + active[a] * kclasses;
      Real mx = row[0];
      for (size_t c = 1; c < kclasses; ++c) {
        mx = std::max(mx, row[c]);
      }
      if (!std::isfinite(static_cast<double>(mx))) {
        throw Error("masked_cross_entropy: non-finite logit");
      }
      Real se = Real(0);
      for (size_t c = 0; c < kclasses; ++c) {
        se += std::exp(row[c] - mx);
      }
      const Real lse = std::log(se);
      row_max[a] = mx;
      row_lse[a] = lse;
      const Real logp = row[static_cast<size_t>(labels[active[a]])] - mx - lse;
      loss -= logp;
    }
    loss /= static_cast<Real>(active.size());
    const int out = add_slot(Shape::scalar(), std::vector<Real>{loss});
    check_finite(out, "masked_cross_entropy");
    record([this, logits, out, kclasses, labels, active = std::move(active),
            row_max = std::move(row_max), row_lse = std::move(row_lse)] {
      const Real g = grad_ptr(out)[0];
      const Real* lv2 = value_ptr(logits);
      Real* gl = grad_mut(logits);
      const Real inv_n = Real(1) / static_cast<Real>(active.size());
      for (size_t a = 0; a < active.size(); ++a) {
        const size_t i = active[a];
        const Real* row = lv2 + i * kclasses;
        Real* grow = gl + i * kclasses;
        const Real mx = row_max[a], lse = row_lse[a];
        for (size_t c = 0; c < kclasses; ++c) {
          const Real p = std::exp(row[c] - mx - lse);
          const Real delta = static_cast<size_t>(labels[i]) == c ? Real(1) : Real(0);
          grow[c] += g * inv_n * (p - delta);
        }
      }
    });
    return handle(out);
  }

  Tensor<Real> sum(Tensor<Real> x) {
    const Shape sx = shape_of(x);
    const Real total = kernels::sum(sx.numel(), value_ptr(x));
    const int out = add_slot(Shape::scalar(), std::vector<Real>{total});
    check_finite(out, "sum");
    record([this, x, out, n = sx.numel()] {
      const Real g = grad_ptr(out)[0];
      Real* gx = grad_mut(x);
      for (size_t i = 0; i < n; ++i) {
        gx[i] += g;
      }
    });
    return handle(out);
  }

  Tensor<Real> square(Tensor<Real> x) {
    const Shape sx = shape_of(x);
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    const size_t n = sx.numel();
    for (size_t i = 0; i < n; ++i) {
      ov[i] = xv[i] * xv[i];
    }
    check_finite(out, "square");
    record([this, x, out, n] {
      const Real* g = grad_ptr(out);
      const Real* xv2 = value_ptr(x);
      Real* gx = grad_mut(x);
      for (size_t i = 0; i < n; ++i) {
        gx[i] += Real(2) * xv2[i] * g[i];
      }
    });
    return handle(out);
  }

  Tensor<Real> scale(Tensor<Real> x, Real alpha) {
    const Shape sx = shape_of(x);
    const int out = add_slot(sx);
    const Real* xv = value_ptr(x);
    Real* ov = value_mut(out);
    const size_t n = sx.numel();
    for (size_t i = 0; i < n; ++i) {
      ov[i] = alpha * xv[i];
    }
    check_finite(out, "scale");
    record([this, x, out, n, alpha] {
      kernels::axpy(n, alpha, grad_ptr(out), grad_mut(x));
    });
    return handle(out);
  }

  // Populates gradients for every slot reachable from the scalar loss.
  // Unreachable leaves end up with zero gradient.
  void backward(Tensor<Real> loss) {
    if (!grads_enabled_) {
      throw Error("backward: graph was built with gradients disabled");
    }
    if (shape_of(loss).numel() != 1 || shape_of(loss).rank() != 0) {
      throw Error("backward: loss must be a scalar, got " + shape_of(loss).str());
    }
    for (auto& slot : slots_) {
      slot.grad.assign(slot.shape.numel(), Real(0));
    }
    slots_[static_cast<size_t>(loss.id())].grad[0] = Real(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      (*it)();
    }
    backward_done_ = true;
  }

  std::span<const Real> value(Tensor<Real> t) const {
    const Slot& s = slots_[static_cast<size_t>(t.id())];
    return {s.view != nullptr ? s.view : s.value.data(), s.shape.numel()};
  }

  std::span<const Real> grad(Tensor<Real> t) const {
    if (!backward_done_) {
      throw Error("grad: backward() has not run on this graph");
    }
    const Slot& s = slots_[static_cast<size_t>(t.id())];
    return {s.grad.data(), s.grad.size()};
  }

  // Mutable gradient view; lets callers freeze parameter rows before the
  // optimizer step.
  std::span<Real> grad_mutable(Tensor<Real> t) {
    if (!backward_done_) {
      throw Error("grad_mutable: backward() has not run on this graph");
    }
    Slot& s = slots_[static_cast<size_t>(t.id())];
    return {s.grad.data(), s.grad.size()};
  }

  Shape shape_of(Tensor<Real> t) const {
    return slots_[static_cast<size_t>(t.id())].shape;
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  friend class Tensor<Real>;

  struct Slot {
    Shape shape;
    const Real* view = nullptr;   // non-owning (leaf over external storage)
    std::vector<Real> value;      // owning (interior results)
    std::vector<Real> grad;
    bool is_leaf = false;
  };

  Tensor<Real> handle(int id) { return Tensor<Real>(this, id); }

  int add_slot(Shape s) {
    Slot slot;
    slot.shape = s;
    slot.value.assign(s.numel(), Real(0));
    slots_.push_back(std::move(slot));
    return static_cast<int>(slots_.size()) - 1;
  }

  int add_slot(Shape s, std::vector<Real> vals) {
    Slot slot;
    slot.shape = s;
    slot.value = std::move(vals);
    slots_.push_back(std::move(slot));
    return static_cast<int>(slots_.size()) - 1;
  }

  int add_slot(Shape s, const Real* external) {
    Slot slot;
    slot.shape = s;
    slot.view = external;
    slots_.push_back(std::move(slot));
    return static_cast<int>(slots_.size()) - 1;
  }

  const Real* value_ptr(int id) const {
    const Slot& s = slots_[static_cast<size_t>(id)];
    return s.view != nullptr ? s.view : s.value.data();
  }

  const Real* value_ptr(Tensor<Real> t) const { return value_ptr(t.id()); }

  Real* value_mut(int id) { return slots_[static_cast<size_t>(id)].value.data(); }

  const Real* grad_ptr(int id) const { return slots_[static_cast<size_t>(id)].grad.data(); }
  const Real* grad_ptr(Tensor<Real> t) const { return grad_ptr(t.id()); }

  Real* grad_mut(Tensor<Real> t) { return slots_[static_cast<size_t>(t.id())].grad.data(); }

  void record(std::function<void()> fn) {
    if (grads_enabled_) {
      nodes_.push_back(std::move(fn));
    }
  }

  void softmax_row(const Real* in, Real* out, size_t n, const char* op) const {
    Real mx = in[0];
    for (size_t i = 1; i < n; ++i) {
      mx = std::max(mx, in[i]);
    }
    if (!std::isfinite(static_cast<double>(mx))) {
      throw Error(std::string(op) + ": non-finite input");
    }
    Real se = Real(0);
    for (size_t i = 0; i < n; ++i) {
      out[i] = std::exp(in[i] - mx);
      se += out[i];
    }
    const Real inv = Real(1) / se;
    for (size_t i = 0; i < n; ++i) {
      out[i] *= inv;
    }
  }

  void check_finite(int id, const char* op) const {
    const Slot& s = slots_[static_cast<size_t>(id)];
    const Real* p = s.view != nullptr ? s.view : s.value.data();
    const size_t n = s.shape.numel();
    for (size_t i = 0; i < n; ++i) {
      if (!std::isfinite(static_cast<double>(p[i]))) {
        throw Error(std::string(op) + ": non-finite value in result");
      }
    }
  }

  std::vector<Slot> slots_;
  std::vector<std::function<void()>> nodes_;
  bool grads_enabled_ = true;
  bool backward_done_ = false;
};

template <typename Real>
Shape Tensor<Real>::shape() const {
  return graph_->shape_of(*this);
}

template <typename Real>
std::span<const Real> Tensor<Real>::value() const {
  return graph_->value(*this);
}

template <typename Real>
std::span<const Real> Tensor<Real>::grad() const {
  return graph_->grad(*this);
}

template <typename Real>
Real Tensor<Real>::scalar_value() const {
  return graph_->value(*this)[0];
}

}  // namespace maner
