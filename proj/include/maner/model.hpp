#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "maner/adam.hpp"
#include "maner/common.hpp"
#include "maner/labels.hpp"
#include "maner/tensor.hpp"

namespace maner {

struct ModelConfig {
  int layers = 2;
  int dim = 64;
  int heads = 4;
  int ff_dim = 128;
  int max_seq_len = 128;
  int vocab_size = 0;
  double dropout = 0.1;
  int num_labels = LabelSet::kCount;

  void validate() const {
    if (dim <= 0 || heads <= 0 || dim % heads != 0) {
      throw ConfigError("model config: dim " + std::to_string(dim) +
                        " must be a positive multiple of heads " + std::to_string(heads));
    }
    if (layers < 0 || ff_dim <= 0 || max_seq_len <= 0 || vocab_size <= 0) {
      throw ConfigError("model config: layers/ff_dim/max_seq_len/vocab_size must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
      throw ConfigError("model config: dropout must be in [0, 1)");
    }
  }
};

// All learned arrays, enumerable by name in a fixed order. The MLM head is
// tied to the token embeddings (plus its own bias); the NER head is the
// [dim x num_labels] matrix the classifier trains.
template <typename Real>
struct ModelParams {
  ModelConfig config;

  Array<Real> tok_emb;  // [V x D]
  Array<Real> pos_emb;  // [maxT x D]

  struct Layer {
    Array<Real> ln1_gain, ln1_bias;
    Array<Real> wq, bq, wk, bk, wv, bv, wo, bo;
    Array<Real> ln2_gain, ln2_bias;
    Array<Real> w1, b1, w2, b2;
  };
  std::vector<Layer> layers;

  Array<Real> lnf_gain, lnf_bias;
  Array<Real> mlm_bias;             // [V]
  Array<Real> ner_w;                // [D x num_labels]
  Array<Real> ner_b;                // [num_labels]

  struct Named {
    std::string name;
    Array<Real>* array;
  };

  std::vector<Named> named_params() {
    std::vector<Named> list;
    list.push_back({"tok_emb", &tok_emb});
    list.push_back({"pos_emb", &pos_emb});
    for (size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      Layer& lay = layers[l];
      list.push_back({p + "ln1_gain", &lay.ln1_gain});
      list.push_back({p + "ln1_bias", &lay.ln1_bias});
      list.push_back({p + "wq", &lay.wq});
      list.push_back({p + "bq", &lay.bq});
      list.push_back({p + "wk", &lay.wk});
      list.push_back({p + "bk", &lay.bk});
      list.push_back({p + "wv", &lay.wv});
      list.push_back({p + "bv", &lay.bv});
      list.push_back({p + "wo", &lay.wo});
      list.push_back({p + "bo", &lay.bo});
      list.push_back({p + "ln2_gain", &lay.ln2_gain});
      list.push_back({p + "ln2_bias", &lay.ln2_bias});
      list.push_back({p + "w1", &lay.w1});
      list.push_back({p + "b1", &lay.b1});
      list.push_back({p + "w2", &lay.w2});
      list.push_back({p + "b2", &lay.b2});
    }
    list.push_back({"lnf_gain", &lnf_gain});
    list.push_back({"lnf_bias", &lnf_bias});
    list.push_back({"mlm_bias", &mlm_bias});
    list.push_back({"ner_w", &ner_w});
    list.push_back({"ner_b", &ner_b});
    return list;
  }

  std::vector<Array<Real>*> param_arrays() {
    std::vector<Array<Real>*> arrays;
    for (auto& n : named_params()) {
      arrays.push_back(n.array);
    }
    return arrays;
  }
};

namespace detail {

template <typename Real>
void fill_normal(Array<Real>& a, Rng& rng, double stddev) {
  for (auto& v : a.data) {
    v = static_cast<Real>(rng.normal() * stddev);
  }
}

}  // namespace detail

// Zeroed parameter arrays with the shapes the config dictates.
template <typename Real>
ModelParams<Real> allocate_params(const ModelConfig& config) {
  config.validate();
  ModelParams<Real> p;
  p.config = config;
  const size_t v = static_cast<size_t>(config.vocab_size);
  const size_t d = static_cast<size_t>(config.dim);
  const size_t f = static_cast<size_t>(config.ff_dim);
  const size_t n_labels = static_cast<size_t>(config.num_labels);

  p.tok_emb = Array<Real>(Shape(v, d));
  p.pos_emb = Array<Real>(Shape(static_cast<size_t>(config.max_seq_len), d));
  p.layers.resize(static_cast<size_t>(config.layers));
  for (auto& lay : p.layers) {
    lay.ln1_gain = Array<Real>(Shape(d));
    lay.ln1_bias = Array<Real>(Shape(d));
    lay.wq = Array<Real>(Shape(d, d));
    lay.bq = Array<Real>(Shape(d));
    lay.wk = Array<Real>(Shape(d, d));
    lay.bk = Array<Real>(Shape(d));
    lay.wv = Array<Real>(Shape(d, d));
    lay.bv = Array<Real>(Shape(d));
    lay.wo = Array<Real>(Shape(d, d));
    lay.bo = Array<Real>(Shape(d));
    lay.ln2_gain = Array<Real>(Shape(d));
    lay.ln2_bias = Array<Real>(Shape(d));
    lay.w1 = Array<Real>(Shape(d, f));
    lay.b1 = Array<Real>(Shape(f));
    lay.w2 = Array<Real>(Shape(f, d));
    lay.b2 = Array<Real>(Shape(d));
  }
  p.lnf_gain = Array<Real>(Shape(d));
  p.lnf_bias = Array<Real>(Shape(d));
  p.mlm_bias = Array<Real>(Shape(v));
  p.ner_w = Array<Real>(Shape(d, n_labels));
  p.ner_b = Array<Real>(Shape(n_labels));
  return p;
}

// Deterministic initialization: embeddings and linear weights ~ N(0, 0.02),
// biases zero, layer-norm gain 1 / bias 0.
template <typename Real>
ModelParams<Real> init_params(const ModelConfig& config, uint64_t seed) {
  constexpr double kInitStd = 0.02;
  Rng rng(Rng::derive(seed, "init"));

  ModelParams<Real> p = allocate_params<Real>(config);
  detail::fill_normal(p.tok_emb, rng, kInitStd);
  detail::fill_normal(p.pos_emb, rng, kInitStd);
  for (auto& lay : p.layers) {
    std::fill(lay.ln1_gain.data.begin(), lay.ln1_gain.data.end(), Real(1));
    detail::fill_normal(lay.wq, rng, kInitStd);
    detail::fill_normal(lay.wk, rng, kInitStd);
    detail::fill_normal(lay.wv, rng, kInitStd);
    detail::fill_normal(lay.wo, rng, kInitStd);
    std::fill(lay.ln2_gain.data.begin(), lay.ln2_gain.data.end(), Real(1));
    detail::fill_normal(lay.w1, rng, kInitStd);
    detail::fill_normal(lay.w2, rng, kInitStd);
  }
  std::fill(p.lnf_gain.data.begin(), p.lnf_gain.data.end(), Real(1));
  detail::fill_normal(p.ner_w, rng, kInitStd);
  return p;
}

// Graph handles for one params instance; build once per graph.
template <typename Real>
struct BoundModel {
  const ModelConfig* config = nullptr;
  Tensor<Real> tok_emb, pos_emb;
  struct Layer {
    Tensor<Real> ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor<Real> ln2_gain, ln2_bias, w1, b1, w2, b2;
  };
  std::vector<Layer> layers;
  Tensor<Real> lnf_gain, lnf_bias, mlm_bias, ner_w, ner_b;
};

template <typename Real>
BoundModel<Real> bind(GradGraph<Real>& g, ModelParams<Real>& params) {
  BoundModel<Real> b;
  b.config = &params.config;
  b.tok_emb = g.leaf(params.tok_emb);
  b.pos_emb = g.leaf(params.pos_emb);
  b.layers.resize(params.layers.size());
  for (size_t l = 0; l < params.layers.size(); ++l) {
    auto& src = params.layers[l];
    auto& dst = b.layers[l];
    dst.ln1_gain = g.leaf(src.ln1_gain);
    dst.ln1_bias = g.leaf(src.ln1_bias);
    dst.wq = g.leaf(src.wq);
    dst.bq = g.leaf(src.bq);
    dst.wk = g.leaf(src.wk);
    dst.bk = g.leaf(src.bk);
    dst.wv = g.leaf(src.wv);
    dst.bv = g.leaf(src.bv);
    dst.wo = g.leaf(src.wo);
    dst.bo = g.leaf(src.bo);
    dst.ln2_gain = g.leaf(src.ln2_gain);
    dst.ln2_bias = g.leaf(src.ln2_bias);
    dst.w1 = g.leaf(src.w1);
    dst.b1 = g.leaf(src.b1);
    dst.w2 = g.leaf(src.w2);
    dst.b2 = g.leaf(src.b2);
  }
  b.lnf_gain = g.leaf(params.lnf_gain);
  b.lnf_bias = g.leaf(params.lnf_bias);
  b.mlm_bias = g.leaf(params.mlm_bias);
  b.ner_w = g.leaf(params.ner_w);
  b.ner_b = g.leaf(params.ner_b);
  return b;
}

// Gradients in named_params() order, post-backward.
template <typename Real>
std::vector<std::span<const Real>> collect_grads(const GradGraph<Real>& g,
                                                 const BoundModel<Real>& b) {
  std::vector<std::span<const Real>> grads;
  grads.push_back(g.grad(b.tok_emb));
  grads.push_back(g.grad(b.pos_emb));
  for (const auto& lay : b.layers) {
    grads.push_back(g.grad(lay.ln1_gain));
    grads.push_back(g.grad(lay.ln1_bias));
    grads.push_back(g.grad(lay.wq));
    grads.push_back(g.grad(lay.bq));
    grads.push_back(g.grad(lay.wk));
    grads.push_back(g.grad(lay.bk));
    grads.push_back(g.grad(lay.wv));
    grads.push_back(g.grad(lay.bv));
    grads.push_back(g.grad(lay.wo));
    grads.push_back(g.grad(lay.bo));
    grads.push_back(g.grad(lay.ln2_gain));
    grads.push_back(g.grad(lay.ln2_bias));
    grads.push_back(g.grad(lay.w1));
    grads.push_back(g.grad(lay.b1));
    grads.push_back(g.grad(lay.w2));
    grads.push_back(g.grad(lay.b2));
  }
  grads.push_back(g.grad(b.lnf_gain));
  grads.push_back(g.grad(b.lnf_bias));
  grads.push_back(g.grad(b.mlm_bias));
  grads.push_back(g.grad(b.ner_w));
  grads.push_back(g.grad(b.ner_b));
  return grads;
}

struct ForwardOptions {
  bool training = false;  // enables dropout
  Rng* dropout_rng = nullptr;
};

template <typename Real>
Tensor<Real> linear(GradGraph<Real>& g, Tensor<Real> x, Tensor<Real> w, Tensor<Real> b) {
  return g.add_bias(g.matmul(x, w), b);
}

// Pre-norm transformer encoder: contextual embeddings for one token-id
// sequence, [T x D].
template <typename Real>
Tensor<Real> encode(GradGraph<Real>& g, const BoundModel<Real>& b,
                    const std::vector<int>& token_ids, const ForwardOptions& opts = {}) {
  const ModelConfig& cfg = *b.config;
  const size_t t = token_ids.size();
  if (t == 0) {
    throw DimensionError("encode: empty token sequence");
  }
  if (t > static_cast<size_t>(cfg.max_seq_len)) {
    throw DimensionError("encode: sequence length " + std::to_string(t) +
                         " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  }
  const Real rate =
      opts.training && opts.dropout_rng != nullptr ? static_cast<Real>(cfg.dropout) : Real(0);
  auto drop = [&](Tensor<Real> x) {
    return rate == Real(0) ? x : g.dropout(x, rate, *opts.dropout_rng);
  };

  std::vector<int> positions(t);
  std::iota(positions.begin(), positions.end(), 0);
  Tensor<Real> x = g.add(g.embedding(b.tok_emb, token_ids), g.embedding(b.pos_emb, positions));
  x = drop(x);

  for (const auto& lay : b.layers) {
    Tensor<Real> h = g.layer_norm(x, lay.ln1_gain, lay.ln1_bias);
    Tensor<Real> q = linear(g, h, lay.wq, lay.bq);
    Tensor<Real> k = linear(g, h, lay.wk, lay.bk);
    Tensor<Real> v = linear(g, h, lay.wv, lay.bv);
    Tensor<Real> a = g.attention(q, k, v, static_cast<size_t>(cfg.heads));
    a = drop(linear(g, a, lay.wo, lay.bo));
    x = g.add(x, a);

    Tensor<Real> h2 = g.layer_norm(x, lay.ln2_gain, lay.ln2_bias);
    Tensor<Real> f = linear(g, h2, lay.w1, lay.b1);
    f = g.gelu(f);
    f = drop(linear(g, f, lay.w2, lay.b2));
    x = g.add(x, f);
  }
  return g.layer_norm(x, b.lnf_gain, b.lnf_bias);
}

// [T x num_labels] classifier logits over the label set.
template <typename Real>
Tensor<Real> ner_logits(GradGraph<Real>& g, const BoundModel<Real>& b, Tensor<Real> embeddings) {
  return linear(g, embeddings, b.ner_w, b.ner_b);
}

// Per-token probability rows over the label set.
template <typename Real>
Tensor<Real> ner_probs(GradGraph<Real>& g, const BoundModel<Real>& b, Tensor<Real> embeddings) {
  return g.softmax(ner_logits(g, b, embeddings));
}

// [T x V] vocabulary logits through the tied embedding matrix.
template <typename Real>
Tensor<Real> mlm_logits(GradGraph<Real>& g, const BoundModel<Real>& b, Tensor<Real> embeddings) {
  return g.add_bias(g.matmul_nt(embeddings, b.tok_emb), b.mlm_bias);
}

// Eval-mode contextual embeddings as a plain array (no gradient tape).
template <typename Real>
Array<Real> encode_eval(ModelParams<Real>& params, const std::vector<int>& token_ids) {
  GradGraph<Real> g(false);
  BoundModel<Real> b = bind(g, params);
  Tensor<Real> x = encode(g, b, token_ids);
  Array<Real> out(x.shape());
  const auto v = x.value();
  std::copy(v.begin(), v.end(), out.data.begin());
  return out;
}

}  // namespace maner
