#include <doctest.h>

#include <cmath>
#include <vector>

#include "maner/model.hpp"

using namespace maner;

namespace {

ModelConfig tiny_config(int vocab_size = 10, int layers = 1) {
  ModelConfig c;
  c.layers = layers;
  c.dim = 8;
  c.heads = 2;
  c.ff_dim = 12;
  c.max_seq_len = 16;
  c.vocab_size = vocab_size;
  c.dropout = 0.0;
  return c;
}

template <typename Real>
bool params_equal(ModelParams<Real>& a, ModelParams<Real>& b) {
  auto na = a.named_params();
  auto nb = b.named_params();
  if (na.size() != nb.size()) {
    return false;
  }
  for (size_t i = 0; i < na.size(); ++i) {
    if (na[i].array->data != nb[i].array->data) {
      return false;
    }
  }
  return true;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-6);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("initialization is deterministic in the seed") {
  auto a = init_params<double>(tiny_config(), 5);
  auto b = init_params<double>(tiny_config(), 5);
  auto c = init_params<double>(tiny_config(), 6);
  CHECK(params_equal(a, b));
  CHECK_FALSE(params_equal(a, c));
}

TEST_CASE("ner head has shape dim x 7") {
  auto p = init_params<float>(tiny_config(), 1);
  CHECK(p.ner_w.shape == Shape(8, 7));
  CHECK(p.ner_b.shape == Shape(size_t{7}));
}

TEST_CASE("dim must divide into heads") {
  ModelConfig c = tiny_config();
  c.heads = 3;
  CHECK_THROWS_AS(init_params<float>(c, 1), ConfigError);
}

TEST_CASE("encode produces one row per token") {
  auto p = init_params<double>(tiny_config(), 2);
  const Array<double> out = encode_eval(p, {4});
  CHECK(out.shape == Shape(1, 8));
}

TEST_CASE("encode enforces the length limit") {
  auto p = init_params<double>(tiny_config(), 2);
  const std::vector<int> too_long(17, 1);
  GradGraph<double> g;
  auto b = bind(g, p);
  CHECK_THROWS_AS(encode(g, b, too_long), DimensionError);
}

TEST_CASE("positional embeddings make order matter") {
  auto p = init_params<double>(tiny_config(), 3);
  const Array<double> ab = encode_eval(p, {4, 5});
  const Array<double> ba = encode_eval(p, {5, 4});
  // row 0 of [4,5] vs row 1 of [5,4]: same token, different position
  bool any_differs = false;
  for (size_t c = 0; c < 8; ++c) {
    if (ab.at(0, c) != ba.at(1, c)) {
      any_differs = true;
    }
  }
  CHECK(any_differs);
}

TEST_CASE("zero-layer model reduces to a table lookup plus the final norm") {
  auto p = init_params<double>(tiny_config(10, 0), 7);
  const std::vector<int> ids = {3, 9, 0};
  const Array<double> out = encode_eval(p, ids);

  // direct oracle: row = normalize(tok_emb[id] + pos_emb[i]) * gain + bias
  for (size_t i = 0; i < ids.size(); ++i) {
    std::vector<double> row(8);
    for (size_t c = 0; c < 8; ++c) {
      row[c] = p.tok_emb.at(static_cast<size_t>(ids[i]), c) + p.pos_emb.at(i, c);
    }
    double mu = 0.0;
    for (const double v : row) {
      mu += v;
    }
    mu /= 8.0;
    double var = 0.0;
    for (const double v : row) {
      var += (v - mu) * (v - mu);
    }
    var /= 8.0;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (size_t c = 0; c < 8; ++c) {
      const double expect =
          (row[c] - mu) * inv * p.lnf_gain.data[c] + p.lnf_bias.data[c];
      CHECK(out.at(i, c) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("encode in eval mode is bitwise deterministic") {
  auto p = init_params<float>(tiny_config(12, 2), 11);
  const std::vector<int> ids = {1, 7, 7, 2, 10};
  const Array<float> a = encode_eval(p, ids);
  const Array<float> b = encode_eval(p, ids);
  CHECK(a.data == b.data);
}

TEST_CASE("ner_probs rows are distributions; zero weights give uniform") {
  auto p = init_params<double>(tiny_config(), 3);
  GradGraph<double> g;
  auto b = bind(g, p);
  auto enc = encode(g, b, {1, 2, 3});
  auto probs = ner_probs(g, b, enc);
  for (size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (size_t c = 0; c < 7; ++c) {
      const double v = probs.value()[r * 7 + c];
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }

  std::fill(p.ner_w.data.begin(), p.ner_w.data.end(), 0.0);
  std::fill(p.ner_b.data.begin(), p.ner_b.data.end(), 0.0);
  GradGraph<double> g2;
  auto b2 = bind(g2, p);
  auto probs2 = ner_probs(g2, b2, encode(g2, b2, {1, 2}));
  for (size_t i = 0; i < 2 * 7; ++i) {
    CHECK(probs2.value()[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  }
}

TEST_CASE("single-token ner_probs matches the naive matrix-vector oracle") {
  auto p = init_params<double>(tiny_config(), 13);
  GradGraph<double> g;
  auto b = bind(g, p);
  auto enc = encode(g, b, {5});
  auto probs = ner_probs(g, b, enc);

  std::vector<double> scores(7, 0.0);
  for (size_t c = 0; c < 7; ++c) {
    for (size_t d = 0; d < 8; ++d) {
      scores[c] += enc.value()[d] * p.ner_w.at(d, c);
    }
    scores[c] += p.ner_b.data[c];
  }
  double mx = scores[0];
  for (const double s : scores) {
    mx = std::max(mx, s);
  }
  double se = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    se += s;
  }
  for (size_t c = 0; c < 7; ++c) {
    CHECK(probs.value()[c] == doctest::Approx(scores[c] / se).epsilon(1e-12));
  }
}

TEST_CASE("mlm head is tied to the token embeddings") {
  auto p = init_params<double>(tiny_config(), 17);
  const std::vector<int> ids = {4, 5};

  auto logits_of = [&](ModelParams<double>& params) {
    GradGraph<double> g;
    auto b = bind(g, params);
    auto out = mlm_logits(g, b, encode(g, b, ids));
    CHECK(out.shape() == Shape(2, 10));
    return std::vector<double>(out.value().begin(), out.value().end());
  };

  const auto before = logits_of(p);
  // perturbing an unused embedding row changes exactly its logit column
  for (size_t c = 0; c < 8; ++c) {
    p.tok_emb.at(7, c) += 0.25;
  }
  const auto after = logits_of(p);
  for (size_t r = 0; r < 2; ++r) {
    for (size_t c = 0; c < 10; ++c) {
      if (c == 7) {
        CHECK(before[r * 10 + c] != after[r * 10 + c]);
      } else {
        CHECK(before[r * 10 + c] == after[r * 10 + c]);
      }
    }
  }
}

TEST_CASE("zero embeddings produce all-zero mlm logits") {
  auto p = init_params<double>(tiny_config(), 19);
  std::fill(p.tok_emb.data.begin(), p.tok_emb.data.end(), 0.0);
  GradGraph<double> g;
  auto b = bind(g, p);
  auto out = mlm_logits(g, b, encode(g, b, {1, 2, 3}));
  for (const double v : out.value()) {
    CHECK(v == 0.0);
  }
}

TEST_CASE("full-model gradients pass finite differences for every block") {
  auto params = init_params<double>(tiny_config(10, 1), 23);
  const std::vector<int> token_ids = {2, 6, 1, 9};
  const std::vector<int> ner_labels = {0, kIgnoreLabel, 3, 5};
  const std::vector<int> mlm_targets = {kIgnoreLabel, 6, kIgnoreLabel, 9};

  enum class Head { ner, mlm };
  auto loss_value = [&](ModelParams<double>& p, Head head) {
    GradGraph<double> g;
    auto b = bind(g, p);
    auto enc = encode(g, b, token_ids);
    if (head == Head::ner) {
      return g.masked_cross_entropy(ner_logits(g, b, enc), ner_labels).scalar_value();
    }
    return g.masked_cross_entropy(mlm_logits(g, b, enc), mlm_targets).scalar_value();
  };

  for (const Head head : {Head::ner, Head::mlm}) {
    GradGraph<double> g;
    auto b = bind(g, params);
    auto enc = encode(g, b, token_ids);
    auto loss = head == Head::ner
                    ? g.masked_cross_entropy(ner_logits(g, b, enc), ner_labels)
                    : g.masked_cross_entropy(mlm_logits(g, b, enc), mlm_targets);
    g.backward(loss);
    const auto grads = collect_grads(g, b);
    auto named = params.named_params();
    REQUIRE(grads.size() == named.size());

    const double h = 1e-5;
    for (size_t block = 0; block < named.size(); ++block) {
      auto& data = named[block].array->data;
      for (size_t i = 0; i < data.size(); ++i) {
        const double saved = data[i];
        data[i] = saved + h;
        const double fp = loss_value(params, head);
        data[i] = saved - h;
        const double fm = loss_value(params, head);
        data[i] = saved;
        const double numeric = (fp - fm) / (2.0 * h);
        CHECK_MESSAGE(rel_err(grads[block][i], numeric) < 1e-4,
                      named[block].name << "[" << i << "] analytic " << grads[block][i]
                                        << " vs numeric " << numeric);
      }
    }
  }
}

}  // TEST_SUITE
