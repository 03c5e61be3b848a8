#pragma once

#include <string>
#include <vector>

#include "maner/adam.hpp"
#include "maner/corpus.hpp"
#include "maner/model.hpp"
#include "maner/tensor.hpp"
#include "maner/vocab.hpp"

namespace maner {

enum class StrategyType {
  baseline1,   // plain token classification on the unmodified sentence
  baseline2,   // words randomly replaced by <mask>, labels stay in place
  maner,       // a marker token prepended before every word; labels on markers
};

struct Strategy {
  StrategyType type = StrategyType::baseline1;
  double p_ner = 0.15;          // baseline2 replacement probability
  Marker marker = Marker::mask; // maner marker choice

  static Strategy baseline1() { return {StrategyType::baseline1, 0.0, Marker::mask}; }
  static Strategy baseline2(double p) {
    if (p < 0.0 || p > 1.0) {
      throw ConfigError("baseline2: p_ner must be in [0, 1]");
    }
    return {StrategyType::baseline2, p, Marker::mask};
  }
  static Strategy maner(Marker m) { return {StrategyType::maner, 0.0, m}; }

  // CLI names: baseline1 | baseline2 | maner-mask | maner-rand
  std::string name() const;
  static Strategy parse(const std::string& name, double p_ner = 0.15);
};

// One training unit: token ids with aligned label ids, kIgnoreLabel at
// positions that carry no loss, and the word -> label-position map.
struct ReformattedExample {
  std::vector<int> token_ids;
  std::vector<int> label_ids;
  std::vector<size_t> word_to_position;
};

std::vector<int> label_ids_of(const TaggedSentence& sentence);

ReformattedExample reformat_baseline1(const TaggedSentence& sentence, const Vocab& vocab);

// Each word independently becomes <mask> with probability p_ner; the label
// stays attached to the position either way.
ReformattedExample reformat_baseline2(const TaggedSentence& sentence, const Vocab& vocab,
                                      double p_ner, Rng& rng);

// tokens = [marker, w0, marker, w1, ...]; labels = [c0, IGNORE, c1, IGNORE, ...];
// word i's label sits at position 2i.
ReformattedExample reformat_maner(const TaggedSentence& sentence, const Vocab& vocab,
                                  Marker marker, int max_seq_len);

struct FinetuneConfig {
  int epochs = 30;
  double lr = 3e-5;
  int batch = 4;
  uint64_t seed = 0;
  double dropout_override = -1.0;  // < 0 keeps the model config's rate
};

// Shared fine-tuning loop. Baseline2 re-rolls its masking pattern every
// epoch; baseline1/maner reformatting is deterministic. Aborts with
// TrainingError if the loss goes non-finite.
template <typename Real>
void finetune(ModelParams<Real>& params, const std::vector<TaggedSentence>& train,
              const Vocab& vocab, const Strategy& strategy, const FinetuneConfig& cfg);

// IOB2 labels for one sentence; length equals the word count for every
// strategy. Inference never masks inputs for baseline2.
template <typename Real>
std::vector<std::string> predict(ModelParams<Real>& params,
                                 const std::vector<std::string>& words, const Vocab& vocab,
                                 const Strategy& strategy);

// The training loss of one sentence under a strategy, on the caller's graph
// (grad checks and the training loop share this path).
template <typename Real>
Tensor<Real> strategy_loss(GradGraph<Real>& g, const BoundModel<Real>& bound,
                           const ReformattedExample& example, const ForwardOptions& opts = {});

// ----------------------------- implementation -----------------------------

template <typename Real>
Tensor<Real> strategy_loss(GradGraph<Real>& g, const BoundModel<Real>& bound,
                           const ReformattedExample& example, const ForwardOptions& opts) {
  Tensor<Real> enc = encode(g, bound, example.token_ids, opts);
  Tensor<Real> logits = ner_logits(g, bound, enc);
  return g.masked_cross_entropy(logits, example.label_ids);
}

namespace detail {

template <typename Real>
ReformattedExample reformat_for_training(const TaggedSentence& sentence, const Vocab& vocab,
                                         const Strategy& strategy, int max_seq_len, Rng& mask_rng) {
  switch (strategy.type) {
    case StrategyType::baseline1:
      return reformat_baseline1(sentence, vocab);
    case StrategyType::baseline2:
      return reformat_baseline2(sentence, vocab, strategy.p_ner, mask_rng);
    case StrategyType::maner:
      return reformat_maner(sentence, vocab, strategy.marker, max_seq_len);
  }
  throw Error("unknown strategy");
}

}  // namespace detail

template <typename Real>
void finetune(ModelParams<Real>& params, const std::vector<TaggedSentence>& train,
              const Vocab& vocab, const Strategy& strategy, const FinetuneConfig& cfg) {
  if (train.empty()) {
    throw TrainingError("finetune: empty training set");
  }
  if (cfg.epochs < 0 || cfg.batch < 1) {
    throw ConfigError("finetune: epochs must be >= 0 and batch >= 1");
  }
  ModelConfig run_cfg = params.config;
  if (cfg.dropout_override >= 0.0) {
    run_cfg.dropout = cfg.dropout_override;
  }

  Adam<Real> adam(AdamConfig<Real>{static_cast<Real>(cfg.lr), Real(0.9), Real(0.999),
                                   Real(1e-8)});
  std::vector<Array<Real>*> arrays = params.param_arrays();

  // deterministic per-purpose streams so strategies that consume no mask
  // randomness (baseline1, maner) share trajectories with baseline2 at p=0
  Rng shuffle_rng(Rng::derive(cfg.seed, "finetune-shuffle"));
  Rng dropout_rng(Rng::derive(cfg.seed, "finetune-dropout"));

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // baseline2 re-rolls its corruption each epoch from its own stream
    Rng mask_rng(Rng::derive(cfg.seed, "finetune-mask", static_cast<uint64_t>(epoch)));
    std::vector<ReformattedExample> examples;
    examples.reserve(train.size());
    for (const auto& sentence : train) {
      examples.push_back(detail::reformat_for_training<Real>(sentence, vocab, strategy,
                                                             run_cfg.max_seq_len, mask_rng));
    }
    shuffle_rng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      GradGraph<Real> g;
      BoundModel<Real> bound = bind(g, params);
      bound.config = &run_cfg;
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_rng = &dropout_rng;
      Tensor<Real> total;
      bool first = true;
      size_t counted = 0;
      for (size_t i = start; i < end; ++i) {
        const ReformattedExample& ex = examples[order[i]];
        if (ex.token_ids.empty()) {
          continue;
        }
        Tensor<Real> loss = strategy_loss(g, bound, ex, opts);
        total = first ? loss : g.add(total, loss);
        first = false;
        ++counted;
      }
      if (first) {
        continue;
      }
      Tensor<Real> mean_loss = g.scale(total, Real(1) / static_cast<Real>(counted));
      const Real loss_value = mean_loss.scalar_value();
      if (!std::isfinite(static_cast<double>(loss_value))) {
        throw TrainingError("finetune: non-finite loss at epoch " + std::to_string(epoch));
      }
      g.backward(mean_loss);
      adam.step(std::span<Array<Real>* const>(arrays.data(), arrays.size()),
                collect_grads(g, bound));
    }
  }
}

template <typename Real>
std::vector<std::string> predict(ModelParams<Real>& params,
                                 const std::vector<std::string>& words, const Vocab& vocab,
                                 const Strategy& strategy) {
  if (words.empty()) {
    return {};
  }
  std::vector<int> token_ids;
  std::vector<size_t> label_positions;
  if (strategy.type == StrategyType::maner) {
    const int marker = vocab.marker_id(strategy.marker);
    token_ids.reserve(words.size() * 2);
    for (const auto& w : words) {
      label_positions.push_back(token_ids.size());
      token_ids.push_back(marker);
      token_ids.push_back(vocab.encode_word(w));
    }
  } else {
    // baseline1 and baseline2 both classify the unmodified sentence
    token_ids = vocab.encode(words);
    for (size_t i = 0; i < words.size(); ++i) {
      label_positions.push_back(i);
    }
  }

  GradGraph<Real> g(false);
  BoundModel<Real> bound = bind(g, params);
  Tensor<Real> enc = encode(g, bound, token_ids);
  Tensor<Real> probs = ner_probs(g, bound, enc);
  const auto pv = probs.value();
  const size_t k = probs.shape().cols();

  std::vector<std::string> labels;
  labels.reserve(words.size());
  for (const size_t pos : label_positions) {
    const Real* row = pv.data() + pos * k;
    size_t best = 0;
    for (size_t c = 1; c < k; ++c) {
      if (row[c] > row[best]) {  // ties break to the lowest index
        best = c;
      }
    }
    labels.emplace_back(LabelSet::name(static_cast<int>(best)));
  }
  return labels;
}

}  // namespace maner
