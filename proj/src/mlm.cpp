#include "maner/mlm.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace maner {

CorruptedSentence corrupt(const std::vector<int>& token_ids, const MlmConfig& cfg,
                          const Vocab& vocab, Rng& rng) {
  cfg.validate();
  const int n_words = vocab.size() - vocab.first_word_id();
  CorruptedSentence out;
  out.token_ids = token_ids;
  out.targets.assign(token_ids.size(), kIgnoreLabel);
  for (size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] == Vocab::kPad) {
      continue;  // padding is never selected
    }
    if (rng.uniform() >= cfg.p_mlm) {
      continue;
    }
    out.targets[i] = token_ids[i];
    const double roll = rng.uniform();
    if (roll < cfg.mask_fraction) {
      out.token_ids[i] = Vocab::kMask;
    } else if (roll < cfg.mask_fraction + cfg.random_fraction && n_words > 0) {
      // real corpus words only; specials (including <rand>) are never inserted
      out.token_ids[i] =
          vocab.first_word_id() + static_cast<int>(rng.below(static_cast<uint64_t>(n_words)));
    }
    // otherwise: keep the original token, still predicted
  }
  return out;
}

namespace {

std::vector<std::vector<int>> encode_corpus(const std::vector<std::vector<std::string>>& corpus,
                                            const Vocab& vocab) {
  std::vector<std::vector<int>> ids;
  ids.reserve(corpus.size());
  for (const auto& sentence : corpus) {
    ids.push_back(vocab.encode(sentence));
    for (const int id : ids.back()) {
      if (id == Vocab::kRand) {
        throw TrainingError("pretrain: <rand> token appeared in the pretraining corpus");
      }
    }
  }
  return ids;
}

bool has_active(const std::vector<int>& targets) {
  return std::any_of(targets.begin(), targets.end(),
                     [](int t) { return t != kIgnoreLabel; });
}

// The vocabulary head is wide; only computing it at selected positions is
// the same loss for a fraction of the work.
Tensor<float> mlm_loss(GradGraph<float>& g, const BoundModel<float>& bound,
                       const CorruptedSentence& c, const ForwardOptions& opts = {}) {
  Tensor<float> enc = encode(g, bound, c.token_ids, opts);
  std::vector<size_t> active_rows;
  std::vector<int> active_targets;
  for (size_t i = 0; i < c.targets.size(); ++i) {
    if (c.targets[i] != kIgnoreLabel) {
      active_rows.push_back(i);
      active_targets.push_back(c.targets[i]);
    }
  }
  Tensor<float> selected = g.gather_rows(enc, std::move(active_rows));
  Tensor<float> logits = mlm_logits(g, bound, selected);
  return g.masked_cross_entropy(logits, active_targets);
}

}  // namespace

double mlm_eval_loss(ModelParams<float>& params, const std::vector<std::vector<int>>& corpus_ids,
                     const MlmConfig& cfg, const Vocab& vocab, uint64_t eval_seed) {
  Rng rng(Rng::derive(eval_seed, "mlm-eval"));
  double total = 0.0;
  size_t counted = 0;
  for (const auto& ids : corpus_ids) {
    if (ids.empty()) {
      continue;
    }
    const CorruptedSentence c = corrupt(ids, cfg, vocab, rng);
    if (!has_active(c.targets)) {
      continue;
    }
    GradGraph<float> g(false);
    BoundModel<float> bound = bind(g, params);
    total += static_cast<double>(mlm_loss(g, bound, c).scalar_value());
    ++counted;
  }
  if (counted == 0) {
    throw TrainingError("mlm_eval_loss: no sentence had an active target");
  }
  return total / static_cast<double>(counted);
}

MlmTrainStats pretrain(ModelParams<float>& params,
                       const std::vector<std::vector<std::string>>& corpus, const Vocab& vocab,
                       const MlmConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (corpus.empty()) {
    throw TrainingError("pretrain: empty corpus");
  }
  const std::vector<std::vector<int>> corpus_ids = encode_corpus(corpus, vocab);

  const size_t d = static_cast<size_t>(params.config.dim);
  const size_t rand_row = static_cast<size_t>(Vocab::kRand) * d;
  const std::vector<float> rand_before(params.tok_emb.data.begin() + rand_row,
                                       params.tok_emb.data.begin() + rand_row + d);

  MlmTrainStats stats;
  stats.initial_loss = mlm_eval_loss(params, corpus_ids, cfg, vocab, cfg.seed);

  Adam<float> adam(AdamConfig<float>{static_cast<float>(cfg.lr), 0.9f, 0.999f, 1e-8f});
  std::vector<Array<float>*> arrays = params.param_arrays();

  Rng shuffle_rng(Rng::derive(cfg.seed, "mlm-shuffle"));
  Rng dropout_rng(Rng::derive(cfg.seed, "mlm-dropout"));
  std::vector<size_t> order(corpus_ids.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng mask_rng(Rng::derive(cfg.seed, "mlm-corrupt", static_cast<uint64_t>(epoch)));
    // corruption is re-rolled per epoch, in corpus order so it is
    // independent of the shuffled visit order
    std::vector<CorruptedSentence> corrupted;
    corrupted.reserve(corpus_ids.size());
    for (const auto& ids : corpus_ids) {
      corrupted.push_back(corrupt(ids, cfg, vocab, mask_rng));
    }
    shuffle_rng.shuffle(order);

    double epoch_total = 0.0;
    size_t epoch_batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      GradGraph<float> g;
      BoundModel<float> bound = bind(g, params);
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_rng = &dropout_rng;
      Tensor<float> total;
      bool first = true;
      size_t counted = 0;
      for (size_t i = start; i < end; ++i) {
        const CorruptedSentence& c = corrupted[order[i]];
        if (c.token_ids.empty() || !has_active(c.targets)) {
          continue;
        }
        Tensor<float> loss = mlm_loss(g, bound, c, opts);
        total = first ? loss : g.add(total, loss);
        first = false;
        ++counted;
      }
      if (first) {
        continue;
      }
      Tensor<float> mean_loss = g.scale(total, 1.0f / static_cast<float>(counted));
      const float loss_value = mean_loss.scalar_value();
      if (!std::isfinite(static_cast<double>(loss_value))) {
        throw TrainingError("pretrain: non-finite loss at epoch " + std::to_string(epoch));
      }
      g.backward(mean_loss);
      // freeze <rand>: no embedding-row or bias gradient reaches the optimizer
      auto emb_grad = g.grad_mutable(bound.tok_emb);
      std::fill(emb_grad.begin() + static_cast<long>(rand_row),
                emb_grad.begin() + static_cast<long>(rand_row + d), 0.0f);
      auto bias_grad = g.grad_mutable(bound.mlm_bias);
      bias_grad[static_cast<size_t>(Vocab::kRand)] = 0.0f;

      adam.step(std::span<Array<float>* const>(arrays.data(), arrays.size()),
                collect_grads(g, bound));
      epoch_total += static_cast<double>(loss_value);
      ++epoch_batches;
    }
    stats.epoch_loss.push_back(epoch_batches == 0 ? 0.0
                                                  : epoch_total / static_cast<double>(epoch_batches));
    if (log != nullptr) {
      *log << "mlm epoch " << epoch << " mean loss " << stats.epoch_loss.back() << std::endl;
    }
  }

  stats.final_loss = mlm_eval_loss(params, corpus_ids, cfg, vocab, cfg.seed);

  for (size_t i = 0; i < d; ++i) {
    if (params.tok_emb.data[rand_row + i] != rand_before[i]) {
      throw TrainingError("pretrain: the <rand> embedding row changed during pretraining");
    }
  }
  return stats;
}

}  // namespace maner
