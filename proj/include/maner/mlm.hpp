#pragma once

#include <vector>

#include "maner/common.hpp"
#include "maner/corpus.hpp"
#include "maner/model.hpp"
#include "maner/vocab.hpp"

namespace maner {

struct MlmConfig {
  double p_mlm = 0.15;
  // What happens to a selected position: mask / random corpus word / keep.
  double mask_fraction = 0.8;
  double random_fraction = 0.1;
  double keep_fraction = 0.1;
  int epochs = 10;
  double lr = 3e-4;
  int batch = 16;
  uint64_t seed = 0;

  void validate() const {
    if (p_mlm < 0.0 || p_mlm > 1.0) {
      throw ConfigError("mlm config: p_mlm must be in [0, 1]");
    }
    const double total = mask_fraction + random_fraction + keep_fraction;
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("mlm config: corruption fractions sum to " + std::to_string(total) +
                        ", expected 1");
    }
    if (mask_fraction < 0.0 || random_fraction < 0.0 || keep_fraction < 0.0) {
      throw ConfigError("mlm config: corruption fractions must be non-negative");
    }
    if (epochs < 0 || batch < 1) {
      throw ConfigError("mlm config: epochs must be >= 0 and batch >= 1");
    }
  }
};

struct CorruptedSentence {
  std::vector<int> token_ids;  // corrupted input
  std::vector<int> targets;    // original id at selected positions, IGNORE elsewhere
};

// Selects each non-PAD position with probability p_mlm, then rolls the
// mask/random/keep outcome. Random replacements draw real corpus words only;
// <rand> and the other specials are never inserted.
CorruptedSentence corrupt(const std::vector<int>& token_ids, const MlmConfig& cfg,
                          const Vocab& vocab, Rng& rng);

struct MlmTrainStats {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  double initial_loss = 0.0;       // eval pass before training
  double final_loss = 0.0;         // eval pass after training
};

// Mean MLM loss over the corpus with a deterministic corruption stream;
// used for the before/after comparison.
double mlm_eval_loss(ModelParams<float>& params, const std::vector<std::vector<int>>& corpus_ids,
                     const MlmConfig& cfg, const Vocab& vocab, uint64_t eval_seed);

// MLM pretraining over an unlabeled corpus. The <rand> embedding row takes
// part in nothing: it is excluded from corruption replacements, receives no
// gradient, and is verified bit-identical afterwards.
MlmTrainStats pretrain(ModelParams<float>& params, const std::vector<std::vector<std::string>>& corpus,
                       const Vocab& vocab, const MlmConfig& cfg, std::ostream* log = nullptr);

}  // namespace maner
