#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "maner/checkpoint.hpp"
#include "maner/configfile.hpp"
#include "maner/corpus.hpp"
#include "maner/metrics.hpp"
#include "maner/mlm.hpp"
#include "maner/model.hpp"
#include "maner/strategies.hpp"

namespace maner {

// Every knob of the study, with desk-scale defaults. The canonical text of
// this config is embedded in checkpoints so downstream commands regenerate
// the identical language universe.
struct ExperimentConfig {
  // language universe
  int suite_languages = 24;
  int covered_languages = 16;  // suite languages included in pretraining
  int sweep_languages = 4;
  uint64_t lang_seed = 42;
  LanguageSpec lang_spec;

  // data regime
  int n_train = 100;
  int n_test = 100;
  int sweep_train = 1000;

  // model (vocab_size is derived from the universe, not configurable)
  int model_layers = 2;
  int model_dim = 64;
  int model_heads = 4;
  int model_ff_dim = 128;
  int model_max_seq_len = 128;
  double model_dropout = 0.1;

  // pretraining
  int pretrain_sentences = 2000;
  MlmConfig mlm;

  // fine-tuning
  std::string finetune_lr_preset = "toy";  // toy = 3e-5, reference = 5e-6
  double finetune_lr = 3e-5;
  int finetune_epochs = 30;
  int finetune_batch = 4;
  double p_ner = 0.15;

  int workers = 2;
  uint64_t seed = 7;

  static ExperimentConfig defaults() { return {}; }
  static ExperimentConfig from_kv(const KeyValueConfig& kv);
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_text(const std::string& text, const std::string& origin);

  // Sorted key=value lines; identical configs produce identical text.
  std::string canonical_text() const;
  std::string digest() const;

  // Keys that shape the universe/model/pretraining must match between a
  // checkpoint and any config used with it.
  void require_compatible(const ExperimentConfig& checkpoint_cfg) const;

  ModelConfig model_config(int vocab_size) const;
  FinetuneConfig finetune_config(uint64_t run_seed) const;
};

struct LanguageUniverse {
  std::vector<SyntheticLanguage> suite;
  std::vector<SyntheticLanguage> sweep;
  Vocab vocab;  // closed over every language's surface vocabulary

  // Languages whose text enters the pretraining corpus: the first
  // `covered_languages` suite languages plus all sweep languages.
  std::vector<const SyntheticLanguage*> pretrain_languages(int covered) const;
};

LanguageUniverse build_universe(const ExperimentConfig& cfg);

// Pretrains from scratch and assembles the checkpoint (params + vocab +
// coverage + provenance). Per-epoch losses land in `curve`.
Checkpoint run_pretrain(const ExperimentConfig& cfg, MlmTrainStats* stats_out = nullptr,
                        std::ostream* log = nullptr);

struct RunResult {
  std::string language;
  uint64_t language_seed = 0;
  std::string strategy;
  uint64_t run_seed = 0;
  bool covered = false;  // language was in the pretraining coverage set
  EvalResult eval;
};

// Fine-tunes + evaluates every (language, strategy) pair on fresh copies of
// the checkpoint params; tasks run on `workers` threads and results come
// back in deterministic (language-major) order. The checkpoint is never
// mutated.
std::vector<RunResult> run_suite(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                                 const std::vector<Strategy>& strategies, int n_languages,
                                 std::ostream* log = nullptr);

struct SweepResult {
  std::string language;
  uint64_t language_seed = 0;
  int train_size = 0;
  std::string strategy;
  uint64_t run_seed = 0;
  double f1 = 0.0;
};

// Fine-tunes baseline1 and maner-mask on nested train-set prefixes of the
// sweep languages.
std::vector<SweepResult> run_sweep(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                                   const std::vector<int>& sizes, std::ostream* log = nullptr);

// The <rand> row of a checkpoint must still be exactly its seeded
// initialization for the control-token ablation to be meaningful.
bool rand_row_is_pristine(const Checkpoint& ckpt);

// Mean F1 over the rows of one strategy.
double mean_f1(const std::vector<RunResult>& rows, const std::string& strategy,
               std::optional<bool> covered = std::nullopt);

}  // namespace maner
