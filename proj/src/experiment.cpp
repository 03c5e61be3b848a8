#include "maner/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "maner/sha256.hpp"

namespace maner {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Runs fn(0..n) on `workers` threads; rethrows the first task exception.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
  ExperimentConfig cfg;
  cfg.suite_languages = kv.get_int("suite.languages", cfg.suite_languages);
  cfg.covered_languages = kv.get_int("suite.covered", cfg.covered_languages);
  cfg.sweep_languages = kv.get_int("sweep.languages", cfg.sweep_languages);
  cfg.lang_seed = kv.get_u64("lang.seed", cfg.lang_seed);
  cfg.lang_spec.function_words = kv.get_int("lang.function_words", cfg.lang_spec.function_words);
  cfg.lang_spec.verbs = kv.get_int("lang.verbs", cfg.lang_spec.verbs);
  cfg.lang_spec.nouns = kv.get_int("lang.nouns", cfg.lang_spec.nouns);
  cfg.lang_spec.gazetteer_per = kv.get_int("lang.gazetteer_per", cfg.lang_spec.gazetteer_per);
  cfg.lang_spec.gazetteer_loc = kv.get_int("lang.gazetteer_loc", cfg.lang_spec.gazetteer_loc);
  cfg.lang_spec.gazetteer_org = kv.get_int("lang.gazetteer_org", cfg.lang_spec.gazetteer_org);
  cfg.lang_spec.templates = kv.get_int("lang.templates", cfg.lang_spec.templates);
  cfg.n_train = kv.get_int("data.train", cfg.n_train);
  cfg.n_test = kv.get_int("data.test", cfg.n_test);
  cfg.sweep_train = kv.get_int("sweep.train", cfg.sweep_train);
  cfg.model_layers = kv.get_int("model.layers", cfg.model_layers);
  cfg.model_dim = kv.get_int("model.dim", cfg.model_dim);
  cfg.model_heads = kv.get_int("model.heads", cfg.model_heads);
  cfg.model_ff_dim = kv.get_int("model.ff_dim", cfg.model_ff_dim);
  cfg.model_max_seq_len = kv.get_int("model.max_seq_len", cfg.model_max_seq_len);
  cfg.model_dropout = kv.get_double("model.dropout", cfg.model_dropout);
  cfg.pretrain_sentences = kv.get_int("pretrain.sentences_per_lang", cfg.pretrain_sentences);
  cfg.mlm.p_mlm = kv.get_double("pretrain.p_mlm", cfg.mlm.p_mlm);
  cfg.mlm.mask_fraction = kv.get_double("pretrain.mask_fraction", cfg.mlm.mask_fraction);
  cfg.mlm.random_fraction = kv.get_double("pretrain.random_fraction", cfg.mlm.random_fraction);
  cfg.mlm.keep_fraction = kv.get_double("pretrain.keep_fraction", cfg.mlm.keep_fraction);
  cfg.mlm.epochs = kv.get_int("pretrain.epochs", cfg.mlm.epochs);
  cfg.mlm.lr = kv.get_double("pretrain.lr", cfg.mlm.lr);
  cfg.mlm.batch = kv.get_int("pretrain.batch", cfg.mlm.batch);

  cfg.finetune_lr_preset = kv.get_string("finetune.lr_preset", cfg.finetune_lr_preset);
  if (cfg.finetune_lr_preset == "toy") {
    cfg.finetune_lr = 3e-5;
  } else if (cfg.finetune_lr_preset == "reference") {
    cfg.finetune_lr = 5e-6;
  } else {
    throw ConfigError("key 'finetune.lr_preset' must be 'toy' or 'reference', got '" +
                      cfg.finetune_lr_preset + "'");
  }
  cfg.finetune_lr = kv.get_double("finetune.lr", cfg.finetune_lr);
  cfg.finetune_epochs = kv.get_int("finetune.epochs", cfg.finetune_epochs);
  cfg.finetune_batch = kv.get_int("finetune.batch", cfg.finetune_batch);
  cfg.p_ner = kv.get_double("finetune.p_ner", cfg.p_ner);
  cfg.workers = kv.get_int("workers", cfg.workers);
  cfg.seed = kv.get_u64("seed", cfg.seed);

  const auto unknown = kv.unconsumed();
  if (!unknown.empty()) {
    throw ConfigError("unknown config key '" + unknown.front() + "'");
  }

  if (cfg.suite_languages < 1 || cfg.suite_languages > 99) {
    throw ConfigError("key 'suite.languages' must be in [1, 99]");
  }
  if (cfg.covered_languages < 1 || cfg.covered_languages >= cfg.suite_languages) {
    throw ConfigError(
        "key 'suite.covered' must leave both covered and uncovered suite languages non-empty");
  }
  if (cfg.sweep_languages < 1) {
    throw ConfigError("key 'sweep.languages' must be >= 1");
  }
  if (cfg.n_train < 1 || cfg.n_test < 1 || cfg.sweep_train < cfg.n_train) {
    throw ConfigError("keys 'data.train'/'data.test' must be >= 1 and 'sweep.train' >= 'data.train'");
  }
  if (cfg.p_ner < 0.0 || cfg.p_ner > 1.0) {
    throw ConfigError("key 'finetune.p_ner' must be in [0, 1]");
  }
  if (cfg.workers < 1) {
    throw ConfigError("key 'workers' must be >= 1");
  }
  cfg.mlm.seed = Rng::derive(cfg.seed, "mlm-train");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_kv(KeyValueConfig::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text, const std::string& origin) {
  return from_kv(KeyValueConfig::parse_text(text, origin));
}

std::string ExperimentConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["suite.languages"] = std::to_string(suite_languages);
  kv["suite.covered"] = std::to_string(covered_languages);
  kv["sweep.languages"] = std::to_string(sweep_languages);
  kv["lang.seed"] = std::to_string(lang_seed);
  kv["lang.function_words"] = std::to_string(lang_spec.function_words);
  kv["lang.verbs"] = std::to_string(lang_spec.verbs);
  kv["lang.nouns"] = std::to_string(lang_spec.nouns);
  kv["lang.gazetteer_per"] = std::to_string(lang_spec.gazetteer_per);
  kv["lang.gazetteer_loc"] = std::to_string(lang_spec.gazetteer_loc);
  kv["lang.gazetteer_org"] = std::to_string(lang_spec.gazetteer_org);
  kv["lang.templates"] = std::to_string(lang_spec.templates);
  kv["data.train"] = std::to_string(n_train);
  kv["data.test"] = std::to_string(n_test);
  kv["sweep.train"] = std::to_string(sweep_train);
  kv["model.layers"] = std::to_string(model_layers);
  kv["model.dim"] = std::to_string(model_dim);
  kv["model.heads"] = std::to_string(model_heads);
  kv["model.ff_dim"] = std::to_string(model_ff_dim);
  kv["model.max_seq_len"] = std::to_string(model_max_seq_len);
  kv["model.dropout"] = format_double(model_dropout);
  kv["pretrain.sentences_per_lang"] = std::to_string(pretrain_sentences);
  kv["pretrain.p_mlm"] = format_double(mlm.p_mlm);
  kv["pretrain.mask_fraction"] = format_double(mlm.mask_fraction);
  kv["pretrain.random_fraction"] = format_double(mlm.random_fraction);
  kv["pretrain.keep_fraction"] = format_double(mlm.keep_fraction);
  kv["pretrain.epochs"] = std::to_string(mlm.epochs);
  kv["pretrain.lr"] = format_double(mlm.lr);
  kv["pretrain.batch"] = std::to_string(mlm.batch);
  kv["finetune.lr_preset"] = finetune_lr_preset;
  kv["finetune.lr"] = format_double(finetune_lr);
  kv["finetune.epochs"] = std::to_string(finetune_epochs);
  kv["finetune.batch"] = std::to_string(finetune_batch);
  kv["finetune.p_ner"] = format_double(p_ner);
  kv["workers"] = std::to_string(workers);
  kv["seed"] = std::to_string(seed);

  std::string text;
  for (const auto& [key, value] : kv) {
    text += key;
    text += " = ";
    text += value;
    text += '\n';
  }
  return text;
}

std::string ExperimentConfig::digest() const {
  const std::string text = canonical_text();
  return Sha256::hex_digest(text.data(), text.size());
}

void ExperimentConfig::require_compatible(const ExperimentConfig& checkpoint_cfg) const {
  const auto universe_keys = [](const ExperimentConfig& c) {
    std::ostringstream os;
    os << c.suite_languages << '|' << c.covered_languages << '|' << c.sweep_languages << '|'
       << c.lang_seed << '|' << c.lang_spec.function_words << '|' << c.lang_spec.verbs << '|'
       << c.lang_spec.nouns << '|' << c.lang_spec.gazetteer_per << '|'
       << c.lang_spec.gazetteer_loc << '|' << c.lang_spec.gazetteer_org << '|'
       << c.lang_spec.templates << '|' << c.model_layers << '|' << c.model_dim << '|'
       << c.model_heads << '|' << c.model_ff_dim << '|' << c.model_max_seq_len;
    return os.str();
  };
  if (universe_keys(*this) != universe_keys(checkpoint_cfg)) {
    throw ConfigError(
        "config overrides change the language universe or model shape, which must match the "
        "checkpoint (lang.*, suite.*, sweep.languages, model.* except dropout)");
  }
}

ModelConfig ExperimentConfig::model_config(int vocab_size) const {
  ModelConfig mc;
  mc.layers = model_layers;
  mc.dim = model_dim;
  mc.heads = model_heads;
  mc.ff_dim = model_ff_dim;
  mc.max_seq_len = model_max_seq_len;
  mc.vocab_size = vocab_size;
  mc.dropout = model_dropout;
  mc.validate();
  return mc;
}

FinetuneConfig ExperimentConfig::finetune_config(uint64_t run_seed) const {
  FinetuneConfig fc;
  fc.epochs = finetune_epochs;
  fc.lr = finetune_lr;
  fc.batch = finetune_batch;
  fc.seed = run_seed;
  return fc;
}

std::vector<const SyntheticLanguage*> LanguageUniverse::pretrain_languages(int covered) const {
  std::vector<const SyntheticLanguage*> langs;
  for (int i = 0; i < covered && i < static_cast<int>(suite.size()); ++i) {
    langs.push_back(&suite[static_cast<size_t>(i)]);
  }
  for (const auto& lang : sweep) {
    langs.push_back(&lang);
  }
  return langs;
}

LanguageUniverse build_universe(const ExperimentConfig& cfg) {
  LanguageUniverse u;
  u.suite.reserve(static_cast<size_t>(cfg.suite_languages));
  for (int i = 0; i < cfg.suite_languages; ++i) {
    u.suite.push_back(gen_language(i, cfg.lang_seed, cfg.lang_spec));
  }
  // sweep languages live at id 100+ so their word prefixes never collide
  u.sweep.reserve(static_cast<size_t>(cfg.sweep_languages));
  for (int i = 0; i < cfg.sweep_languages; ++i) {
    u.sweep.push_back(gen_language(100 + i, cfg.lang_seed, cfg.lang_spec));
  }

  std::vector<std::string> all_words;
  for (const auto& lang : u.suite) {
    const auto words = lang.surface_vocabulary();
    all_words.insert(all_words.end(), words.begin(), words.end());
  }
  for (const auto& lang : u.sweep) {
    const auto words = lang.surface_vocabulary();
    all_words.insert(all_words.end(), words.begin(), words.end());
  }
  u.vocab = Vocab::build_from_words(all_words, 1);
  return u;
}

Checkpoint run_pretrain(const ExperimentConfig& cfg, MlmTrainStats* stats_out,
                        std::ostream* log) {
  const LanguageUniverse universe = build_universe(cfg);
  const auto covered = universe.pretrain_languages(cfg.covered_languages);
  std::vector<SyntheticLanguage> corpus_langs;
  corpus_langs.reserve(covered.size());
  for (const auto* lang : covered) {
    corpus_langs.push_back(*lang);
  }
  const PretrainCorpus corpus =
      gen_pretrain_corpus(corpus_langs, cfg.pretrain_sentences, Rng::derive(cfg.seed, "corpus"));
  if (log != nullptr) {
    *log << "pretraining on " << corpus.sentences.size() << " sentences across "
         << corpus.coverage.size() << " languages (vocab " << universe.vocab.size() << ")\n";
  }

  Checkpoint ckpt;
  ckpt.params = init_params<float>(cfg.model_config(universe.vocab.size()),
                                   Rng::derive(cfg.seed, "model-init"));
  ckpt.vocab = universe.vocab;
  ckpt.coverage = corpus.coverage;
  ckpt.mlm_config = cfg.mlm;
  ckpt.seed = cfg.seed;
  ckpt.config_text = cfg.canonical_text();
  ckpt.config_digest = cfg.digest();

  MlmTrainStats stats = pretrain(ckpt.params, corpus.sentences, ckpt.vocab, cfg.mlm, log);
  ckpt.vocab.set_marker_pretrained(Marker::mask, true);
  if (log != nullptr) {
    *log << "mlm loss " << stats.initial_loss << " -> " << stats.final_loss << "\n";
  }
  if (stats_out != nullptr) {
    *stats_out = stats;
  }
  return ckpt;
}

bool rand_row_is_pristine(const Checkpoint& ckpt) {
  // re-derive the seeded initialization and compare the <rand> row bitwise
  ModelParams<float> fresh =
      init_params<float>(ckpt.params.config, Rng::derive(ckpt.seed, "model-init"));
  const size_t d = static_cast<size_t>(ckpt.params.config.dim);
  const size_t off = static_cast<size_t>(Vocab::kRand) * d;
  for (size_t i = 0; i < d; ++i) {
    if (ckpt.params.tok_emb.data[off + i] != fresh.tok_emb.data[off + i]) {
      return false;
    }
  }
  return true;
}

std::vector<RunResult> run_suite(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                                 const std::vector<Strategy>& strategies, int n_languages,
                                 std::ostream* log) {
  if (n_languages < 1 || n_languages > cfg.suite_languages) {
    throw ConfigError("suite: n_languages must be in [1, " +
                      std::to_string(cfg.suite_languages) + "]");
  }
  if (strategies.empty()) {
    throw ConfigError("suite: no strategies selected");
  }
  const LanguageUniverse universe = build_universe(cfg);
  if (!(universe.vocab == ckpt.vocab)) {
    throw ConfigError("suite: regenerated vocabulary does not match the checkpoint vocabulary");
  }
  const std::set<std::string> coverage(ckpt.coverage.begin(), ckpt.coverage.end());

  struct Task {
    const SyntheticLanguage* lang;
    const Strategy* strategy;
    size_t row;
  };
  std::vector<Task> tasks;
  std::vector<RunResult> rows(static_cast<size_t>(n_languages) * strategies.size());
  for (int li = 0; li < n_languages; ++li) {
    for (size_t si = 0; si < strategies.size(); ++si) {
      const size_t row = static_cast<size_t>(li) * strategies.size() + si;
      tasks.push_back(Task{&universe.suite[static_cast<size_t>(li)], &strategies[si], row});
    }
  }

  std::mutex log_mutex;
  parallel_for(tasks.size(), cfg.workers, [&](size_t ti) {
    const Task& task = tasks[ti];
    const SyntheticLanguage& lang = *task.lang;
    const Strategy strategy = *task.strategy;

    const uint64_t split_seed = Rng::derive(cfg.seed, "split", static_cast<uint64_t>(lang.id));
    const DatasetSplit split = gen_split(lang, cfg.n_train, cfg.n_test, split_seed);
    const uint64_t run_seed = Rng::derive(cfg.seed, lang.name + "/" + strategy.name());

    ModelParams<float> params = ckpt.params;  // fresh copy per task
    finetune(params, split.train, ckpt.vocab, strategy, cfg.finetune_config(run_seed));

    std::vector<std::vector<std::string>> gold, pred;
    gold.reserve(split.test.size());
    pred.reserve(split.test.size());
    for (const auto& sentence : split.test) {
      gold.push_back(sentence.labels);
      pred.push_back(predict(params, sentence.words, ckpt.vocab, strategy));
    }

    RunResult result;
    result.language = lang.name;
    result.language_seed = lang.seed;
    result.strategy = strategy.name();
    result.run_seed = run_seed;
    result.covered = coverage.count(lang.name) != 0;
    result.eval = span_f1(gold, pred);
    rows[task.row] = result;

    if (log != nullptr) {
      std::lock_guard<std::mutex> lock(log_mutex);
      *log << lang.name << " " << strategy.name() << " f1=" << result.eval.f1 << "\n";
    }
  });
  return rows;
}

std::vector<SweepResult> run_sweep(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                                   const std::vector<int>& sizes, std::ostream* log) {
  if (sizes.empty()) {
    throw ConfigError("sweep: no sizes given");
  }
  for (const int size : sizes) {
    if (size < 1 || size > cfg.sweep_train) {
      throw ConfigError("sweep: size " + std::to_string(size) +
                        " exceeds available training sentences (" +
                        std::to_string(cfg.sweep_train) + ")");
    }
  }
  const LanguageUniverse universe = build_universe(cfg);
  if (!(universe.vocab == ckpt.vocab)) {
    throw ConfigError("sweep: regenerated vocabulary does not match the checkpoint vocabulary");
  }

  const std::vector<Strategy> strategies = {Strategy::baseline1(), Strategy::maner(Marker::mask)};

  struct Task {
    const SyntheticLanguage* lang;
    int size;
    const Strategy* strategy;
    size_t row;
  };
  std::vector<Task> tasks;
  std::vector<SweepResult> rows(universe.sweep.size() * sizes.size() * strategies.size());
  size_t row = 0;
  for (const auto& lang : universe.sweep) {
    for (const int size : sizes) {
      for (const auto& strategy : strategies) {
        tasks.push_back(Task{&lang, size, &strategy, row++});
      }
    }
  }

  std::mutex log_mutex;
  parallel_for(tasks.size(), cfg.workers, [&](size_t ti) {
    const Task& task = tasks[ti];
    const SyntheticLanguage& lang = *task.lang;
    const Strategy strategy = *task.strategy;

    const uint64_t split_seed = Rng::derive(cfg.seed, "split", static_cast<uint64_t>(lang.id));
    const DatasetSplit full = gen_split(lang, cfg.sweep_train, cfg.n_test, split_seed);
    // nested prefixes: the 100-sentence set is a strict prefix of the rest
    const std::vector<TaggedSentence> train(full.train.begin(),
                                            full.train.begin() + task.size);

    const uint64_t run_seed = Rng::derive(
        cfg.seed, lang.name + "/" + strategy.name() + "/" + std::to_string(task.size));
    ModelParams<float> params = ckpt.params;
    finetune(params, train, ckpt.vocab, strategy, cfg.finetune_config(run_seed));

    std::vector<std::vector<std::string>> gold, pred;
    for (const auto& sentence : full.test) {
      gold.push_back(sentence.labels);
      pred.push_back(predict(params, sentence.words, ckpt.vocab, strategy));
    }

    SweepResult result;
    result.language = lang.name;
    result.language_seed = lang.seed;
    result.train_size = task.size;
    result.strategy = strategy.name();
    result.run_seed = run_seed;
    result.f1 = span_f1(gold, pred).f1;
    rows[task.row] = result;

    if (log != nullptr) {
      std::lock_guard<std::mutex> lock(log_mutex);
      *log << lang.name << " n=" << task.size << " " << strategy.name() << " f1=" << result.f1
           << "\n";
    }
  });
  return rows;
}

double mean_f1(const std::vector<RunResult>& rows, const std::string& strategy,
               std::optional<bool> covered) {
  double total = 0.0;
  size_t count = 0;
  for (const auto& row : rows) {
    if (row.strategy != strategy) {
      continue;
    }
    if (covered.has_value() && row.covered != *covered) {
      continue;
    }
    total += row.eval.f1;
    ++count;
  }
  if (count == 0) {
    throw Error("mean_f1: no rows for strategy '" + strategy + "'");
  }
  return total / static_cast<double>(count);
}

}  // namespace maner
