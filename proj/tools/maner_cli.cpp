// maner command line: pretraining, the low-resource suite, the two
// ablations, the sample-count sweep, ad-hoc evaluation and dataset export.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "maner/checkpoint.hpp"
#include "maner/experiment.hpp"
#include "maner/report.hpp"

namespace fs = std::filesystem;
using namespace maner;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the master seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--workers", opts.workers, "parallel fine-tune workers");
}

ExperimentConfig load_config(const CommonOpts& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig::defaults()
                                                  : ExperimentConfig::from_file(opts.config_path);
  if (opts.seed_set) {
    cfg.seed = opts.seed;
    cfg.mlm.seed = Rng::derive(cfg.seed, "mlm-train");
  }
  if (opts.workers > 0) {
    cfg.workers = opts.workers;
  }
  return cfg;
}

// Checkpoint-consuming commands: the language universe comes from the
// checkpoint's embedded config; a --config file may only override runtime
// knobs (fine-tuning, workers, seed).
ExperimentConfig config_for_checkpoint(const Checkpoint& ckpt, const CommonOpts& opts) {
  ExperimentConfig base = ExperimentConfig::from_text(ckpt.config_text, "checkpoint config");
  if (!opts.config_path.empty()) {
    const KeyValueConfig base_kv =
        KeyValueConfig::parse_text(ckpt.config_text, "checkpoint config");
    const KeyValueConfig file_kv = KeyValueConfig::parse_file(opts.config_path);
    std::string merged;
    auto values = base_kv.values();
    for (const auto& [key, value] : file_kv.values()) {
      values[key] = value;
    }
    for (const auto& [key, value] : values) {
      merged += key + " = " + value + "\n";
    }
    ExperimentConfig cfg = ExperimentConfig::from_text(merged, opts.config_path);
    cfg.require_compatible(base);
    base = cfg;
  }
  if (opts.seed_set) {
    base.seed = opts.seed;
  }
  if (opts.workers > 0) {
    base.workers = opts.workers;
  }
  return base;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  }
}

std::vector<Strategy> parse_strategies(const std::vector<std::string>& names, double p_ner,
                                       std::vector<Strategy> fallback) {
  if (names.empty()) {
    return fallback;
  }
  std::vector<Strategy> out;
  for (const auto& name : names) {
    out.push_back(Strategy::parse(name, p_ner));
  }
  return out;
}

int cmd_pretrain(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  ensure_dir(opts.out_dir);
  MlmTrainStats stats;
  Checkpoint ckpt = run_pretrain(cfg, &stats, &std::cout);
  const std::string ckpt_path = opts.out_dir + "/checkpoint.bin";
  save_checkpoint(ckpt_path, ckpt);
  write_curve_csv(opts.out_dir + "/pretrain_curve.csv", stats);
  std::cout << "checkpoint " << ckpt_path << " digest " << checkpoint_digest(ckpt) << "\n";
  return 0;
}

int cmd_suite(const std::string& ckpt_path, const CommonOpts& opts,
              const std::vector<std::string>& strategy_names, int languages) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ExperimentConfig cfg = config_for_checkpoint(ckpt, opts);
  const std::vector<Strategy> strategies = parse_strategies(
      strategy_names, cfg.p_ner,
      {Strategy::baseline1(), Strategy::baseline2(cfg.p_ner), Strategy::maner(Marker::mask)});
  const int n_languages = languages > 0 ? languages : cfg.suite_languages;

  ensure_dir(opts.out_dir);
  const auto rows = run_suite(ckpt, cfg, strategies, n_languages, &std::cout);
  const std::string report_path = opts.out_dir + "/report.csv";
  write_report_csv(report_path, rows, cfg.digest());
  write_table1_csv(opts.out_dir + "/table1.csv", rows);
  write_fig2_svg(opts.out_dir + "/fig2.svg", report_path);
  for (const auto& s : strategies) {
    std::cout << s.name() << " mean f1 " << csv_number(mean_f1(rows, s.name())) << "\n";
  }
  return 0;
}

int cmd_ablate_control(const std::string& ckpt_path, const CommonOpts& opts, int languages) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (!rand_row_is_pristine(ckpt)) {
    throw ConfigError(
        "checkpoint <rand> embedding row differs from its seeded initialization; this "
        "checkpoint cannot support the control-token ablation");
  }
  const ExperimentConfig cfg = config_for_checkpoint(ckpt, opts);
  const std::vector<Strategy> strategies = {Strategy::baseline1(), Strategy::maner(Marker::mask),
                                            Strategy::maner(Marker::rand)};
  const int n_languages = languages > 0 ? languages : cfg.suite_languages;

  ensure_dir(opts.out_dir);
  const auto rows = run_suite(ckpt, cfg, strategies, n_languages, &std::cout);
  const std::string report_path = opts.out_dir + "/report.csv";
  write_report_csv(report_path, rows, cfg.digest());
  write_table2_csv(opts.out_dir + "/table2.csv", rows);
  write_fig2_svg(opts.out_dir + "/fig2.svg", report_path);
  for (const auto& s : strategies) {
    std::cout << s.name() << " mean f1 " << csv_number(mean_f1(rows, s.name())) << "\n";
  }
  return 0;
}

int cmd_ablate_coverage(const std::string& ckpt_path, const CommonOpts& opts, int languages) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ExperimentConfig cfg = config_for_checkpoint(ckpt, opts);
  const std::vector<Strategy> strategies = {Strategy::baseline1(), Strategy::maner(Marker::mask)};
  const int n_languages = languages > 0 ? languages : cfg.suite_languages;

  ensure_dir(opts.out_dir);
  const auto rows = run_suite(ckpt, cfg, strategies, n_languages, &std::cout);
  bool any_covered = false, any_uncovered = false;
  for (const auto& r : rows) {
    (r.covered ? any_covered : any_uncovered) = true;
  }
  if (!any_covered || !any_uncovered) {
    throw ConfigError(
        "coverage ablation needs both covered and uncovered languages in the suite");
  }
  const std::string report_path = opts.out_dir + "/report.csv";
  write_report_csv(report_path, rows, cfg.digest());
  write_table3_csv(opts.out_dir + "/table3.csv", rows);
  write_fig2_svg(opts.out_dir + "/fig2.svg", report_path);
  for (const bool covered : {true, false}) {
    for (const auto& s : strategies) {
      std::cout << (covered ? "covered" : "uncovered") << " " << s.name() << " mean f1 "
                << csv_number(mean_f1(rows, s.name(), covered)) << "\n";
    }
  }
  return 0;
}

int cmd_sweep(const std::string& ckpt_path, const CommonOpts& opts, std::vector<int> sizes) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ExperimentConfig cfg = config_for_checkpoint(ckpt, opts);
  if (sizes.empty()) {
    sizes = {100, 200, 400, 700, 1000};
  }
  ensure_dir(opts.out_dir);
  const auto rows = run_sweep(ckpt, cfg, sizes, &std::cout);
  const std::string csv_path = opts.out_dir + "/fig3.csv";
  write_sweep_csv(csv_path, rows, cfg.digest());
  write_fig3_svg(opts.out_dir + "/fig3.svg", csv_path);
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& train_path, const std::string& strategy_name,
             const CommonOpts& opts) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ExperimentConfig cfg = config_for_checkpoint(ckpt, opts);
  const Strategy strategy = Strategy::parse(strategy_name, cfg.p_ner);

  ModelParams<float> params = ckpt.params;
  if (!train_path.empty()) {
    const auto train = read_jsonl(train_path);
    finetune(params, train, ckpt.vocab, strategy,
             cfg.finetune_config(Rng::derive(cfg.seed, "eval-finetune")));
  }
  const auto test = read_jsonl(data_path);
  std::vector<std::vector<std::string>> gold, pred;
  for (const auto& sentence : test) {
    gold.push_back(sentence.labels);
    pred.push_back(predict(params, sentence.words, ckpt.vocab, strategy));
  }
  const EvalResult result = span_f1(gold, pred);
  std::cout << "strategy,precision,recall,f1,sentences\n"
            << strategy.name() << ',' << csv_number(result.precision) << ','
            << csv_number(result.recall) << ',' << csv_number(result.f1) << ','
            << result.sentences << "\n";
  return 0;
}

int cmd_gen_data(const CommonOpts& opts) {
  const ExperimentConfig cfg = load_config(opts);
  ensure_dir(opts.out_dir);
  const LanguageUniverse universe = build_universe(cfg);

  for (const auto& lang : universe.suite) {
    const DatasetSplit split = gen_split(
        lang, cfg.n_train, cfg.n_test, Rng::derive(cfg.seed, "split", static_cast<uint64_t>(lang.id)));
    write_jsonl(opts.out_dir + "/" + lang.name + "_train.jsonl", split.train);
    write_jsonl(opts.out_dir + "/" + lang.name + "_test.jsonl", split.test);
  }
  for (const auto& lang : universe.sweep) {
    const DatasetSplit split = gen_split(lang, cfg.sweep_train, cfg.n_test,
                                         Rng::derive(cfg.seed, "split", static_cast<uint64_t>(lang.id)));
    write_jsonl(opts.out_dir + "/" + lang.name + "_train.jsonl", split.train);
    write_jsonl(opts.out_dir + "/" + lang.name + "_test.jsonl", split.test);
  }

  const auto covered = universe.pretrain_languages(cfg.covered_languages);
  std::vector<SyntheticLanguage> corpus_langs;
  for (const auto* lang : covered) {
    corpus_langs.push_back(*lang);
  }
  const PretrainCorpus corpus =
      gen_pretrain_corpus(corpus_langs, cfg.pretrain_sentences, Rng::derive(cfg.seed, "corpus"));
  std::ofstream out(opts.out_dir + "/pretrain_corpus.txt", std::ios::binary);
  for (const auto& sentence : corpus.sentences) {
    for (size_t i = 0; i < sentence.size(); ++i) {
      out << (i > 0 ? " " : "") << sentence[i];
    }
    out << "\n";
  }
  std::cout << "wrote " << universe.suite.size() << " suite + " << universe.sweep.size()
            << " sweep language splits and a " << corpus.sentences.size()
            << "-sentence pretraining corpus to " << opts.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maner: mask-prepended NER fine-tuning laboratory"};
  app.require_subcommand(1);

  CommonOpts pretrain_opts;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "MLM-pretrain the toy transformer");
  add_common(pretrain_cmd, pretrain_opts);

  CommonOpts suite_opts;
  std::string suite_ckpt;
  std::vector<std::string> suite_strategies;
  int suite_languages = 0;
  auto* suite_cmd =
      app.add_subcommand("suite", "low-resource fine-tune + eval across the suite languages");
  suite_cmd->add_option("--checkpoint", suite_ckpt, "pretrained checkpoint")->required();
  suite_cmd->add_option("--strategy", suite_strategies,
                        "strategy (repeatable): baseline1|baseline2|maner-mask|maner-rand");
  suite_cmd->add_option("--languages", suite_languages, "number of suite languages");
  add_common(suite_cmd, suite_opts);

  CommonOpts control_opts;
  std::string control_ckpt;
  int control_languages = 0;
  auto* control_cmd =
      app.add_subcommand("ablate-control", "maner with <mask> vs the never-pretrained <rand>");
  control_cmd->add_option("--checkpoint", control_ckpt, "pretrained checkpoint")->required();
  control_cmd->add_option("--languages", control_languages, "number of suite languages");
  add_common(control_cmd, control_opts);

  CommonOpts coverage_opts;
  std::string coverage_ckpt;
  int coverage_languages = 0;
  auto* coverage_cmd = app.add_subcommand(
      "ablate-coverage", "gains on pretraining-covered vs uncovered languages");
  coverage_cmd->add_option("--checkpoint", coverage_ckpt, "pretrained checkpoint")->required();
  coverage_cmd->add_option("--languages", coverage_languages, "number of suite languages");
  add_common(coverage_cmd, coverage_opts);

  CommonOpts sweep_opts;
  std::string sweep_ckpt;
  std::vector<int> sweep_sizes;
  auto* sweep_cmd = app.add_subcommand("sweep", "F1 vs training-set size on the sweep languages");
  sweep_cmd->add_option("--checkpoint", sweep_ckpt, "pretrained checkpoint")->required();
  sweep_cmd->add_option("--sizes", sweep_sizes, "train-set sizes (default 100 200 400 700 1000)");
  add_common(sweep_cmd, sweep_opts);

  CommonOpts eval_opts;
  std::string eval_ckpt, eval_data, eval_train, eval_strategy = "baseline1";
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a JSONL dataset");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint")->required();
  eval_cmd->add_option("--data", eval_data, "test JSONL file")->required();
  eval_cmd->add_option("--train", eval_train, "optional JSONL train file to fine-tune on first");
  eval_cmd->add_option("--strategy", eval_strategy, "strategy name");
  add_common(eval_cmd, eval_opts);

  CommonOpts gen_opts;
  auto* gen_cmd = app.add_subcommand("gen-data", "export the synthetic datasets as JSONL");
  add_common(gen_cmd, gen_opts);

  try {
    app.parse(argc, argv);
    if (pretrain_cmd->parsed()) {
      return cmd_pretrain(pretrain_opts);
    }
    if (suite_cmd->parsed()) {
      return cmd_suite(suite_ckpt, suite_opts, suite_strategies, suite_languages);
    }
    if (control_cmd->parsed()) {
      return cmd_ablate_control(control_ckpt, control_opts, control_languages);
    }
    if (coverage_cmd->parsed()) {
      return cmd_ablate_coverage(coverage_ckpt, coverage_opts, coverage_languages);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_ckpt, sweep_opts, sweep_sizes);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_ckpt, eval_data, eval_train, eval_strategy, eval_opts);
    }
    if (gen_cmd->parsed()) {
      return cmd_gen_data(gen_opts);
    }
    std::cerr << "no subcommand selected\n";
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << "\n";
    return kExitTraining;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  }
}
