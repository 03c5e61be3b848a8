// Acceptance suite: one pass/fail line per criterion. Builds the default
// pretrained checkpoint, runs the full study once, and checks every
// directional and exactness requirement at its stated tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "maner/checkpoint.hpp"
#include "maner/experiment.hpp"
#include "maner/metrics.hpp"
#include "maner/report.hpp"
#include "maner/strategies.hpp"

using namespace maner;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << what;
  if (!detail.empty()) {
    std::cout << " (" << detail << ")";
  }
  std::cout << std::endl;
  if (!pass) {
    ++g_failures;
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------- 1
// Analytic gradients of the full maner training loss vs central finite
// differences on a reduced 64-bit model, every parameter block.
void criterion1() {
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::string> words;
  for (int i = 0; i < 6; ++i) {
    words.push_back("w" + std::to_string(i));
  }
  const Vocab vocab = Vocab::build_from_words(words, 1);

  ModelConfig mc;
  mc.layers = 1;
  mc.dim = 8;
  mc.heads = 2;
  mc.ff_dim = 12;
  mc.max_seq_len = 8;
  mc.vocab_size = vocab.size();
  mc.dropout = 0.0;

  auto params = init_params<double>(mc, 20240809);

  TaggedSentence sentence;
  sentence.words = {"w2", "w5"};
  sentence.labels = {"B-PER", "O"};
  const ReformattedExample ex = reformat_maner(sentence, vocab, Marker::mask, mc.max_seq_len);

  auto loss_value = [&](ModelParams<double>& p) {
    GradGraph<double> g;
    auto b = bind(g, p);
    return strategy_loss(g, b, ex).scalar_value();
  };

  GradGraph<double> g;
  auto bound = bind(g, params);
  auto loss = strategy_loss(g, bound, ex);
  g.backward(loss);
  const auto grads = collect_grads(g, bound);
  auto named = params.named_params();

  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_block = "-";
  for (size_t block = 0; block < named.size(); ++block) {
    auto& data = named[block].array->data;
    for (size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double fp = loss_value(params);
      data[i] = saved - h;
      const double fm = loss_value(params);
      data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = grads[block][i];
      const double err =
          std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
      if (err > worst) {
        worst = err;
        worst_block = named[block].name;
      }
    }
  }
  const double elapsed = seconds_since(start);
  report(1, worst < 1e-4 && elapsed < 60.0, "maner loss gradients match finite differences",
         "worst rel err " + fmt(worst) + " in " + worst_block + ", " + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------- 2
// Altering labels at ignored positions changes nothing, bit for bit.
void criterion2() {
  std::vector<std::string> words;
  for (int i = 0; i < 6; ++i) {
    words.push_back("w" + std::to_string(i));
  }
  const Vocab vocab = Vocab::build_from_words(words, 1);
  ModelConfig mc;
  mc.layers = 2;
  mc.dim = 8;
  mc.heads = 2;
  mc.ff_dim = 12;
  mc.max_seq_len = 16;
  mc.vocab_size = vocab.size();
  mc.dropout = 0.0;
  auto params = init_params<double>(mc, 7);

  TaggedSentence sentence;
  sentence.words = {"w0", "w3", "w5"};
  sentence.labels = {"B-LOC", "O", "B-ORG"};
  ReformattedExample ex = reformat_maner(sentence, vocab, Marker::mask, mc.max_seq_len);

  auto run = [&](const ReformattedExample& example) {
    GradGraph<double> g;
    auto b = bind(g, params);
    auto loss = strategy_loss(g, b, example);
    g.backward(loss);
    std::vector<std::vector<double>> grads;
    for (const auto span : collect_grads(g, b)) {
      grads.emplace_back(span.begin(), span.end());
    }
    return std::pair{loss.scalar_value(), grads};
  };

  const auto [loss_a, grads_a] = run(ex);
  // perturb the sentinel at every ignored position
  ReformattedExample altered = ex;
  int next = -2;
  for (auto& lab : altered.label_ids) {
    if (lab == kIgnoreLabel) {
      lab = next--;
    }
  }
  const auto [loss_b, grads_b] = run(altered);

  const bool pass = loss_a == loss_b && grads_a == grads_b;
  report(2, pass, "ignored-position labels are invisible to loss and gradients",
         "loss " + fmt(loss_a) + ", exact equality " + (pass ? "holds" : "violated"));
}

// ---------------------------------------------------------------- 3
// span_f1 equals a brute-force set-intersection oracle on 1000 random
// pairs; the canonical worked sentence extracts its four spans.
struct RefSpan {
  std::string type;
  size_t start, end;
  bool operator==(const RefSpan& o) const {
    return type == o.type && start == o.start && end == o.end;
  }
};

std::vector<RefSpan> ref_extract(const std::vector<std::string>& labels) {
  std::vector<RefSpan> spans;
  size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == "O") {
      ++i;
      continue;
    }
    const std::string type = labels[i].substr(2);
    const size_t start = i;
    ++i;
    while (i < labels.size() && labels[i] == "I-" + type) {
      ++i;
    }
    spans.push_back(RefSpan{type, start, i});
  }
  return spans;
}

void criterion3() {
  const std::vector<std::string> unicef = {"B-ORG", "O",     "O",     "O",     "O",
                                           "O",     "O",     "B-PER", "I-PER", "O",
                                           "O",     "B-LOC", "I-LOC", "B-LOC", "I-LOC"};
  const auto spans = extract_spans(unicef);
  bool pass = spans.size() == 4 && spans[0] == Span{EntityType::ORG, 0, 1} &&
              spans[1] == Span{EntityType::PER, 7, 9} &&
              spans[2] == Span{EntityType::LOC, 11, 13} &&
              spans[3] == Span{EntityType::LOC, 13, 15};

  const std::vector<std::string> pool = {"O",     "O",     "B-PER", "I-PER", "B-LOC",
                                         "I-LOC", "B-ORG", "I-ORG"};
  Rng rng(424242);
  size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t length = 1 + rng.index(30);
    std::vector<std::string> gold, pred;
    for (size_t i = 0; i < length; ++i) {
      gold.push_back(pool[rng.index(pool.size())]);
      pred.push_back(pool[rng.index(pool.size())]);
    }
    const EvalResult r = span_f1({gold}, {pred});

    const auto gs = ref_extract(gold);
    const auto ps = ref_extract(pred);
    size_t tp = 0;
    for (const auto& p : ps) {
      for (const auto& q : gs) {
        if (p == q) {
          ++tp;
          break;
        }
      }
    }
    const double rp = ps.empty() ? 0.0 : double(tp) / double(ps.size());
    const double rr = gs.empty() ? 0.0 : double(tp) / double(gs.size());
    const double rf1 = rp + rr == 0.0 ? 0.0 : 2.0 * rp * rr / (rp + rr);
    const TypeCounts t = r.totals();
    if (t.true_positive != tp || t.predicted != ps.size() || t.gold != gs.size() ||
        r.f1 != rf1) {
      ++mismatches;
    }
  }
  pass = pass && mismatches == 0;
  report(3, pass, "span_f1 equals the brute-force oracle on 1000 random pairs",
         "mismatches " + std::to_string(mismatches) + ", worked example spans " +
             std::to_string(spans.size()));
}

// ---------------------------------------------------------------- 4
// Reformatting contracts across 1000 random sentences.
void criterion4() {
  std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
  const Vocab vocab = Vocab::build_from_words(words, 1);
  const std::vector<std::string> label_pool = {"O",     "B-PER", "I-PER", "B-LOC",
                                               "I-LOC", "B-ORG", "I-ORG"};
  Rng rng(99);
  size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 1 + rng.index(14);
    TaggedSentence s;
    for (size_t i = 0; i < n; ++i) {
      s.words.push_back(words[rng.index(words.size())]);
      s.labels.push_back(label_pool[rng.index(label_pool.size())]);
    }
    const std::vector<int> labels = label_ids_of(s);
    const ReformattedExample m = reformat_maner(s, vocab, Marker::mask, 64);
    if (m.token_ids.size() != 2 * n || m.label_ids.size() != 2 * n) {
      ++violations;
      continue;
    }
    for (size_t i = 0; i < n; ++i) {
      if (m.token_ids[2 * i] != Vocab::kMask || m.label_ids[2 * i] != labels[i] ||
          m.label_ids[2 * i + 1] != kIgnoreLabel || m.word_to_position[i] != 2 * i) {
        ++violations;
      }
    }
    Rng mask_rng(static_cast<uint64_t>(trial));
    const ReformattedExample b2 = reformat_baseline2(s, vocab, 0.0, mask_rng);
    const ReformattedExample b1 = reformat_baseline1(s, vocab);
    if (b2.token_ids != b1.token_ids || b2.label_ids != b1.label_ids) {
      ++violations;
    }
  }
  report(4, violations == 0, "reformatting contracts hold on 1000 random sentences",
         "violations " + std::to_string(violations));
}

// ---------------------------------------------------------------- 10
void criterion10(const Checkpoint& ckpt, const MlmTrainStats& stats) {
  const bool loss_ok = stats.final_loss < 0.7 * stats.initial_loss;
  const bool rand_ok = rand_row_is_pristine(ckpt);
  report(10, loss_ok && rand_ok, "mlm pretraining sanity",
         "loss " + fmt(stats.initial_loss) + " -> " + fmt(stats.final_loss) + " (ratio " +
             fmt(stats.final_loss / stats.initial_loss) + "), rand row " +
             (rand_ok ? "pristine" : "MODIFIED"));
}

// ---------------------------------------------------------------- 5-7
void criteria567(const std::vector<RunResult>& rows, double suite_seconds) {
  const double b1 = mean_f1(rows, "baseline1");
  const double b2 = mean_f1(rows, "baseline2");
  const double mm = mean_f1(rows, "maner-mask");
  const double mr = mean_f1(rows, "maner-rand");

  const bool c5 = mm >= b1 + 0.03 && std::abs(b2 - b1) <= 0.03 && suite_seconds < 1800.0;
  report(5, c5, "table-1 analog: maner gains >= 3 points, baseline2 within 3 of baseline1",
         "b1 " + fmt(b1) + ", b2 " + fmt(b2) + ", maner " + fmt(mm) + ", suite " +
             fmt(suite_seconds) + "s");

  const double mm_cov = mean_f1(rows, "maner-mask", true);
  const double mr_cov = mean_f1(rows, "maner-rand", true);
  const bool c6 = mm_cov >= mr_cov && mr >= b1 - 0.01;
  report(6, c6, "table-2 analog: mask beats rand on covered; rand not below baseline1 - 1pt",
         "covered mask " + fmt(mm_cov) + " vs rand " + fmt(mr_cov) + "; rand(all) " + fmt(mr) +
             " vs b1 " + fmt(b1));

  const double b1_cov = mean_f1(rows, "baseline1", true);
  const double b1_unc = mean_f1(rows, "baseline1", false);
  const double mm_unc = mean_f1(rows, "maner-mask", false);
  const double gain_cov = mm_cov - b1_cov;
  const double gain_unc = mm_unc - b1_unc;
  report(7, gain_cov > gain_unc, "table-3 analog: covered-language gain exceeds uncovered",
         "covered gain " + fmt(gain_cov) + " vs uncovered " + fmt(gain_unc));
}

// ---------------------------------------------------------------- 8
void criterion8(const std::vector<SweepResult>& rows) {
  auto mean_at = [&](const std::string& strategy, int size) {
    double total = 0.0;
    size_t count = 0;
    for (const auto& r : rows) {
      if (r.strategy == strategy && r.train_size == size) {
        total += r.f1;
        ++count;
      }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
  };
  const double gain_100 = mean_at("maner-mask", 100) - mean_at("baseline1", 100);
  const double gain_1000 = mean_at("maner-mask", 1000) - mean_at("baseline1", 1000);
  const bool pass = gain_100 > gain_1000 && gain_1000 <= 0.02;
  report(8, pass, "figure-3 analog: maner's edge shrinks with more data",
         "gain@100 " + fmt(gain_100) + ", gain@1000 " + fmt(gain_1000));
}

// ---------------------------------------------------------------- 9
void criterion9(const Checkpoint& ckpt, const ExperimentConfig& cfg, const fs::path& dir) {
  const std::vector<Strategy> strategies = {Strategy::baseline1(),
                                            Strategy::baseline2(cfg.p_ner),
                                            Strategy::maner(Marker::mask)};
  const auto rows_a = run_suite(ckpt, cfg, strategies, cfg.suite_languages);
  const auto rows_b = run_suite(ckpt, cfg, strategies, cfg.suite_languages);
  const std::string path_a = (dir / "report_run_a.csv").string();
  const std::string path_b = (dir / "report_run_b.csv").string();
  write_report_csv(path_a, rows_a, cfg.digest());
  write_report_csv(path_b, rows_b, cfg.digest());
  const bool bytes_equal = read_file(path_a) == read_file(path_b);

  Checkpoint copy = ckpt;  // save/load round-trip digest
  const std::string ckpt_path = (dir / "ckpt_roundtrip.bin").string();
  save_checkpoint(ckpt_path, copy);
  Checkpoint loaded = load_checkpoint(ckpt_path);
  const bool digest_equal = checkpoint_digest(loaded) == checkpoint_digest(copy);

  report(9, bytes_equal && digest_equal, "determinism: identical seeds give identical bytes",
         std::string("report.csv ") + (bytes_equal ? "byte-identical" : "DIFFERS") +
             ", checkpoint digest " + (digest_equal ? "stable" : "UNSTABLE"));
}

}  // namespace

int main() {
  std::cout << "acceptance: default desk-scale study (this takes several minutes)\n";
  const auto t0 = std::chrono::steady_clock::now();

  criterion1();
  criterion2();
  criterion3();
  criterion4();

  const ExperimentConfig cfg = ExperimentConfig::defaults();
  fs::path dir = fs::temp_directory_path() / "maner_acceptance";
  fs::create_directories(dir);

  std::cout << "-- pretraining the default checkpoint\n";
  MlmTrainStats stats;
  const Checkpoint ckpt = run_pretrain(cfg, &stats);
  criterion10(ckpt, stats);

  std::cout << "-- running the 24-language suite with all four strategies\n";
  const auto suite_start = std::chrono::steady_clock::now();
  const std::vector<Strategy> all_strategies = {
      Strategy::baseline1(), Strategy::baseline2(cfg.p_ner), Strategy::maner(Marker::mask),
      Strategy::maner(Marker::rand)};
  const auto rows = run_suite(ckpt, cfg, all_strategies, cfg.suite_languages);
  const double suite_seconds = seconds_since(suite_start);
  criteria567(rows, suite_seconds);

  std::cout << "-- running the sample-count sweep\n";
  const auto sweep_rows = run_sweep(ckpt, cfg, {100, 200, 400, 700, 1000});
  criterion8(sweep_rows);

  std::cout << "-- re-running the default suite twice for determinism\n";
  criterion9(ckpt, cfg, dir);

  std::cout << (g_failures == 0 ? "acceptance: ALL CRITERIA PASS"
                                : "acceptance: " + std::to_string(g_failures) + " FAILED")
            << " (total " << fmt(seconds_since(t0)) << "s)\n";
  return g_failures == 0 ? 0 : 1;
}
