#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "maner/common.hpp"
#include "maner/metrics.hpp"

using namespace maner;

namespace {

// Independent brute-force reference. Written as a direct per-position state
// walk over label strings; shares nothing with the library implementation.
struct RefSpan {
  std::string type;
  size_t start;
  size_t end;  // exclusive
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
    // any entity label starts a span here (B- or a repaired I-)
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

struct RefScore {
  size_t tp = 0, pred = 0, gold = 0;
};

RefScore ref_score(const std::vector<std::vector<std::string>>& gold,
                   const std::vector<std::vector<std::string>>& pred) {
  RefScore s;
  for (size_t k = 0; k < gold.size(); ++k) {
    const auto gs = ref_extract(gold[k]);
    const auto ps = ref_extract(pred[k]);
    s.gold += gs.size();
    s.pred += ps.size();
    for (const auto& p : ps) {
      for (const auto& g : gs) {
        if (p == g) {
          ++s.tp;
          break;
        }
      }
    }
  }
  return s;
}

std::vector<std::string> random_labels(Rng& rng, size_t length) {
  static const std::vector<std::string> pool = {"O",     "O",     "B-PER", "I-PER", "B-LOC",
                                                "I-LOC", "B-ORG", "I-ORG"};
  std::vector<std::string> labels;
  for (size_t i = 0; i < length; ++i) {
    labels.push_back(pool[rng.index(pool.size())]);
  }
  return labels;
}

const std::vector<std::string> kUnicefLabels = {
    "B-ORG", "O",     "O", "O", "O",     "O",     "O",     "B-PER",
    "I-PER", "O",     "O", "B-LOC", "I-LOC", "B-LOC", "I-LOC"};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("the canonical tagged sentence extracts exactly four spans") {
  const auto spans = extract_spans(kUnicefLabels);
  REQUIRE(spans.size() == 4);
  CHECK(spans[0] == Span{EntityType::ORG, 0, 1});
  CHECK(spans[1] == Span{EntityType::PER, 7, 9});
  CHECK(spans[2] == Span{EntityType::LOC, 11, 13});
  CHECK(spans[3] == Span{EntityType::LOC, 13, 15});
}

TEST_CASE("all-O extracts nothing") {
  CHECK(extract_spans({"O", "O", "O"}).empty());
  CHECK(extract_spans({}).empty());
}

TEST_CASE("adjacent B tags open separate spans") {
  const auto spans = extract_spans({"B-PER", "B-PER"});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == Span{EntityType::PER, 0, 1});
  CHECK(spans[1] == Span{EntityType::PER, 1, 2});
}

TEST_CASE("illegal I starts a new span of its type") {
  const auto spans = extract_spans({"I-PER"});
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == Span{EntityType::PER, 0, 1});

  const auto spans2 = extract_spans({"B-LOC", "I-ORG"});
  REQUIRE(spans2.size() == 2);
  CHECK(spans2[0] == Span{EntityType::LOC, 0, 1});
  CHECK(spans2[1] == Span{EntityType::ORG, 1, 2});

  const auto spans3 = extract_spans({"O", "I-LOC", "I-LOC", "O"});
  REQUIRE(spans3.size() == 1);
  CHECK(spans3[0] == Span{EntityType::LOC, 1, 3});
}

TEST_CASE("spans are sorted and non-overlapping") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto spans = extract_spans(random_labels(rng, 1 + rng.index(30)));
    for (size_t i = 0; i < spans.size(); ++i) {
      CHECK(spans[i].start < spans[i].end);
      if (i > 0) {
        CHECK(spans[i - 1].end <= spans[i].start);
      }
    }
  }
}

TEST_CASE("exact match scores one") {
  const std::vector<std::vector<std::string>> gold = {kUnicefLabels, {"O", "B-PER"}};
  const EvalResult r = span_f1(gold, gold);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.sentences == 2);
}

TEST_CASE("all-O prediction scores zero by convention") {
  const std::vector<std::vector<std::string>> gold = {{"B-PER", "O", "B-LOC"}};
  const std::vector<std::vector<std::string>> pred = {{"O", "O", "O"}};
  const EvalResult r = span_f1(gold, pred);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
}

TEST_CASE("boundary mismatch is not a true positive") {
  const std::vector<std::vector<std::string>> gold = {{"B-PER", "I-PER"}};
  const std::vector<std::vector<std::string>> pred = {{"B-PER", "O"}};
  const EvalResult r = span_f1(gold, pred);
  CHECK(r.totals().true_positive == 0);
  CHECK(r.f1 == 0.0);
  const RefScore ref = ref_score(gold, pred);
  CHECK(ref.tp == 0);
}

TEST_CASE("shape mismatch is rejected") {
  CHECK_THROWS_AS(span_f1({{"O"}}, {}), DimensionError);
  CHECK_THROWS_AS(span_f1({{"O", "O"}}, {{"O"}}), DimensionError);
}

TEST_CASE("fuzz: span_f1 equals the brute-force oracle exactly") {
  Rng rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t sentences = 1 + rng.index(4);
    std::vector<std::vector<std::string>> gold, pred;
    for (size_t s = 0; s < sentences; ++s) {
      const size_t length = 1 + rng.index(30);
      gold.push_back(random_labels(rng, length));
      pred.push_back(random_labels(rng, length));
    }
    const EvalResult r = span_f1(gold, pred);
    const RefScore ref = ref_score(gold, pred);
    const TypeCounts t = r.totals();
    CHECK(t.true_positive == ref.tp);
    CHECK(t.predicted == ref.pred);
    CHECK(t.gold == ref.gold);
    const double ref_p = ref.pred == 0 ? 0.0 : double(ref.tp) / double(ref.pred);
    const double ref_r = ref.gold == 0 ? 0.0 : double(ref.tp) / double(ref.gold);
    const double ref_f1 = ref_p + ref_r == 0.0 ? 0.0 : 2.0 * ref_p * ref_r / (ref_p + ref_r);
    CHECK(r.precision == ref_p);
    CHECK(r.recall == ref_r);
    CHECK(r.f1 == ref_f1);
    CHECK(r.f1 >= 0.0);
    CHECK(r.f1 <= 1.0);

    // true positives are symmetric under swapping gold and predicted
    const EvalResult swapped = span_f1(pred, gold);
    CHECK(swapped.totals().true_positive == t.true_positive);
  }
}

TEST_CASE("macro average basics") {
  EvalResult one;
  one.f1 = 1.0;
  EvalResult zero;
  zero.f1 = 0.0;
  CHECK(macro_average({one, zero}) == 0.5);
  EvalResult single;
  single.f1 = 0.375;
  CHECK(macro_average({single}) == 0.375);
  CHECK_THROWS_AS(macro_average({}), Error);
}

TEST_CASE("macro average of 100 values matches an independent summation") {
  Rng rng(2024);
  std::vector<EvalResult> results(100);
  for (auto& r : results) {
    r.f1 = rng.uniform();
  }
  // independent route: sort ascending, accumulate in long double
  std::vector<double> values;
  for (const auto& r : results) {
    values.push_back(r.f1);
  }
  std::sort(values.begin(), values.end());
  long double total = 0.0L;
  for (const double v : values) {
    total += v;
  }
  const double expect = static_cast<double>(total / 100.0L);
  CHECK(macro_average(results) == doctest::Approx(expect).epsilon(1e-12));
}

}  // TEST_SUITE
