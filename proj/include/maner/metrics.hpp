#pragma once

#include <string>
#include <vector>

#include "maner/common.hpp"
#include "maner/labels.hpp"

namespace maner {

// Exact entity span: [start, end) word indices.
struct Span {
  EntityType type;
  size_t start;
  size_t end;

  bool operator==(const Span& o) const {
    return type == o.type && start == o.start && end == o.end;
  }
  bool operator<(const Span& o) const {
    if (start != o.start) {
      return start < o.start;
    }
    if (end != o.end) {
      return end < o.end;
    }
    return static_cast<int>(type) < static_cast<int>(o.type);
  }
};

struct TypeCounts {
  size_t true_positive = 0;
  size_t predicted = 0;
  size_t gold = 0;
};

// Span-level micro precision/recall/F1 plus per-type counts.
struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::array<TypeCounts, kNumEntityTypes> per_type;
  size_t sentences = 0;

  TypeCounts totals() const {
    TypeCounts t;
    for (const auto& c : per_type) {
      t.true_positive += c.true_positive;
      t.predicted += c.predicted;
      t.gold += c.gold;
    }
    return t;
  }
};

// Maximal B-X (I-X)* runs become spans. An I-X with no valid predecessor
// starts a new span of type X; the same conservative repair is applied to
// gold and predicted sequences alike.
std::vector<Span> extract_spans(const std::vector<std::string>& labels);

// Exact-match span scoring (type and both boundaries), micro-averaged over
// the corpus. Zero denominators follow the 0-convention.
EvalResult span_f1(const std::vector<std::vector<std::string>>& gold,
                   const std::vector<std::vector<std::string>>& pred);

// Unweighted mean of per-language F1 values.
double macro_average(const std::vector<EvalResult>& results);

}  // namespace maner
