#include "maner/metrics.hpp"

#include <algorithm>

namespace maner {

namespace {

struct ParsedLabel {
  bool outside = true;
  bool begin = false;
  EntityType type = EntityType::PER;
};

ParsedLabel parse_label(const std::string& lab) {
  ParsedLabel p;
  if (lab == "O") {
    return p;
  }
  if (lab.size() < 3 || (lab[0] != 'B' && lab[0] != 'I') || lab[1] != '-') {
    throw Error("malformed IOB2 label '" + lab + "'");
  }
  const std::string type = lab.substr(2);
  for (int t = 0; t < kNumEntityTypes; ++t) {
    if (type == entity_type_name(static_cast<EntityType>(t))) {
      p.outside = false;
      p.begin = lab[0] == 'B';
      p.type = static_cast<EntityType>(t);
      return p;
    }
  }
  throw Error("unknown entity type in label '" + lab + "'");
}

}  // namespace

std::vector<Span> extract_spans(const std::vector<std::string>& labels) {
  std::vector<Span> spans;
  bool open = false;
  Span current{};
  for (size_t i = 0; i < labels.size(); ++i) {
    const ParsedLabel p = parse_label(labels[i]);
    if (p.outside) {
      if (open) {
        current.end = i;
        spans.push_back(current);
        open = false;
      }
      continue;
    }
    // B-X always opens; an I-X that cannot continue the open span opens a
    // new span of type X (conservative repair)
    const bool continues = open && !p.begin && p.type == current.type;
    if (continues) {
      continue;
    }
    if (open) {
      current.end = i;
      spans.push_back(current);
    }
    current = Span{p.type, i, i};
    open = true;
  }
  if (open) {
    current.end = labels.size();
    spans.push_back(current);
  }
  return spans;
}

EvalResult span_f1(const std::vector<std::vector<std::string>>& gold,
                   const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw DimensionError("span_f1: " + std::to_string(gold.size()) + " gold vs " +
                         std::to_string(pred.size()) + " predicted sequences");
  }
  EvalResult r;
  r.sentences = gold.size();
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw DimensionError("span_f1: sentence " + std::to_string(s) + " length mismatch: " +
                           std::to_string(gold[s].size()) + " vs " +
                           std::to_string(pred[s].size()));
    }
    std::vector<Span> gs = extract_spans(gold[s]);
    std::vector<Span> ps = extract_spans(pred[s]);
    for (const Span& g : gs) {
      ++r.per_type[static_cast<size_t>(g.type)].gold;
    }
    for (const Span& p : ps) {
      auto& counts = r.per_type[static_cast<size_t>(p.type)];
      ++counts.predicted;
      if (std::find(gs.begin(), gs.end(), p) != gs.end()) {
        ++counts.true_positive;
      }
    }
  }
  const TypeCounts t = r.totals();
  r.precision = t.predicted == 0 ? 0.0
                                 : static_cast<double>(t.true_positive) /
                                       static_cast<double>(t.predicted);
  r.recall = t.gold == 0 ? 0.0
                         : static_cast<double>(t.true_positive) / static_cast<double>(t.gold);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double macro_average(const std::vector<EvalResult>& results) {
  if (results.empty()) {
    throw Error("macro_average: empty result list");
  }
  double acc = 0.0;
  for (const auto& r : results) {
    acc += r.f1;
  }
  return acc / static_cast<double>(results.size());
}

}  // namespace maner
