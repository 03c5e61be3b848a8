#include "maner/strategies.hpp"

namespace maner {

std::string Strategy::name() const {
  switch (type) {
    case StrategyType::baseline1:
      return "baseline1";
    case StrategyType::baseline2:
      return "baseline2";
    case StrategyType::maner:
      return marker == Marker::mask ? "maner-mask" : "maner-rand";
  }
  throw Error("unknown strategy");
}

Strategy Strategy::parse(const std::string& name, double p_ner) {
  if (name == "baseline1") {
    return baseline1();
  }
  if (name == "baseline2") {
    return baseline2(p_ner);
  }
  if (name == "maner-mask") {
    return maner(Marker::mask);
  }
  if (name == "maner-rand") {
    return maner(Marker::rand);
  }
  throw ConfigError("unknown strategy '" + name +
                    "' (expected baseline1|baseline2|maner-mask|maner-rand)");
}

std::vector<int> label_ids_of(const TaggedSentence& sentence) {
  if (sentence.words.size() != sentence.labels.size()) {
    throw DimensionError("sentence has " + std::to_string(sentence.words.size()) +
                         " words but " + std::to_string(sentence.labels.size()) + " labels");
  }
  std::vector<int> ids;
  ids.reserve(sentence.labels.size());
  for (const auto& lab : sentence.labels) {
    ids.push_back(LabelSet::id(lab));
  }
  return ids;
}

ReformattedExample reformat_baseline1(const TaggedSentence& sentence, const Vocab& vocab) {
  ReformattedExample ex;
  ex.token_ids = vocab.encode(sentence.words);
  ex.label_ids = label_ids_of(sentence);
  ex.word_to_position.resize(sentence.words.size());
  std::iota(ex.word_to_position.begin(), ex.word_to_position.end(), size_t{0});
  return ex;
}

ReformattedExample reformat_baseline2(const TaggedSentence& sentence, const Vocab& vocab,
                                      double p_ner, Rng& rng) {
  if (p_ner < 0.0 || p_ner > 1.0) {
    throw ConfigError("reformat_baseline2: p_ner must be in [0, 1]");
  }
  ReformattedExample ex = reformat_baseline1(sentence, vocab);
  for (auto& id : ex.token_ids) {
    // one draw per word, replace when it falls below p_ner
    if (rng.uniform() < p_ner) {
      id = Vocab::kMask;
    }
  }
  return ex;
}

ReformattedExample reformat_maner(const TaggedSentence& sentence, const Vocab& vocab,
                                  Marker marker, int max_seq_len) {
  const size_t n = sentence.words.size();
  if (2 * n > static_cast<size_t>(max_seq_len)) {
    throw DimensionError("reformat_maner: doubled length " + std::to_string(2 * n) +
                         " exceeds max_seq_len " + std::to_string(max_seq_len));
  }
  const std::vector<int> word_ids = vocab.encode(sentence.words);
  const std::vector<int> labels = label_ids_of(sentence);
  const int marker_id = vocab.marker_id(marker);

  ReformattedExample ex;
  ex.token_ids.reserve(2 * n);
  ex.label_ids.reserve(2 * n);
  ex.word_to_position.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    ex.word_to_position.push_back(ex.token_ids.size());
    ex.token_ids.push_back(marker_id);
    ex.label_ids.push_back(labels[i]);
    ex.token_ids.push_back(word_ids[i]);
    ex.label_ids.push_back(kIgnoreLabel);
  }
  return ex;
}

}  // namespace maner
