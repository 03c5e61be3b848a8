#include "maner/vocab.hpp"

#include <algorithm>
#include <map>

#include "maner/corpus.hpp"

namespace maner {

Vocab Vocab::build(const std::vector<TaggedSentence>& corpus, int min_count) {
  if (corpus.empty()) {
    throw Error("build_vocab: corpus is empty");
  }
  std::vector<std::string> words;
  for (const auto& sentence : corpus) {
    words.insert(words.end(), sentence.words.begin(), sentence.words.end());
  }
  return build_from_words(words, min_count);
}

Vocab Vocab::build_from_words(const std::vector<std::string>& words, int min_count) {
  if (words.empty()) {
    throw Error("build_vocab: no words");
  }
  // std::map keeps ties lexicographic without a second sort key pass
  std::map<std::string, int> counts;
  for (const auto& w : words) {
    ++counts[w];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab v;
  v.id_to_token_ = {kPadToken, kUnkToken, kMaskToken, kRandToken};
  for (const auto& [word, count] : ranked) {
    if (count >= min_count) {
      v.id_to_token_.push_back(word);
    }
  }
  v.index_tokens();
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, bool mask_pretrained,
                         bool rand_pretrained) {
  if (tokens.size() < kNumSpecials || tokens[0] != kPadToken || tokens[1] != kUnkToken ||
      tokens[2] != kMaskToken || tokens[3] != kRandToken) {
    throw Error("vocab token list does not start with the reserved specials");
  }
  Vocab v;
  v.id_to_token_ = std::move(tokens);
  v.mask_pretrained_ = mask_pretrained;
  v.rand_pretrained_ = rand_pretrained;
  v.index_tokens();
  return v;
}

void Vocab::index_tokens() {
  token_to_id_.clear();
  token_to_id_.reserve(id_to_token_.size());
  for (size_t i = 0; i < id_to_token_.size(); ++i) {
    const auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
    if (!inserted) {
      throw Error("duplicate token in vocabulary: '" + id_to_token_[i] + "'");
    }
  }
}

int Vocab::encode_word(const std::string& word) const {
  const auto it = token_to_id_.find(word);
  return it == token_to_id_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    ids.push_back(encode_word(w));
  }
  return ids;
}

const std::string& Vocab::decode(int id) const {
  if (id < 0 || id >= size()) {
    throw Error("token id " + std::to_string(id) + " out of range [0, " +
                std::to_string(size()) + ")");
  }
  return id_to_token_[static_cast<size_t>(id)];
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (const int id : ids) {
    words.push_back(decode(id));
  }
  return words;
}

}  // namespace maner
