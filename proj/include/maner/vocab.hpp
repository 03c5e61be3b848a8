#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "maner/common.hpp"

namespace maner {

struct TaggedSentence;

enum class Marker {
  mask,
  rand,
};

// Word-level vocabulary. Ids are dense in [0, size); the four specials come
// first, corpus words follow ordered by frequency (desc) then lexicographic.
// Immutable after build; freely shareable across threads.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kRand = 3;
  static constexpr int kNumSpecials = 4;

  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kMaskToken = "<mask>";
  static constexpr const char* kRandToken = "<rand>";

  Vocab() = default;

  // Words with corpus frequency >= min_count survive; everything else
  // encodes to <unk>.
  static Vocab build(const std::vector<TaggedSentence>& corpus, int min_count = 1);
  static Vocab build_from_words(const std::vector<std::string>& words, int min_count = 1);

  int size() const { return static_cast<int>(id_to_token_.size()); }

  int encode_word(const std::string& word) const;
  std::vector<int> encode(const std::vector<std::string>& words) const;
  const std::string& decode(int id) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  int marker_id(Marker m) const { return m == Marker::mask ? kMask : kRand; }
  // True once the marker's embedding has received pretraining gradient.
  // <mask> is trained by MLM pretraining; <rand> must stay false for the
  // control experiment to mean anything.
  bool marker_pretrained(Marker m) const { return m == Marker::mask ? mask_pretrained_ : rand_pretrained_; }
  void set_marker_pretrained(Marker m, bool v) {
    (m == Marker::mask ? mask_pretrained_ : rand_pretrained_) = v;
  }

  bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }
  // First id that maps to a corpus word.
  int first_word_id() const { return kNumSpecials; }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // Rebuild from an id-ordered token list (checkpoint loading).
  static Vocab from_tokens(std::vector<std::string> tokens, bool mask_pretrained,
                           bool rand_pretrained);

  bool operator==(const Vocab& o) const { return id_to_token_ == o.id_to_token_; }

 private:
  void index_tokens();

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  bool mask_pretrained_ = false;
  bool rand_pretrained_ = false;
};

}  // namespace maner
