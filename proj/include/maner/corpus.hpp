#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maner/common.hpp"
#include "maner/labels.hpp"

namespace maner {

// Word sequence with aligned IOB2 labels; the corpus unit.
struct TaggedSentence {
  std::vector<std::string> words;
  std::vector<std::string> labels;

  size_t size() const { return words.size(); }
};

struct Iob2Violation {
  size_t position;
  std::string reason;
};

// Empty sequences are valid. Every I-X must directly follow B-X or I-X of
// the same type.
std::optional<Iob2Violation> validate_iob2(const std::vector<std::string>& labels);

// One entity name: 1-3 words.
using EntityName = std::vector<std::string>;

struct Template {
  struct Item {
    bool is_slot = false;
    int word_index = 0;          // into SyntheticLanguage::content_words
    EntityType slot_type = EntityType::PER;
  };
  std::vector<Item> items;
};

struct LanguageSpec {
  int function_words = 12;
  int verbs = 10;
  int nouns = 20;
  int gazetteer_per = 12;
  int gazetteer_loc = 12;
  int gazetteer_org = 12;
  int templates = 16;
};

// A deterministic synthetic language: closed content vocabulary, per-type
// gazetteers and a template grammar. Every surface word carries the
// language prefix, so distinct languages share zero words.
struct SyntheticLanguage {
  int id = 0;
  std::string name;
  std::string prefix;
  uint64_t seed = 0;
  LanguageSpec spec;

  std::vector<std::string> content_words;  // function words + verbs + nouns
  int num_function_words = 0;
  std::array<std::vector<EntityName>, kNumEntityTypes> gazetteers;
  std::vector<Template> templates;

  const std::vector<EntityName>& gazetteer(EntityType t) const {
    return gazetteers[static_cast<size_t>(t)];
  }
  // Full closed surface vocabulary: content words plus every gazetteer word.
  std::vector<std::string> surface_vocabulary() const;
};

SyntheticLanguage gen_language(int language_id, uint64_t seed, const LanguageSpec& spec);

struct DatasetSplit {
  std::string language;
  uint64_t language_seed = 0;
  std::vector<TaggedSentence> train;
  std::vector<TaggedSentence> test;
  // Entity surface forms appearing in test but never in train, over the
  // distinct test surface forms.
  double test_entity_novelty = 0.0;
};

// Train draws only from the first ~60% of each (shuffled) gazetteer; test
// draws from all of it, so a healthy share of test entities is unseen.
DatasetSplit gen_split(const SyntheticLanguage& lang, int n_train, int n_test, uint64_t seed);

// Unlabeled text for MLM pretraining: 1-3 template instantiations joined
// per line, drawing entities from the full gazetteers.
struct PretrainCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> coverage;  // language names, in generation order
};

PretrainCorpus gen_pretrain_corpus(const std::vector<SyntheticLanguage>& languages,
                                   int sentences_per_language, uint64_t seed);

// JSONL dataset files: one {"words": [...], "labels": [...]} object per line.
void write_jsonl(const std::string& path, const std::vector<TaggedSentence>& sentences);
std::vector<TaggedSentence> read_jsonl(const std::string& path);

}  // namespace maner
