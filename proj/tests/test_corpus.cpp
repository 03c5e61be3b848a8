#include <doctest.h>

#include <cstdio>
#include <set>

#include "maner/corpus.hpp"

using namespace maner;

namespace {

LanguageSpec small_spec() {
  LanguageSpec s;
  s.function_words = 6;
  s.verbs = 4;
  s.nouns = 8;
  s.gazetteer_per = 5;
  s.gazetteer_loc = 5;
  s.gazetteer_org = 5;
  s.templates = 8;
  return s;
}

bool languages_equal(const SyntheticLanguage& a, const SyntheticLanguage& b) {
  if (a.content_words != b.content_words) {
    return false;
  }
  for (int t = 0; t < kNumEntityTypes; ++t) {
    if (a.gazetteers[static_cast<size_t>(t)] != b.gazetteers[static_cast<size_t>(t)]) {
      return false;
    }
  }
  if (a.templates.size() != b.templates.size()) {
    return false;
  }
  for (size_t i = 0; i < a.templates.size(); ++i) {
    const auto& ta = a.templates[i].items;
    const auto& tb = b.templates[i].items;
    if (ta.size() != tb.size()) {
      return false;
    }
    for (size_t j = 0; j < ta.size(); ++j) {
      if (ta[j].is_slot != tb[j].is_slot || ta[j].word_index != tb[j].word_index ||
          ta[j].slot_type != tb[j].slot_type) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("same seed produces an identical language") {
  const SyntheticLanguage a = gen_language(3, 99, small_spec());
  const SyntheticLanguage b = gen_language(3, 99, small_spec());
  CHECK(languages_equal(a, b));
}

TEST_CASE("distinct languages share zero surface words") {
  const SyntheticLanguage a = gen_language(1, 7, small_spec());
  const SyntheticLanguage b = gen_language(2, 7, small_spec());
  const auto va = a.surface_vocabulary();
  const auto vb = b.surface_vocabulary();
  const std::set<std::string> sa(va.begin(), va.end());
  for (const auto& w : vb) {
    CHECK(sa.count(w) == 0);
  }
}

TEST_CASE("gazetteer sizes are honored exactly") {
  LanguageSpec spec = small_spec();
  spec.gazetteer_per = 7;
  spec.gazetteer_loc = 3;
  spec.gazetteer_org = 9;
  const SyntheticLanguage lang = gen_language(0, 11, spec);
  CHECK(lang.gazetteer(EntityType::PER).size() == 7);
  CHECK(lang.gazetteer(EntityType::LOC).size() == 3);
  CHECK(lang.gazetteer(EntityType::ORG).size() == 9);
  for (int t = 0; t < kNumEntityTypes; ++t) {
    for (const auto& entity : lang.gazetteers[static_cast<size_t>(t)]) {
      CHECK(entity.size() >= 1);
      CHECK(entity.size() <= 3);
    }
  }
}

TEST_CASE("gazetteers are disjoint from the content vocabulary") {
  const SyntheticLanguage lang = gen_language(4, 23, small_spec());
  const std::set<std::string> content(lang.content_words.begin(), lang.content_words.end());
  for (const auto& gaz : lang.gazetteers) {
    for (const auto& entity : gaz) {
      for (const auto& word : entity) {
        CHECK(content.count(word) == 0);
      }
    }
  }
}

TEST_CASE("templates have at least 3 items") {
  const SyntheticLanguage lang = gen_language(5, 31, small_spec());
  CHECK(lang.templates.size() == static_cast<size_t>(small_spec().templates));
  for (const auto& tpl : lang.templates) {
    CHECK(tpl.items.size() >= 3);
  }
}

TEST_CASE("split cardinality and validity") {
  const SyntheticLanguage lang = gen_language(0, 5, small_spec());
  const DatasetSplit split = gen_split(lang, 100, 100, 77);
  CHECK(split.train.size() == 100);
  CHECK(split.test.size() == 100);
  for (const auto& group : {split.train, split.test}) {
    for (const auto& s : group) {
      CHECK(s.words.size() == s.labels.size());
      CHECK_FALSE(validate_iob2(s.labels).has_value());
    }
  }
}

TEST_CASE("splits are deterministic under seed") {
  const SyntheticLanguage lang = gen_language(0, 5, small_spec());
  const DatasetSplit a = gen_split(lang, 20, 10, 42);
  const DatasetSplit b = gen_split(lang, 20, 10, 42);
  for (size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].words == b.train[i].words);
    CHECK(a.train[i].labels == b.train[i].labels);
  }
  for (size_t i = 0; i < a.test.size(); ++i) {
    CHECK(a.test[i].words == b.test[i].words);
  }
}

TEST_CASE("multi-word entities expand to B then I labels") {
  // find any generated multi-word entity mention and check its labels
  const SyntheticLanguage lang = gen_language(2, 13, small_spec());
  const DatasetSplit split = gen_split(lang, 200, 1, 3);
  bool saw_multiword = false;
  for (const auto& s : split.train) {
    for (size_t i = 0; i + 1 < s.labels.size(); ++i) {
      if (s.labels[i].starts_with("B-") && s.labels[i + 1].starts_with("I-")) {
        saw_multiword = true;
        CHECK(s.labels[i].substr(2) == s.labels[i + 1].substr(2));
      }
    }
  }
  CHECK(saw_multiword);
}

TEST_CASE("at least 30 percent of test entity surface forms are unseen in train") {
  for (const uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    const SyntheticLanguage lang = gen_language(static_cast<int>(seed), seed, small_spec());
    const DatasetSplit split = gen_split(lang, 100, 100, seed * 31 + 1);
    CHECK(split.test_entity_novelty >= 0.30);
  }
}

TEST_CASE("iob2 validator accepts the canonical tagged sentence") {
  // UNICEF is a nonprofit organization, founded by Ludwik Rajchman
  // headquartered at New York, United States
  const std::vector<std::string> labels = {"B-ORG", "O", "O", "O",     "O",     "O",     "O",
                                           "B-PER", "I-PER", "O",     "O",     "B-LOC", "I-LOC",
                                           "B-LOC", "I-LOC"};
  CHECK_FALSE(validate_iob2(labels).has_value());
}

TEST_CASE("iob2 validator pinpoints violations") {
  const auto v1 = validate_iob2({"I-PER"});
  REQUIRE(v1.has_value());
  CHECK(v1->position == 0);
  CHECK(v1->reason == "I without B");

  const auto v2 = validate_iob2({"B-LOC", "I-ORG"});
  REQUIRE(v2.has_value());
  CHECK(v2->position == 1);
  CHECK(v2->reason == "type switch inside span");

  CHECK_FALSE(validate_iob2({}).has_value());
  CHECK_FALSE(validate_iob2({"O", "B-PER", "I-PER", "B-PER"}).has_value());
  CHECK(validate_iob2({"B-XYZ"}).has_value());
}

TEST_CASE("pretraining corpus covers exactly the requested languages") {
  const SyntheticLanguage a = gen_language(0, 5, small_spec());
  const SyntheticLanguage b = gen_language(1, 5, small_spec());
  const SyntheticLanguage c = gen_language(2, 5, small_spec());
  const PretrainCorpus corpus = gen_pretrain_corpus({a, b}, 500, 9);
  CHECK(corpus.sentences.size() == 1000);
  CHECK(corpus.coverage == std::vector<std::string>{a.name, b.name});

  // language c is absent: no c-prefixed word can appear
  for (const auto& sentence : corpus.sentences) {
    for (const auto& word : sentence) {
      CHECK_FALSE(word.starts_with(c.prefix));
      CHECK((word.starts_with(a.prefix) || word.starts_with(b.prefix)));
    }
  }

  const PretrainCorpus again = gen_pretrain_corpus({a, b}, 500, 9);
  CHECK(corpus.sentences == again.sentences);
}

TEST_CASE("jsonl round-trip") {
  const SyntheticLanguage lang = gen_language(0, 5, small_spec());
  const DatasetSplit split = gen_split(lang, 25, 5, 4);
  const std::string path = "test_corpus_roundtrip.jsonl";
  write_jsonl(path, split.train);
  const auto loaded = read_jsonl(path);
  REQUIRE(loaded.size() == split.train.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].words == split.train[i].words);
    CHECK(loaded[i].labels == split.train[i].labels);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_jsonl("does_not_exist.jsonl"), IoError);
}

TEST_CASE("language spec sizes below 1 are rejected") {
  LanguageSpec bad = small_spec();
  bad.templates = 0;
  CHECK_THROWS_AS(gen_language(0, 1, bad), ConfigError);
}

}  // TEST_SUITE
