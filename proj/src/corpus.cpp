#include "maner/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace maner {

namespace {

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";

std::string make_body(Rng& rng, int min_syllables, int max_syllables) {
  const int n = min_syllables + static_cast<int>(rng.below(
                                    static_cast<uint64_t>(max_syllables - min_syllables + 1)));
  std::string s;
  for (int i = 0; i < n; ++i) {
    s += kConsonants[rng.index(sizeof(kConsonants) - 1)];
    s += kVowels[rng.index(sizeof(kVowels) - 1)];
  }
  return s;
}

std::string fresh_word(Rng& rng, const std::string& prefix, int min_syl, int max_syl,
                       bool capitalize, std::set<std::string>& used) {
  for (;;) {
    std::string body = make_body(rng, min_syl, max_syl);
    if (capitalize) {
      body[0] = static_cast<char>(body[0] - 'a' + 'A');
    }
    std::string word = prefix + body;
    if (used.insert(word).second) {
      return word;
    }
  }
}

std::string join_words(const EntityName& name) {
  std::string s;
  for (size_t i = 0; i < name.size(); ++i) {
    if (i > 0) {
      s += ' ';
    }
    s += name[i];
  }
  return s;
}

// Entity names are 1-3 words: mostly short, occasionally long.
int entity_length(Rng& rng) {
  const uint64_t r = rng.below(100);
  if (r < 45) {
    return 1;
  }
  return r < 80 ? 2 : 3;
}

// How many gazetteer entries the train split may draw from; the rest are
// reserved so the test set always contains unseen surface forms.
size_t train_pool_size(size_t gazetteer_size) {
  const size_t pool = (gazetteer_size * 3 + 4) / 5;  // ~60%, rounded up
  return pool == 0 ? 1 : pool;
}

// How entity slots sample the gazetteer. Test sentences draw uniformly from
// everything; train sentences only from the head pool; pretraining text
// mostly from the head pool, so the reserved names sit in the frequency
// tail the way unseen-at-finetune entities do in real corpora.
enum class EntityDraw {
  train_pool,
  full,
  pretrain,
};

constexpr double kPretrainReservedRate = 0.05;

struct SentenceSink {
  std::vector<std::string> words;
  std::vector<std::string> labels;
};

void emit_sentence(const SyntheticLanguage& lang, const Template& tpl, Rng& rng, EntityDraw draw,
                   SentenceSink& out, std::set<std::string>* entity_forms) {
  for (const auto& item : tpl.items) {
    if (!item.is_slot) {
      out.words.push_back(lang.content_words[static_cast<size_t>(item.word_index)]);
      out.labels.emplace_back("O");
      continue;
    }
    const auto& gaz = lang.gazetteer(item.slot_type);
    const size_t pool = train_pool_size(gaz.size());
    size_t pick = 0;
    switch (draw) {
      case EntityDraw::train_pool:
        pick = rng.index(pool);
        break;
      case EntityDraw::full:
        pick = rng.index(gaz.size());
        break;
      case EntityDraw::pretrain:
        if (pool < gaz.size() && rng.uniform() < kPretrainReservedRate) {
          pick = pool + rng.index(gaz.size() - pool);
        } else {
          pick = rng.index(pool);
        }
        break;
    }
    const EntityName& entity = gaz[pick];
    if (entity_forms != nullptr) {
      entity_forms->insert(join_words(entity));
    }
    for (size_t w = 0; w < entity.size(); ++w) {
      out.words.push_back(entity[w]);
      out.labels.emplace_back(w == 0 ? "B-" + std::string(entity_type_name(item.slot_type))
                                     : "I-" + std::string(entity_type_name(item.slot_type)));
    }
  }
}

TaggedSentence gen_sentence(const SyntheticLanguage& lang, Rng& rng, EntityDraw draw,
                            std::set<std::string>* entity_forms) {
  const Template& tpl = lang.templates[rng.index(lang.templates.size())];
  SentenceSink sink;
  emit_sentence(lang, tpl, rng, draw, sink, entity_forms);
  return TaggedSentence{std::move(sink.words), std::move(sink.labels)};
}

}  // namespace

std::optional<Iob2Violation> validate_iob2(const std::vector<std::string>& labels) {
  std::string prev = "O";
  for (size_t i = 0; i < labels.size(); ++i) {
    const std::string& lab = labels[i];
    if (lab == "O") {
      prev = lab;
      continue;
    }
    if (lab.size() < 3 || (lab[0] != 'B' && lab[0] != 'I') || lab[1] != '-') {
      return Iob2Violation{i, "unknown label '" + lab + "'"};
    }
    bool known = false;
    for (int t = 0; t < kNumEntityTypes; ++t) {
      if (lab.substr(2) == entity_type_name(static_cast<EntityType>(t))) {
        known = true;
      }
    }
    if (!known) {
      return Iob2Violation{i, "unknown entity type in '" + lab + "'"};
    }
    if (lab[0] == 'I') {
      if (prev == "O") {
        return Iob2Violation{i, "I without B"};
      }
      if (prev.substr(2) != lab.substr(2)) {
        return Iob2Violation{i, "type switch inside span"};
      }
    }
    prev = lab;
  }
  return std::nullopt;
}

std::vector<std::string> SyntheticLanguage::surface_vocabulary() const {
  std::set<std::string> all(content_words.begin(), content_words.end());
  for (const auto& gaz : gazetteers) {
    for (const auto& entity : gaz) {
      all.insert(entity.begin(), entity.end());
    }
  }
  return {all.begin(), all.end()};
}

SyntheticLanguage gen_language(int language_id, uint64_t seed, const LanguageSpec& spec) {
  if (spec.function_words < 1 || spec.verbs < 1 || spec.nouns < 1 || spec.gazetteer_per < 1 ||
      spec.gazetteer_loc < 1 || spec.gazetteer_org < 1 || spec.templates < 1) {
    throw ConfigError("gen_language: all language spec sizes must be >= 1");
  }
  SyntheticLanguage lang;
  lang.id = language_id;
  lang.name = "lang" + std::to_string(language_id);
  lang.prefix = "l" + std::to_string(language_id) + "_";
  lang.seed = seed;
  lang.spec = spec;

  Rng words_rng(Rng::derive(seed, "words", static_cast<uint64_t>(language_id)));
  std::set<std::string> used;
  for (int i = 0; i < spec.function_words; ++i) {
    lang.content_words.push_back(fresh_word(words_rng, lang.prefix, 1, 2, false, used));
  }
  lang.num_function_words = spec.function_words;
  for (int i = 0; i < spec.verbs + spec.nouns; ++i) {
    lang.content_words.push_back(fresh_word(words_rng, lang.prefix, 2, 3, false, used));
  }

  Rng names_rng(Rng::derive(seed, "names", static_cast<uint64_t>(language_id)));
  const std::array<int, kNumEntityTypes> sizes = {spec.gazetteer_per, spec.gazetteer_loc,
                                                  spec.gazetteer_org};
  std::set<std::string> used_forms;
  for (int t = 0; t < kNumEntityTypes; ++t) {
    auto& gaz = lang.gazetteers[static_cast<size_t>(t)];
    while (static_cast<int>(gaz.size()) < sizes[static_cast<size_t>(t)]) {
      EntityName name;
      const int len = entity_length(names_rng);
      for (int w = 0; w < len; ++w) {
        name.push_back(fresh_word(names_rng, lang.prefix, 2, 3, true, used));
      }
      if (used_forms.insert(join_words(name)).second) {
        gaz.push_back(std::move(name));
      }
    }
  }

  Rng tpl_rng(Rng::derive(seed, "templates", static_cast<uint64_t>(language_id)));
  while (static_cast<int>(lang.templates.size()) < spec.templates) {
    Template tpl;
    const size_t len = 4 + tpl_rng.index(6);  // 4-9 items
    const size_t max_slots = std::min<size_t>(3, len / 2);
    const size_t n_slots = tpl_rng.index(max_slots + 1);  // 0-3 typed entity slots
    std::vector<size_t> positions(len);
    for (size_t i = 0; i < len; ++i) {
      positions[i] = i;
    }
    tpl_rng.shuffle(positions);
    std::set<size_t> slot_at(positions.begin(), positions.begin() + static_cast<long>(n_slots));
    tpl.items.reserve(len);
    for (size_t i = 0; i < len; ++i) {
      Template::Item item;
      if (slot_at.count(i) != 0) {
        item.is_slot = true;
        item.slot_type = static_cast<EntityType>(tpl_rng.index(kNumEntityTypes));
      } else {
        // function words dominate; verbs/nouns fill the rest
        const uint64_t r = tpl_rng.below(100);
        if (r < 50) {
          item.word_index = static_cast<int>(tpl_rng.index(
              static_cast<size_t>(lang.num_function_words)));
        } else {
          item.word_index =
              lang.num_function_words +
              static_cast<int>(tpl_rng.index(lang.content_words.size() -
                                             static_cast<size_t>(lang.num_function_words)));
        }
      }
      tpl.items.push_back(item);
    }
    lang.templates.push_back(std::move(tpl));
  }
  return lang;
}

DatasetSplit gen_split(const SyntheticLanguage& lang, int n_train, int n_test, uint64_t seed) {
  if (n_train < 1 || n_test < 1) {
    throw ConfigError("gen_split: n_train and n_test must be >= 1");
  }
  DatasetSplit split;
  split.language = lang.name;
  split.language_seed = lang.seed;

  Rng train_rng(Rng::derive(seed, "split-train", static_cast<uint64_t>(lang.id)));
  std::set<std::string> train_forms;
  split.train.reserve(static_cast<size_t>(n_train));
  for (int i = 0; i < n_train; ++i) {
    split.train.push_back(gen_sentence(lang, train_rng, EntityDraw::train_pool, &train_forms));
  }

  Rng test_rng(Rng::derive(seed, "split-test", static_cast<uint64_t>(lang.id)));
  std::set<std::string> test_forms;
  split.test.reserve(static_cast<size_t>(n_test));
  for (int i = 0; i < n_test; ++i) {
    split.test.push_back(gen_sentence(lang, test_rng, EntityDraw::full, &test_forms));
  }

  size_t novel = 0;
  for (const auto& form : test_forms) {
    if (train_forms.count(form) == 0) {
      ++novel;
    }
  }
  split.test_entity_novelty =
      test_forms.empty() ? 0.0 : static_cast<double>(novel) / static_cast<double>(test_forms.size());
  return split;
}

PretrainCorpus gen_pretrain_corpus(const std::vector<SyntheticLanguage>& languages,
                                   int sentences_per_language, uint64_t seed) {
  if (languages.empty()) {
    throw ConfigError("gen_pretrain_corpus: language subset is empty");
  }
  PretrainCorpus corpus;
  for (const auto& lang : languages) {
    Rng rng(Rng::derive(seed, "pretrain", static_cast<uint64_t>(lang.id)));
    for (int i = 0; i < sentences_per_language; ++i) {
      // join 1-3 sentences so later positions also receive MLM training
      const size_t parts = 1 + rng.index(3);
      std::vector<std::string> line;
      for (size_t p = 0; p < parts; ++p) {
        TaggedSentence s = gen_sentence(lang, rng, EntityDraw::pretrain, nullptr);
        line.insert(line.end(), s.words.begin(), s.words.end());
      }
      corpus.sentences.push_back(std::move(line));
    }
    corpus.coverage.push_back(lang.name);
  }
  return corpus;
}

void write_jsonl(const std::string& path, const std::vector<TaggedSentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  for (const auto& s : sentences) {
    nlohmann::ordered_json rec;
    rec["words"] = s.words;
    rec["labels"] = s.labels;
    out << rec.dump() << '\n';
  }
  if (!out) {
    throw IoError("failed writing '" + path + "'");
  }
}

std::vector<TaggedSentence> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  std::vector<TaggedSentence> sentences;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": bad JSON record: " + e.what());
    }
    if (!rec.contains("words") || !rec.contains("labels")) {
      throw IoError(path + ":" + std::to_string(lineno) + ": record needs 'words' and 'labels'");
    }
    TaggedSentence s;
    s.words = rec["words"].get<std::vector<std::string>>();
    s.labels = rec["labels"].get<std::vector<std::string>>();
    if (s.words.size() != s.labels.size()) {
      throw IoError(path + ":" + std::to_string(lineno) + ": words/labels length mismatch");
    }
    sentences.push_back(std::move(s));
  }
  return sentences;
}

}  // namespace maner
