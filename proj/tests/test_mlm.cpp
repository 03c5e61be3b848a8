#include <doctest.h>

#include <set>

#include "maner/mlm.hpp"

using namespace maner;

namespace {

Vocab word_vocab(int n_words) {
  std::vector<std::string> words;
  for (int i = 0; i < n_words; ++i) {
    words.push_back("w" + std::to_string(i));
  }
  return Vocab::build_from_words(words, 1);
}

MlmConfig config_with(double p_mlm, double mask_f, double rand_f, double keep_f) {
  MlmConfig cfg;
  cfg.p_mlm = p_mlm;
  cfg.mask_fraction = mask_f;
  cfg.random_fraction = rand_f;
  cfg.keep_fraction = keep_f;
  return cfg;
}

}  // namespace

TEST_SUITE("mlm") {

TEST_CASE("config fractions must sum to one") {
  CHECK_THROWS_AS(config_with(0.15, 0.8, 0.1, 0.2).validate(), ConfigError);
  CHECK_NOTHROW(config_with(0.15, 0.8, 0.1, 0.1).validate());
}

TEST_CASE("p_mlm zero changes nothing and ignores every target") {
  const Vocab vocab = word_vocab(6);
  const std::vector<int> ids = vocab.encode({"w0", "w3", "w5", "w1"});
  Rng rng(1);
  const CorruptedSentence c = corrupt(ids, config_with(0.0, 0.8, 0.1, 0.1), vocab, rng);
  CHECK(c.token_ids == ids);
  for (const int t : c.targets) {
    CHECK(t == kIgnoreLabel);
  }
}

TEST_CASE("p_mlm one with pure masking replaces everything") {
  const Vocab vocab = word_vocab(6);
  const std::vector<int> ids = vocab.encode({"w0", "w3", "w5"});
  Rng rng(2);
  const CorruptedSentence c = corrupt(ids, config_with(1.0, 1.0, 0.0, 0.0), vocab, rng);
  for (const int id : c.token_ids) {
    CHECK(id == Vocab::kMask);
  }
  CHECK(c.targets == ids);
}

TEST_CASE("selection matches the recorded seeded trace") {
  // fixture: seed 4242, p_mlm = 0.15, split 0.8/0.1/0.1, 15 positions:
  // positions 1 and 11 selected, both masked
  const Vocab vocab = word_vocab(6);
  std::vector<int> ids(15, vocab.encode_word("w2"));
  Rng rng(4242);
  const CorruptedSentence c = corrupt(ids, config_with(0.15, 0.8, 0.1, 0.1), vocab, rng);
  const std::set<size_t> expected_selected = {1, 11};
  for (size_t i = 0; i < 15; ++i) {
    if (expected_selected.count(i) != 0) {
      CHECK(c.token_ids[i] == Vocab::kMask);
      CHECK(c.targets[i] == ids[i]);
    } else {
      CHECK(c.token_ids[i] == ids[i]);
      CHECK(c.targets[i] == kIgnoreLabel);
    }
  }
}

TEST_CASE("padding is never selected") {
  const Vocab vocab = word_vocab(6);
  std::vector<int> ids = {Vocab::kPad, vocab.encode_word("w1"), Vocab::kPad, Vocab::kPad};
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const CorruptedSentence c = corrupt(ids, config_with(1.0, 0.8, 0.1, 0.1), vocab, rng);
    CHECK(c.token_ids[0] == Vocab::kPad);
    CHECK(c.token_ids[2] == Vocab::kPad);
    CHECK(c.token_ids[3] == Vocab::kPad);
    CHECK(c.targets[0] == kIgnoreLabel);
    CHECK(c.targets[2] == kIgnoreLabel);
  }
}

TEST_CASE("random replacements only insert real corpus words") {
  const Vocab vocab = word_vocab(8);
  const std::vector<int> ids(20, vocab.encode_word("w0"));
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const CorruptedSentence c = corrupt(ids, config_with(1.0, 0.0, 1.0, 0.0), vocab, rng);
    for (const int id : c.token_ids) {
      CHECK(id >= vocab.first_word_id());  // never <pad>/<unk>/<mask>/<rand>
      CHECK(id < vocab.size());
    }
  }
}

TEST_CASE("tiny pretraining run decreases loss and freezes the rand row") {
  // two miniature languages' worth of text, miniature model
  const Vocab vocab = word_vocab(12);
  std::vector<std::vector<std::string>> corpus;
  Rng gen(5);
  for (int i = 0; i < 60; ++i) {
    std::vector<std::string> sentence;
    const size_t len = 3 + gen.index(5);
    // correlated bigrams give the model something learnable
    size_t word = gen.index(6);
    for (size_t j = 0; j < len; ++j) {
      sentence.push_back("w" + std::to_string(word));
      word = (word * 2 + 1) % 12;
    }
    corpus.push_back(sentence);
  }

  ModelConfig mc;
  mc.layers = 1;
  mc.dim = 16;
  mc.heads = 2;
  mc.ff_dim = 24;
  mc.max_seq_len = 16;
  mc.vocab_size = vocab.size();
  mc.dropout = 0.1;

  MlmConfig cfg = config_with(0.3, 0.8, 0.1, 0.1);
  cfg.epochs = 8;
  cfg.lr = 3e-3;
  cfg.batch = 8;
  cfg.seed = 11;

  auto params = init_params<float>(mc, 77);
  const size_t d = static_cast<size_t>(mc.dim);
  const std::vector<float> rand_row_before(
      params.tok_emb.data.begin() + Vocab::kRand * d,
      params.tok_emb.data.begin() + (Vocab::kRand + 1) * d);
  const std::vector<float> mask_row_before(
      params.tok_emb.data.begin() + Vocab::kMask * d,
      params.tok_emb.data.begin() + (Vocab::kMask + 1) * d);

  const MlmTrainStats stats = pretrain(params, corpus, vocab, cfg);
  CHECK(stats.final_loss < stats.initial_loss);
  CHECK(stats.epoch_loss.size() == 8);

  const std::vector<float> rand_row_after(
      params.tok_emb.data.begin() + Vocab::kRand * d,
      params.tok_emb.data.begin() + (Vocab::kRand + 1) * d);
  const std::vector<float> mask_row_after(
      params.tok_emb.data.begin() + Vocab::kMask * d,
      params.tok_emb.data.begin() + (Vocab::kMask + 1) * d);
  CHECK(rand_row_after == rand_row_before);   // bit-identical
  CHECK(mask_row_after != mask_row_before);   // the mask itself trains
}

TEST_CASE("pretraining is deterministic under its seed") {
  const Vocab vocab = word_vocab(6);
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 10; ++i) {
    corpus.push_back({"w0", "w1", "w2", "w3"});
  }
  ModelConfig mc;
  mc.layers = 1;
  mc.dim = 8;
  mc.heads = 2;
  mc.ff_dim = 12;
  mc.max_seq_len = 8;
  mc.vocab_size = vocab.size();
  mc.dropout = 0.1;
  MlmConfig cfg = config_with(0.3, 0.8, 0.1, 0.1);
  cfg.epochs = 2;
  cfg.lr = 1e-3;
  cfg.batch = 4;
  cfg.seed = 9;

  auto a = init_params<float>(mc, 1);
  auto b = init_params<float>(mc, 1);
  pretrain(a, corpus, vocab, cfg);
  pretrain(b, corpus, vocab, cfg);
  auto na = a.named_params();
  auto nb = b.named_params();
  for (size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].array->data == nb[i].array->data);
  }
}

TEST_CASE("a corpus containing the rand token is rejected") {
  const Vocab vocab = word_vocab(4);
  std::vector<std::vector<std::string>> corpus = {{"w0", Vocab::kRandToken, "w1"}};
  ModelConfig mc;
  mc.layers = 1;
  mc.dim = 8;
  mc.heads = 2;
  mc.ff_dim = 12;
  mc.max_seq_len = 8;
  mc.vocab_size = vocab.size();
  MlmConfig cfg = config_with(0.15, 0.8, 0.1, 0.1);
  cfg.epochs = 1;
  auto params = init_params<float>(mc, 2);
  CHECK_THROWS_AS(pretrain(params, corpus, vocab, cfg), TrainingError);
}

}  // TEST_SUITE
