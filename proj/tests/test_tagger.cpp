#include <gtest/gtest.h>

#include <filesystem>

#include "lexshare/error.hpp"
#include "lexshare/synthetic.hpp"
#include "lexshare/tagger.hpp"

using namespace lexshare;

namespace {

struct Toy {
  SyntheticLanguage lang;
  Corpus corpus;
  std::shared_ptr<const EmbeddingTable> words;
};

Toy toy(std::size_t sentences, std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.language = "aa";
  spec.n_tags = 4;
  spec.words_per_tag = 6;
  spec.max_length = 6;
  spec.seed = seed;
  auto lang = SyntheticLanguage::generate(spec);
  auto corpus = lang.sample(sentences, seed + 1);
  auto words = std::make_shared<const EmbeddingTable>(lang.embeddings(1.0, 1));
  return {std::move(lang), std::move(corpus), std::move(words)};
}

TaggerConfig small_config(const Corpus& c, bool with_sem) {
  TaggerConfig cfg;
  cfg.word_dim = 16;
  cfg.char_channels = 6;
  cfg.char_blocks = 1;
  cfg.hidden_dim = 12;
  const Corpus* corpora[] = {&c};
  cfg.tasks.push_back({"pos", collect_tagset(corpora, "pos")});
  if (with_sem) cfg.tasks.push_back({"sem", collect_tagset(corpora, "sem")});
  cfg.languages = {"aa"};
  cfg.adam.learning_rate = 0.01;
  cfg.seed = 5;
  return cfg;
}

CharVocab vocab_of(const Corpus& c) {
  const Corpus* corpora[] = {&c};
  return CharVocab::from_corpora(corpora);
}

}  // namespace

TEST(TaggerConfig, ValidationErrors) {
  TaggerConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.tasks = {{"pos", {"A", "B"}}};
  EXPECT_NO_THROW(cfg.validate());
  auto dup = cfg;
  dup.tasks.push_back({"pos", {"C"}});
  EXPECT_THROW(dup.validate(), ConfigError);
  auto empty = cfg;
  empty.tasks[0].tagset.clear();
  EXPECT_THROW(empty.validate(), ConfigError);
  auto no_input = cfg;
  no_input.use_word = no_input.use_char = false;
  EXPECT_THROW(no_input.validate(), ConfigError);
  auto repeated = cfg;
  repeated.tasks[0].tagset = {"A", "A"};
  EXPECT_THROW(repeated.validate(), ConfigError);
}

TEST(TaggerConfig, JsonRoundTripAndHash) {
  TaggerConfig cfg;
  cfg.tasks = {{"pos", {"A", "B"}}, {"sem", {"x"}}};
  cfg.languages = {"en", "fr"};
  cfg.use_language_embedding = true;
  cfg.hidden_dim = 7;
  cfg.adam.learning_rate = 0.005;
  const auto j = to_json(cfg);
  const auto back = tagger_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(config_hash(j), config_hash(to_json(back)));
  EXPECT_EQ(config_hash(j).size(), 16u);
  auto changed = cfg;
  changed.hidden_dim = 8;
  EXPECT_NE(config_hash(to_json(changed)), config_hash(j));
  EXPECT_EQ(tagger_config_from_json(nlohmann::json::object()).hidden_dim, TaggerConfig{}.hidden_dim);
}

TEST(CollectTagset, SortedDistinct) {
  Corpus c;
  c.sentences.push_back({"s", {{"a", {{"pos", "V"}}}, {"b", {{"pos", "N"}}}, {"c", {{"pos", "V"}}}}});
  const Corpus* corpora[] = {&c};
  EXPECT_EQ(collect_tagset(corpora, "pos"), (std::vector<std::string>{"N", "V"}));
}

TEST(Tagger, SameSeedSharesInitializationAcrossTaskSets) {
  const auto t = toy(5);
  const auto single = MultitaskTagger::build(small_config(t.corpus, false), t.words, vocab_of(t.corpus));
  const auto multi = MultitaskTagger::build(small_config(t.corpus, true), t.words, vocab_of(t.corpus));
  for (const auto& path : single.shared_paths())
    EXPECT_EQ(single.parameters().get(path).values, multi.parameters().get(path).values) << path;
  for (const auto& path : single.head_paths("pos"))
    EXPECT_EQ(single.parameters().get(path).values, multi.parameters().get(path).values) << path;
  EXPECT_EQ(multi.head_paths("sem").size(), 2u);
  EXPECT_TRUE(multi.head_paths("sem").front().starts_with("head/sem/"));
}

TEST(Tagger, PredictShapesAndErrors) {
  const auto t = toy(3);
  const auto model = MultitaskTagger::build(small_config(t.corpus, true), t.words, vocab_of(t.corpus));
  const auto& s = t.corpus.sentences.front();
  const auto tags = model.predict(s, "sem", "aa");
  EXPECT_EQ(tags.size(), s.size());
  EXPECT_THROW(model.predict(s, "chunk", "aa"), LookupError);
  EXPECT_THROW(model.predict(Sentence{"e", {}}, "pos", "aa"), ArityError);
  Sentence bad = s;
  bad.tokens[0].tags["pos"] = "NOT-A-TAG";
  EXPECT_THROW(model.gold_indices(bad, "pos"), ConfigError);
}

TEST(Tagger, WordDimMustMatchTable) {
  const auto t = toy(3);
  auto cfg = small_config(t.corpus, false);
  cfg.word_dim = 5;
  EXPECT_THROW(MultitaskTagger::build(cfg, t.words, vocab_of(t.corpus)), ConfigError);
  cfg.use_word = false;
  EXPECT_NO_THROW(MultitaskTagger::build(cfg, nullptr, vocab_of(t.corpus)));
}

TEST(Train, OverfitsTinyCorpusDeterministically) {
  const auto t = toy(5);
  auto cfg = small_config(t.corpus, true);
  cfg.epochs = 500;
  cfg.patience = 500;
  auto run = [&] {
    auto model = MultitaskTagger::build(cfg, t.words, vocab_of(t.corpus));
    const TaskData aux[] = {{&t.corpus, "sem"}};
    TrainOptions options;
    options.monitor_all_tasks = true;
    auto history = train(model, {&t.corpus, "pos"}, aux, options);
    return std::pair{std::move(model), history};
  };
  auto [a, ha] = run();
  auto [b, hb] = run();
  EXPECT_EQ(ha.best_accuracy, 100.0);
  EXPECT_EQ(evaluate(a, t.corpus, "pos").accuracy, 100.0);
  EXPECT_EQ(evaluate(a, t.corpus, "sem").accuracy, 100.0);
  EXPECT_EQ(ha.epochs.size(), hb.epochs.size());
  EXPECT_TRUE(a.parameters() == b.parameters());
}

TEST(Train, MainOnlyUpdatesLeaveOtherHeadUntouched) {
  const auto t = toy(6);
  auto cfg = small_config(t.corpus, true);
  cfg.epochs = 3;
  auto model = MultitaskTagger::build(cfg, t.words, vocab_of(t.corpus));
  const auto before = model.parameters();
  train(model, {&t.corpus, "pos"}, {});
  for (const auto& path : model.head_paths("sem"))
    EXPECT_EQ(model.parameters().get(path).values, before.get(path).values);
  bool moved = false;
  for (const auto& path : model.head_paths("pos"))
    moved = moved || model.parameters().get(path).values != before.get(path).values;
  EXPECT_TRUE(moved);
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const auto t = toy(40, 9);
  const auto dev = t.lang.sample(10, 99, "dev");
  auto cfg = small_config(t.corpus, false);
  cfg.epochs = 12;
  cfg.patience = 2;
  auto model = MultitaskTagger::build(cfg, t.words, vocab_of(t.corpus));
  TrainOptions options;
  options.dev = &dev;
  const auto history = train(model, {&t.corpus, "pos"}, {}, options);
  ASSERT_FALSE(history.epochs.empty());
  double best = 0;
  for (const auto& e : history.epochs) best = std::max(best, e.monitor_accuracy);
  EXPECT_EQ(history.best_accuracy, best);
  EXPECT_EQ(history.epochs[history.best_epoch - 1].monitor_accuracy, best);
  EXPECT_DOUBLE_EQ(evaluate(model, dev, "pos").accuracy, best);
  if (history.stopped_early && best < 100.0)
    EXPECT_EQ(history.epochs.size() - history.best_epoch, cfg.patience);
}

TEST(Train, RejectsUncoveredLanguageAndUnknownTask) {
  auto t = toy(4);
  auto model = MultitaskTagger::build(small_config(t.corpus, false), t.words, vocab_of(t.corpus));
  EXPECT_THROW(train(model, {&t.corpus, "sem"}, {}), ConfigError);
  Corpus other = t.corpus;
  other.language = "zz";
  EXPECT_THROW(train(model, {&other, "pos"}, {}), ConfigError);
}

TEST(Evaluate, EmptyCorpusUndefined) {
  const auto t = toy(2);
  const auto model = MultitaskTagger::build(small_config(t.corpus, false), t.words, vocab_of(t.corpus));
  Corpus empty;
  empty.language = "aa";
  EXPECT_THROW(evaluate(model, empty, "pos"), UndefinedError);
}

TEST(Checkpoint, SaveLoadPredictsIdentically) {
  const auto t = toy(8);
  auto cfg = small_config(t.corpus, true);
  cfg.epochs = 2;
  auto model = MultitaskTagger::build(cfg, t.words, vocab_of(t.corpus));
  train(model, {&t.corpus, "pos"}, {});
  const auto dir = std::filesystem::temp_directory_path() / "lexshare-test-ckpt";
  std::filesystem::create_directories(dir);
  save_checkpoint(model, dir / "m.bin");
  const auto back = load_checkpoint(dir / "m.bin", t.words);
  EXPECT_TRUE(back.parameters() == model.parameters());
  for (const auto& s : t.corpus.sentences) EXPECT_EQ(back.predict(s, "pos", "aa"), model.predict(s, "pos", "aa"));
  std::filesystem::remove_all(dir);
}
