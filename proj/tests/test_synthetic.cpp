#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lexshare/error.hpp"
#include "lexshare/synthetic.hpp"
#include "lexshare/tagstats.hpp"

using namespace lexshare;

namespace {

SyntheticLanguage make(std::uint64_t seed, std::size_t tags = 6) {
  SyntheticSpec spec;
  spec.language = "qq";
  spec.n_tags = tags;
  spec.seed = seed;
  spec.ambiguity = 0.2;
  return SyntheticLanguage::generate(spec);
}

}  // namespace

TEST(Synthetic, DeterministicPerSeed) {
  const auto a = make(4), b = make(4), c = make(5);
  EXPECT_EQ(a.sample(20, 1), b.sample(20, 1));
  EXPECT_NE(a.sample(20, 1), a.sample(20, 2));
  EXPECT_NE(a.sample(20, 1), c.sample(20, 1));
  EXPECT_EQ(a.embeddings(0.5, 3).vectors, b.embeddings(0.5, 3).vectors);
}

TEST(Synthetic, SampleShape) {
  const auto lang = make(6);
  const auto c = lang.sample(50, 2, "x");
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.language, "qq");
  EXPECT_EQ(c.layers, (std::set<std::string>{"pos", "sem"}));
  EXPECT_EQ(c.sentences.front().id, "qq-x1");
  EXPECT_EQ(c.sentences.back().id, "qq-x50");
  const auto fine = lang.fine_tags();
  for (const auto& s : c.sentences) {
    EXPECT_GE(s.size(), 4u);
    EXPECT_LE(s.size(), 12u);
    for (const auto& t : s.tokens) {
      const auto& pos = t.tags.at("pos");
      const auto& sem = t.tags.at("sem");
      EXPECT_TRUE(sem.starts_with(pos + ":")) << sem;
      EXPECT_TRUE(std::binary_search(fine.begin(), fine.end(), sem));
    }
  }
}

TEST(Synthetic, FineLayerRefinesCoarseLayer) {
  const auto c = make(7).sample(300, 1);
  const auto j = joint_distribution(c, "sem", "pos");
  // The coarse tag is a function of the fine one.
  EXPECT_NEAR(conditional_entropy(j), 0.0, 1e-12);
  EXPECT_GT(entropy(j.marginal_a), entropy(j.marginal_b));
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec spec;
  spec.n_tags = 1;
  EXPECT_THROW(SyntheticLanguage::generate(spec), ConfigError);
  spec.n_tags = 4;
  spec.min_length = 9;
  spec.max_length = 3;
  EXPECT_THROW(SyntheticLanguage::generate(spec), ConfigError);
}

TEST(Synthetic, EmbeddingCoverage) {
  const auto lang = make(8);
  const auto full = lang.embeddings(1.0, 1);
  std::set<std::string> forms;
  for (const auto& w : lang.words()) forms.insert(w.form);
  EXPECT_EQ(full.vectors.size(), forms.size());
  EXPECT_EQ(full.dim, 16u);
  const auto part = lang.embeddings(0.4, 1);
  const double frac = static_cast<double>(part.vectors.size()) / static_cast<double>(forms.size());
  EXPECT_NEAR(frac, 0.4, 0.15);
  for (const auto& [w, v] : part.vectors) EXPECT_EQ(full.vectors.at(w), v);
}

TEST(Synthetic, WordsCarryTagSuffixes) {
  const auto lang = make(9);
  std::map<std::size_t, std::set<std::string>> endings;
  for (const auto& w : lang.words()) endings[w.tag].insert(w.form.substr(w.form.size() - 2));
  std::set<std::string> all;
  for (const auto& [tag, e] : endings) {
    EXPECT_EQ(e.size(), 1u);
    all.insert(*e.begin());
  }
  EXPECT_EQ(all.size(), endings.size());
}

TEST(Synthetic, DerivedLanguageKeepsTagsAndVectorsNearby) {
  const auto lang = make(10);
  const auto rel = lang.derive_related("rr", 0.15, 0.1, 3);
  EXPECT_EQ(rel.language(), "rr");
  EXPECT_EQ(rel.coarse_tags(), lang.coarse_tags());
  ASSERT_EQ(rel.words().size(), lang.words().size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < lang.words().size(); ++i) {
    const auto &a = lang.words()[i], &b = rel.words()[i];
    EXPECT_EQ(a.tag, b.tag);
    EXPECT_EQ(a.form.size(), b.form.size());
    changed += a.form != b.form;
    EXPECT_GT(cosine_similarity(a.vector, b.vector), 0.9);
  }
  EXPECT_GT(changed, 0u);
  EXPECT_LT(changed, lang.words().size() / 2);
}

TEST(NoisyCopy, MatchesReferenceDraws) {
  const auto c = make(11).sample(40, 1);
  const auto noisy = add_noisy_copy(c, "pos", "noisy", 0.3, 77);
  std::set<std::string> tagset;
  for (const auto& s : c.sentences)
    for (const auto& t : s.tokens) tagset.insert(t.tags.at("pos"));
  const std::vector<std::string> tags(tagset.begin(), tagset.end());
  std::mt19937_64 g(77);
  auto below = [&](std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = g();
    while (x >= limit);
    return x % n;
  };
  std::size_t redrawn = 0, total = 0;
  for (std::size_t s = 0; s < c.sentences.size(); ++s)
    for (std::size_t i = 0; i < c.sentences[s].size(); ++i) {
      std::string expected = c.sentences[s].tokens[i].tags.at("pos");
      if (static_cast<double>(g() >> 11) * 0x1.0p-53 < 0.3) {
        expected = tags[below(tags.size())];
        ++redrawn;
      }
      ++total;
      EXPECT_EQ(noisy.sentences[s].tokens[i].tags.at("noisy"), expected);
      EXPECT_EQ(noisy.sentences[s].tokens[i].tags.at("pos"), c.sentences[s].tokens[i].tags.at("pos"));
    }
  EXPECT_NEAR(static_cast<double>(redrawn) / static_cast<double>(total), 0.3, 0.08);
  EXPECT_TRUE(noisy.has_layer("noisy"));
}

TEST(NoisyCopy, MoreNoiseLowersMutualInformation) {
  const auto c = make(12).sample(200, 1);
  double last = 1e9;
  for (double noise : {0.0, 0.3, 0.6, 1.0}) {
    const auto n = add_noisy_copy(c, "pos", "aux", noise, 5);
    const double mi = mutual_information(joint_distribution(n, "pos", "aux"));
    EXPECT_LT(mi, last);
    last = mi;
  }
  EXPECT_LT(last, 0.1);
}

TEST(ShuffledCopy, SameMultisetPerSentence) {
  const auto c = make(13).sample(30, 1);
  const auto sh = add_shuffled_copy(c, "pos", "shuf", 3);
  const auto ref = shuffle_labels(c, "pos", 3);
  for (std::size_t s = 0; s < c.sentences.size(); ++s) {
    EXPECT_EQ(sh.sentences[s].layer("shuf"), ref.sentences[s].layer("pos"));
    auto a = sh.sentences[s].layer("shuf"), b = c.sentences[s].layer("pos");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}
