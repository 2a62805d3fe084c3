#include "lexshare/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

const std::vector<std::string> kTagNames{"NOUN", "VERB", "ADJ", "ADV", "DET", "ADP", "PRON", "CONJ",
                                         "NUM",  "PRT",  "AUX", "INTJ", "PROPN", "SYM", "PUNCT", "X"};
constexpr std::string_view kConsonants = "bcdfghjklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSuffixChars = 2;

double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t categorical(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

char pick(Rng& rng, std::string_view letters) { return letters[rng.below(letters.size())]; }

std::vector<double> sparse_row(Rng& rng, std::size_t n) {
  std::vector<double> row(n);
  for (auto& w : row) {
    const double u = rng.uniform();
    w = u * u * u + 0.01;
  }
  return row;
}

}  // namespace

std::string fine_tag_name(const std::string& coarse, std::size_t subclass) {
  return coarse + ":" + std::to_string(subclass);
}

SyntheticLanguage SyntheticLanguage::generate(const SyntheticSpec& spec) {
  if (spec.n_tags < 2 || spec.n_tags > kTagNames.size())
    throw ConfigError("synthetic language needs between 2 and " + std::to_string(kTagNames.size()) + " tags");
  if (spec.words_per_tag == 0 || spec.subclasses == 0 || spec.embedding_dim == 0)
    throw ConfigError("synthetic language sizes must be positive");
  if (spec.min_length == 0 || spec.min_length > spec.max_length)
    throw ConfigError("synthetic sentence lengths must satisfy 0 < min_length <= max_length");

  SyntheticLanguage lang;
  lang.spec_ = spec;
  lang.coarse_.assign(kTagNames.begin(), kTagNames.begin() + static_cast<std::ptrdiff_t>(spec.n_tags));
  Rng rng(mix_seed(spec.seed, "synthetic-language"));

  // A language-specific consonant inventory keeps unrelated languages apart in character space.
  std::vector<char> inventory(kConsonants.begin(), kConsonants.end());
  rng.shuffle(inventory);
  const std::string consonants(inventory.begin(), inventory.begin() + 10);

  lang.start_.push_back(sparse_row(rng, spec.n_tags));
  for (std::size_t t = 0; t < spec.n_tags; ++t) lang.transitions_.push_back(sparse_row(rng, spec.n_tags));

  std::set<std::string> used_suffixes;
  std::vector<std::string> suffix(spec.n_tags);
  for (auto& s : suffix) {
    do {
      s = {pick(rng, kVowels), pick(rng, consonants)};
    } while (!used_suffixes.insert(s).second);
  }

  std::vector<std::vector<double>> centroids(spec.n_tags * spec.subclasses, Vector(spec.embedding_dim));
  for (auto& c : centroids)
    for (auto& x : c) x = spec.embedding_signal * normal(rng);

  std::set<std::string> forms;
  lang.emitters_.assign(spec.n_tags, {});
  for (std::size_t t = 0; t < spec.n_tags; ++t) {
    for (std::size_t k = 0; k < spec.words_per_tag; ++k) {
      SyntheticWord w;
      do {
        std::string stem;
        const std::size_t syllables = 1 + rng.below(2);
        for (std::size_t i = 0; i < syllables; ++i) {
          stem += pick(rng, consonants);
          stem += pick(rng, kVowels);
        }
        if (rng.below(2) == 1) stem += pick(rng, consonants);
        w.form = stem + suffix[t];
      } while (!forms.insert(w.form).second);
      w.tag = t;
      w.subclass = k % spec.subclasses;
      w.vector = centroids[t * spec.subclasses + w.subclass];
      for (auto& x : w.vector) x += normal(rng);
      lang.emitters_[t].emplace_back(lang.words_.size(), w.subclass);
      lang.words_.push_back(std::move(w));
    }
  }
  for (std::size_t i = 0; i < lang.words_.size(); ++i) {
    if (rng.uniform() >= spec.ambiguity) continue;
    auto& w = lang.words_[i];
    std::size_t other = rng.below(spec.n_tags - 1);
    if (other >= w.tag) ++other;
    w.second_tag = other;
    lang.emitters_[other].emplace_back(i, w.subclass);
  }

  // Zipf weights by position in each tag's emitter list.
  for (const auto& list : lang.emitters_) {
    std::vector<double> weights;
    for (std::size_t r = 0; r < list.size(); ++r) weights.push_back(1.0 / static_cast<double>(r + 1));
    lang.emit_weights_.push_back(std::move(weights));
  }
  return lang;
}

SyntheticLanguage SyntheticLanguage::derive_related(std::string language, double spelling_noise, double vector_noise,
                                                    std::uint64_t seed) const {
  SyntheticLanguage out = *this;
  out.spec_.language = std::move(language);
  Rng rng(mix_seed(seed, out.spec_.language));
  std::set<std::string> forms;
  for (const auto& w : words_) forms.insert(w.form);
  for (auto& w : out.words_) {
    if (rng.uniform() < spelling_noise) {
      const std::size_t stem_len = w.form.size() - kSuffixChars;
      std::string changed = w.form;
      const std::size_t pos = rng.below(stem_len);
      const bool vowel = kVowels.find(changed[pos]) != std::string_view::npos;
      changed[pos] = pick(rng, vowel ? kVowels : kConsonants);
      if (changed != w.form && forms.insert(changed).second) w.form = changed;
    }
    for (auto& x : w.vector) x += vector_noise * normal(rng);
  }
  return out;
}

Corpus SyntheticLanguage::sample(std::size_t sentences, std::uint64_t seed, const std::string& id_prefix) const {
  Corpus corpus;
  corpus.language = spec_.language;
  Rng rng(mix_seed(seed, "synthetic-sample:" + spec_.language));
  const std::size_t span = spec_.max_length - spec_.min_length + 1;
  for (std::size_t s = 0; s < sentences; ++s) {
    Sentence sentence;
    sentence.id = spec_.language + "-" + id_prefix + std::to_string(s + 1);
    const std::size_t length = spec_.min_length + rng.below(span);
    std::size_t tag = categorical(rng, start_[0]);
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) tag = categorical(rng, transitions_[tag]);
      const auto [word, subclass] = emitters_[tag][categorical(rng, emit_weights_[tag])];
      Token token;
      token.form = words_[word].form;
      token.tags[kCoarseLayer] = coarse_[tag];
      token.tags[kFineLayer] = fine_tag_name(coarse_[tag], subclass);
      sentence.tokens.push_back(std::move(token));
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  corpus.layers = {kCoarseLayer, kFineLayer};
  return corpus;
}

EmbeddingTable SyntheticLanguage::embeddings(double coverage, std::uint64_t seed) const {
  EmbeddingTable table;
  table.dim = spec_.embedding_dim;
  Rng rng(mix_seed(seed, "synthetic-embeddings:" + spec_.language));
  for (const auto& w : words_)
    if (rng.uniform() < coverage) table.vectors.emplace(w.form, w.vector);
  return table;
}

std::vector<std::string> SyntheticLanguage::fine_tags() const {
  std::vector<std::string> out;
  for (const auto& t : coarse_)
    for (std::size_t k = 0; k < spec_.subclasses; ++k) out.push_back(fine_tag_name(t, k));
  std::sort(out.begin(), out.end());
  return out;
}

Corpus add_noisy_copy(const Corpus& corpus, const std::string& layer, const std::string& out_layer, double noise,
                      std::uint64_t seed) {
  std::set<std::string> tagset;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s.layer(layer)) tagset.insert(t);
  const std::vector<std::string> tags(tagset.begin(), tagset.end());
  Corpus out = corpus;
  Rng rng(seed);
  for (auto& s : out.sentences) {
    for (auto& token : s.tokens) {
      std::string tag = token.tags.at(layer);
      if (rng.uniform() < noise) tag = tags[rng.below(tags.size())];
      token.tags[out_layer] = std::move(tag);
    }
  }
  refresh_layers(out);
  return out;
}

Corpus add_shuffled_copy(const Corpus& corpus, const std::string& layer, const std::string& out_layer,
                         std::uint64_t seed) {
  const Corpus shuffled = shuffle_labels(corpus, layer, seed);
  Corpus out = corpus;
  for (std::size_t s = 0; s < out.sentences.size(); ++s)
    for (std::size_t i = 0; i < out.sentences[s].tokens.size(); ++i)
      out.sentences[s].tokens[i].tags[out_layer] = shuffled.sentences[s].tokens[i].tags.at(layer);
  refresh_layers(out);
  return out;
}

}  // namespace lexshare
