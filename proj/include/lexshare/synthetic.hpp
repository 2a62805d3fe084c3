#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"

namespace lexshare {

// Parameters of a generated toy language: a first-order Markov chain over coarse tags, a
// Zipf-distributed lexicon whose words end in tag-specific suffixes, and a fine tag layer that
// splits each coarse tag into word-determined subclasses.
struct SyntheticSpec {
  std::string language = "xx";
  std::size_t n_tags = 8;
  std::size_t words_per_tag = 16;
  std::size_t subclasses = 2;
  double ambiguity = 0.1;  // fraction of words that also occur under a second coarse tag
  std::size_t min_length = 4;
  std::size_t max_length = 12;
  std::size_t embedding_dim = 16;
  double embedding_signal = 1.0;  // scale of the per-class centroid relative to unit noise
  std::uint64_t seed = 1;
};

struct SyntheticWord {
  std::string form;
  std::size_t tag = 0;
  std::size_t subclass = 0;
  std::size_t second_tag = SIZE_MAX;  // SIZE_MAX when unambiguous
  Vector vector;
};

class SyntheticLanguage {
 public:
  static constexpr const char* kCoarseLayer = "pos";
  static constexpr const char* kFineLayer = "sem";

  static SyntheticLanguage generate(const SyntheticSpec& spec);

  // Same tag chain and lexicon. Each word form has one stem letter changed with probability
  // `spelling_noise`, and each vector is shifted by `vector_noise` * N(0, 1).
  SyntheticLanguage derive_related(std::string language, double spelling_noise, double vector_noise,
                                   std::uint64_t seed) const;

  // Sentences carrying "pos" and "sem"; ids "<language>-<prefix><k>".
  Corpus sample(std::size_t sentences, std::uint64_t seed, const std::string& id_prefix = "") const;

  // Word vectors for a seeded subset of the lexicon covering `coverage` of the word types.
  EmbeddingTable embeddings(double coverage = 1.0, std::uint64_t seed = 0) const;

  const std::string& language() const { return spec_.language; }
  const std::vector<std::string>& coarse_tags() const { return coarse_; }
  std::vector<std::string> fine_tags() const;
  const std::vector<SyntheticWord>& words() const { return words_; }

 private:
  SyntheticSpec spec_;
  std::vector<std::string> coarse_;
  std::vector<std::vector<double>> start_;        // [1][tag]
  std::vector<std::vector<double>> transitions_;  // [tag][tag]
  std::vector<SyntheticWord> words_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> emitters_;  // tag -> (word, subclass)
  std::vector<std::vector<double>> emit_weights_;
};

std::string fine_tag_name(const std::string& coarse, std::size_t subclass);

// Copy of `corpus` with a layer `out_layer` equal to `layer`, except that each token's tag is
// replaced with probability `noise` by a uniform draw from that layer's tagset.
Corpus add_noisy_copy(const Corpus& corpus, const std::string& layer, const std::string& out_layer, double noise,
                      std::uint64_t seed);
// Copy of `corpus` with `out_layer` set to a per-sentence shuffle of `layer`.
Corpus add_shuffled_copy(const Corpus& corpus, const std::string& layer, const std::string& out_layer,
                         std::uint64_t seed);

}  // namespace lexshare
