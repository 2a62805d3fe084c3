#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexshare/corpus.hpp"

namespace lexshare {

// Second-order HMM tagger with deleted-interpolation transitions and a suffix model for
// unknown words. Tags are indexed in sorted order; two extra states mark the sentence start
// (two of them precede every sentence) and the sentence end.
struct TntModel {
  static constexpr std::size_t kSuffixLength = 4;
  static constexpr std::uint64_t kRareThreshold = 2;

  std::vector<std::string> tags;

  // Counts over the padded sequence B B t1 .. tn E; the predicted symbol ranges over t1 .. E.
  std::vector<std::uint64_t> unigram;                           // [state]
  std::map<std::array<std::size_t, 2>, std::uint64_t> bigram;   // (prev, state)
  std::map<std::array<std::size_t, 3>, std::uint64_t> trigram;  // (prev2, prev, state)
  std::vector<std::uint64_t> history1;                          // Σ bigram over state
  std::map<std::array<std::size_t, 2>, std::uint64_t> history2;  // Σ trigram over state
  std::uint64_t total = 0;                                      // Σ unigram

  std::array<double, 3> lambdas{0.0, 0.0, 0.0};  // unigram, bigram, trigram weights

  std::vector<std::uint64_t> tag_counts;  // real tokens per tag
  std::unordered_map<std::string, std::map<std::size_t, std::uint64_t>> lexicon;

  // Suffix statistics over rare words (frequency <= kRareThreshold), suffix -> per-tag counts.
  std::unordered_map<std::string, std::vector<std::uint64_t>> suffix_counts;
  std::vector<std::uint64_t> rare_tag_counts;
  double theta = 0.0;

  std::size_t begin_state() const { return tags.size(); }
  std::size_t end_state() const { return tags.size() + 1; }
  std::size_t state_count() const { return tags.size() + 2; }

  // Interpolated P(state | prev2, prev).
  double transition(std::size_t prev2, std::size_t prev, std::size_t state) const;
  // P(word | tag) for known words; for unknown words P(tag | suffix) / P(tag).
  double emission(const std::string& word, std::size_t tag) const;
  bool known(const std::string& word) const { return lexicon.count(word) != 0; }
};

TntModel tnt_train(const Corpus& corpus, const std::string& layer);

// Log-space Viterbi over (prev, current) tag pairs. Among equally scored sequences the one
// with the smallest tag indices, compared from the last token backwards, wins.
std::vector<std::string> tnt_predict(const TntModel& model, const Sentence& sentence);
std::vector<std::size_t> tnt_decode(const TntModel& model, std::span<const std::string> words);

// Log score of one tag sequence, accumulated left to right exactly as the decoder does.
double tnt_sequence_score(const TntModel& model, std::span<const std::string> words,
                          std::span<const std::size_t> tags);

}  // namespace lexshare
