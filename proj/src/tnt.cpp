#include "lexshare/tnt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "lexshare/embeddings.hpp"
#include "lexshare/error.hpp"

namespace lexshare {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// (count - 1) / (history - 1), the leave-one-out estimate used by deleted interpolation.
double held_out_ratio(std::uint64_t count, std::uint64_t history) {
  return history <= 1 ? 0.0 : (static_cast<double>(count) - 1.0) / (static_cast<double>(history) - 1.0);
}

template <class Map, class Key>
std::uint64_t count_of(const Map& m, const Key& k) {
  const auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

std::vector<std::string> suffixes(const std::string& word) {
  const auto chars = utf8_decode(word);
  std::vector<std::string> out;
  for (std::size_t len = 1; len <= std::min(TntModel::kSuffixLength, chars.size()); ++len)
    out.push_back(utf8_encode(std::u32string_view(chars).substr(chars.size() - len)));
  return out;
}

}  // namespace

double TntModel::transition(std::size_t prev2, std::size_t prev, std::size_t state) const {
  const double p1 = ratio(unigram[state], total);
  const double p2 = ratio(count_of(bigram, std::array{prev, state}), history1[prev]);
  const double p3 = ratio(count_of(trigram, std::array{prev2, prev, state}), count_of(history2, std::array{prev2, prev}));
  return lambdas[0] * p1 + lambdas[1] * p2 + lambdas[2] * p3;
}

double TntModel::emission(const std::string& word, std::size_t tag) const {
  if (const auto it = lexicon.find(word); it != lexicon.end())
    return ratio(count_of(it->second, tag), tag_counts[tag]);

  const std::uint64_t rare_total = std::accumulate(rare_tag_counts.begin(), rare_tag_counts.end(), std::uint64_t{0});
  const std::uint64_t tag_total = std::accumulate(tag_counts.begin(), tag_counts.end(), std::uint64_t{0});
  double p = rare_total > 0 ? ratio(rare_tag_counts[tag], rare_total) : ratio(tag_counts[tag], tag_total);
  for (const auto& suffix : suffixes(word)) {
    const auto it = suffix_counts.find(suffix);
    if (it == suffix_counts.end()) break;
    const std::uint64_t n = std::accumulate(it->second.begin(), it->second.end(), std::uint64_t{0});
    p = (ratio(it->second[tag], n) + theta * p) / (1.0 + theta);
  }
  const double prior = ratio(tag_counts[tag], tag_total);
  return prior > 0.0 ? p / prior : 0.0;
}

TntModel tnt_train(const Corpus& corpus, const std::string& layer) {
  if (corpus.empty()) throw SizingError("tnt_train needs a non-empty corpus");
  TntModel m;
  std::set<std::string> tagset;
  for (const auto& s : corpus.sentences)
    for (const auto& tag : s.layer(layer)) tagset.insert(tag);
  m.tags.assign(tagset.begin(), tagset.end());
  const std::size_t n_tags = m.tags.size();
  auto index_of = [&](const std::string& tag) {
    return static_cast<std::size_t>(std::lower_bound(m.tags.begin(), m.tags.end(), tag) - m.tags.begin());
  };

  m.unigram.assign(m.state_count(), 0);
  m.history1.assign(m.state_count(), 0);
  m.tag_counts.assign(n_tags, 0);
  std::unordered_map<std::string, std::uint64_t> word_freq;

  for (const auto& s : corpus.sentences) {
    const auto tags = s.layer(layer);
    std::vector<std::size_t> seq{m.begin_state(), m.begin_state()};
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const auto t = index_of(tags[i]);
      seq.push_back(t);
      ++m.tag_counts[t];
      ++m.lexicon[s.tokens[i].form][t];
      ++word_freq[s.tokens[i].form];
    }
    seq.push_back(m.end_state());
    for (std::size_t i = 2; i < seq.size(); ++i) {
      ++m.unigram[seq[i]];
      ++m.total;
      ++m.bigram[{seq[i - 1], seq[i]}];
      ++m.history1[seq[i - 1]];
      ++m.trigram[{seq[i - 2], seq[i - 1], seq[i]}];
      ++m.history2[{seq[i - 2], seq[i - 1]}];
    }
  }

  // Deleted interpolation: each trigram votes its count for the order whose leave-one-out
  // estimate is largest; tied orders share the vote.
  std::array<double, 3> votes{0.0, 0.0, 0.0};
  for (const auto& [key, f] : m.trigram) {
    const auto [a, b, c] = key;
    const std::array<double, 3> est{held_out_ratio(m.unigram[c], m.total),
                                     held_out_ratio(m.bigram.at({b, c}), m.history1[b]),
                                     held_out_ratio(f, m.history2.at({a, b}))};
    const double best = *std::max_element(est.begin(), est.end());
    const auto ties = static_cast<double>(std::count(est.begin(), est.end(), best));
    for (std::size_t k = 0; k < 3; ++k)
      if (est[k] == best) votes[k] += static_cast<double>(f) / ties;
  }
  const double vote_total = votes[0] + votes[1] + votes[2];
  for (std::size_t k = 0; k < 3; ++k) m.lambdas[k] = vote_total > 0.0 ? votes[k] / vote_total : 1.0 / 3.0;

  // Suffix model from rare words.
  m.rare_tag_counts.assign(n_tags, 0);
  for (const auto& s : corpus.sentences) {
    const auto tags = s.layer(layer);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const auto& form = s.tokens[i].form;
      if (word_freq[form] > TntModel::kRareThreshold) continue;
      const auto t = index_of(tags[i]);
      ++m.rare_tag_counts[t];
      for (const auto& suffix : suffixes(form)) {
        auto& counts = m.suffix_counts[suffix];
        if (counts.empty()) counts.assign(n_tags, 0);
        ++counts[t];
      }
    }
  }
  const std::uint64_t token_total = std::accumulate(m.tag_counts.begin(), m.tag_counts.end(), std::uint64_t{0});
  if (n_tags > 1) {
    const double mean = 1.0 / static_cast<double>(n_tags);
    double ss = 0.0;
    for (auto c : m.tag_counts) {
      const double d = ratio(c, token_total) - mean;
      ss += d * d;
    }
    m.theta = std::sqrt(ss / static_cast<double>(n_tags - 1));
  }
  return m;
}

double tnt_sequence_score(const TntModel& model, std::span<const std::string> words, std::span<const std::size_t> tags) {
  if (words.size() != tags.size()) throw ArityError("tnt_sequence_score: word and tag counts differ");
  double score = 0.0;
  std::size_t prev2 = model.begin_state(), prev = model.begin_state();
  for (std::size_t i = 0; i < words.size(); ++i) {
    score = score + std::log(model.transition(prev2, prev, tags[i]));
    score = score + std::log(model.emission(words[i], tags[i]));
    prev2 = prev;
    prev = tags[i];
  }
  return score + std::log(model.transition(prev2, prev, model.end_state()));
}

std::vector<std::size_t> tnt_decode(const TntModel& model, std::span<const std::string> words) {
  const std::size_t n = words.size();
  if (n == 0) return {};
  const std::size_t T = model.tags.size(), S = model.state_count(), B = model.begin_state();

  std::vector<double> log_trans(S * S * S);
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = 0; b < S; ++b)
      for (std::size_t c = 0; c < S; ++c) log_trans[(a * S + b) * S + c] = std::log(model.transition(a, b, c));
  auto lt = [&](std::size_t a, std::size_t b, std::size_t c) { return log_trans[(a * S + b) * S + c]; };

  // delta[i][prev * T + cur]; prev ranges over tags plus B (index T).
  const std::size_t P = T + 1;
  std::vector<std::vector<double>> delta(n, std::vector<double>(P * T, kNegInf));
  std::vector<std::vector<std::size_t>> back(n, std::vector<std::size_t>(P * T, B));

  for (std::size_t c = 0; c < T; ++c)
    delta[0][T * T + c] = (0.0 + lt(B, B, c)) + std::log(model.emission(words[0], c));

  for (std::size_t i = 1; i < n; ++i) {
    std::vector<double> emit(T);
    for (std::size_t c = 0; c < T; ++c) emit[c] = std::log(model.emission(words[i], c));
    // At i == 1 the only predecessor pair is (B, p); later it ranges over tags.
    const std::size_t q_first = i == 1 ? T : 0, q_last = i == 1 ? T : T - 1;
    for (std::size_t p = 0; p < T; ++p) {
      for (std::size_t c = 0; c < T; ++c) {
        std::size_t best_q = q_first;
        double best = delta[i - 1][q_first * T + p] + lt(q_first == T ? B : q_first, p, c);
        for (std::size_t q = q_first + 1; q <= q_last; ++q) {
          const double cand = delta[i - 1][q * T + p] + lt(q, p, c);
          if (cand > best) {
            best = cand;
            best_q = q;
          }
        }
        delta[i][p * T + c] = best + emit[c];
        back[i][p * T + c] = best_q;
      }
    }
  }

  // Final transition into the end state; scan the last tag first so ties favour low indices
  // from the back.
  const std::size_t E = model.end_state();
  const std::size_t p_first = n == 1 ? T : 0, p_last = n == 1 ? T : T - 1;
  std::size_t best_p = p_first, best_c = 0;
  double best = kNegInf;
  bool first = true;
  for (std::size_t c = 0; c < T; ++c) {
    for (std::size_t p = p_first; p <= p_last; ++p) {
      const double score = delta[n - 1][p * T + c] + lt(p == T ? B : p, c, E);
      if (first || score > best) {
        first = false;
        best = score;
        best_p = p;
        best_c = c;
      }
    }
  }

  std::vector<std::size_t> out(n);
  out[n - 1] = best_c;
  std::size_t prev = best_p;
  for (std::size_t i = n - 1; i > 0; --i) {
    out[i - 1] = prev;
    const std::size_t before = back[i][prev * T + out[i]];
    prev = before;
  }
  return out;
}

std::vector<std::string> tnt_predict(const TntModel& model, const Sentence& sentence) {
  const auto forms = sentence.forms();
  std::vector<std::string> out;
  for (auto t : tnt_decode(model, forms)) out.push_back(model.tags[t]);
  return out;
}

}  // namespace lexshare
