#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexshare/corpus.hpp"

namespace lexshare {

using Vector = std::vector<double>;

inline const std::string kSharedScope = "shared";

// Pre-trained word vectors. A table whose language_scope is {"shared"} is keyed by bare word
// forms; a merged multilingual table is keyed "iso:word" and scoped to its languages.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, Vector> vectors;
  std::set<std::string> language_scope{kSharedScope};

  bool contains(const std::string& word) const { return vectors.count(word) != 0; }
  bool is_multilingual() const { return language_scope.count(kSharedScope) == 0; }
};

// "word v1 ... vm" per line, optional leading "count dim" header. Duplicates keep the first.
EmbeddingTable load_text_embeddings(std::string_view text);
std::string write_text_embeddings(const EmbeddingTable& table);

// Exact match, then lowercased match, then the zero vector.
Vector lookup(const EmbeddingTable& table, std::string_view word);
// As above, using the "lang:word" key when the table is multilingual and covers lang.
Vector lookup(const EmbeddingTable& table, std::string_view language, std::string_view word);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

EmbeddingTable merge_multilingual(std::span<const std::pair<std::string, EmbeddingTable>> tables);

struct LanguageEmbeddingTable {
  std::size_t dim = 8;
  std::map<std::string, Vector> vectors;
  bool trainable = true;

  // Uniform in [-0.1, 0.1].
  static LanguageEmbeddingTable make(std::span<const std::string> languages, std::size_t dim,
                                     std::uint64_t seed);
};

// Dense character inventory. Index 0 is the unknown character, index 1 the word boundary.
class CharVocab {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::size_t kBoundary = 1;
  static constexpr std::size_t kMaxWordChars = 32;

  CharVocab() = default;
  explicit CharVocab(std::vector<char32_t> chars);
  static CharVocab from_corpora(std::span<const Corpus* const> corpora);

  std::size_t size() const { return chars_.size() + 2; }
  std::size_t unk_index() const { return kUnknown; }
  std::size_t index(char32_t c) const;
  const std::vector<char32_t>& chars() const { return chars_; }

  // Boundary, the characters (words over 32 characters keep their first and last 16), boundary.
  std::vector<std::size_t> encode(std::string_view word) const;

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> index_;
};

// Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic capitals.
std::string lowercase(std::string_view text);

}  // namespace lexshare
