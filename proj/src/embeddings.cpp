#include "lexshare/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

char32_t fold(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;
  if (c >= 0x100 && c <= 0x137 && c % 2 == 0 && c != 0x130) return c + 1;
  if (c >= 0x139 && c <= 0x148 && c % 2 == 1) return c + 1;
  if (c >= 0x14A && c <= 0x177 && c % 2 == 0) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && c % 2 == 1) return c + 1;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

}  // namespace

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  for (char32_t c : text) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (c >> 18));
      out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

std::string lowercase(std::string_view text) {
  auto chars = utf8_decode(text);
  for (auto& c : chars) c = fold(c);
  return utf8_encode(chars);
}

EmbeddingTable load_text_embeddings(std::string_view text) {
  EmbeddingTable table;
  std::size_t number = 0;
  std::size_t start = 0;
  bool first_content = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;

    if (first_content) {
      first_content = false;
      std::size_t count = 0, dim = 0;
      if (fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim)) {
        if (dim == 0) throw ParseError(number, "header declares zero dimensions");
        table.dim = dim;
        continue;
      }
    }
    if (fields.size() < 2) throw ParseError(number, "expected a word followed by at least one value");
    const std::size_t width = fields.size() - 1;
    if (table.dim == 0) table.dim = width;
    if (width != table.dim)
      throw ParseError(number, "expected " + std::to_string(table.dim) + " values, found " + std::to_string(width));
    Vector v(width);
    for (std::size_t k = 0; k < width; ++k)
      if (!parse_double(fields[k + 1], v[k]))
        throw ParseError(number, "not a number: '" + std::string(fields[k + 1]) + "'");
    table.vectors.emplace(std::string(fields[0]), std::move(v));
  }
  if (table.dim == 0) throw ParseError(0, "no embedding vectors found");
  return table;
}

std::string write_text_embeddings(const EmbeddingTable& table) {
  std::vector<const std::string*> words;
  words.reserve(table.vectors.size());
  for (const auto& [word, v] : table.vectors) words.push_back(&word);
  std::sort(words.begin(), words.end(), [](auto* a, auto* b) { return *a < *b; });
  std::string out = std::to_string(words.size()) + " " + std::to_string(table.dim) + "\n";
  char buf[64];
  for (const auto* word : words) {
    out += *word;
    for (double x : table.vectors.at(*word)) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
      out += ' ';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

Vector lookup(const EmbeddingTable& table, std::string_view word) {
  const std::string key(word);
  if (auto it = table.vectors.find(key); it != table.vectors.end()) return it->second;
  if (auto it = table.vectors.find(lowercase(word)); it != table.vectors.end()) return it->second;
  return Vector(table.dim, 0.0);
}

Vector lookup(const EmbeddingTable& table, std::string_view language, std::string_view word) {
  if (table.is_multilingual() && table.language_scope.count(std::string(language))) {
    const std::string prefix = std::string(language) + ":";
    if (auto it = table.vectors.find(prefix + std::string(word)); it != table.vectors.end()) return it->second;
    if (auto it = table.vectors.find(prefix + lowercase(word)); it != table.vectors.end()) return it->second;
    return Vector(table.dim, 0.0);
  }
  return lookup(table, word);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ArityError("cosine_similarity: lengths differ (" + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()) + ")");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

EmbeddingTable merge_multilingual(std::span<const std::pair<std::string, EmbeddingTable>> tables) {
  EmbeddingTable merged;
  merged.language_scope.clear();
  for (const auto& [language, table] : tables) {
    if (merged.dim == 0) merged.dim = table.dim;
    if (table.dim != merged.dim)
      throw MergeError(language, "dimension " + std::to_string(table.dim) + " differs from " +
                                     std::to_string(merged.dim));
    merged.language_scope.insert(language);
    for (const auto& [word, v] : table.vectors) merged.vectors.emplace(language + ":" + word, v);
  }
  return merged;
}

LanguageEmbeddingTable LanguageEmbeddingTable::make(std::span<const std::string> languages, std::size_t dim,
                                                    std::uint64_t seed) {
  LanguageEmbeddingTable table;
  table.dim = dim;
  Rng rng(seed);
  for (const auto& language : languages) {
    Vector v(dim);
    for (auto& x : v) x = rng.uniform(-0.1, 0.1);
    table.vectors.emplace(language, std::move(v));
  }
  return table;
}

CharVocab::CharVocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  for (std::size_t i = 0; i < chars_.size(); ++i) index_.emplace(chars_[i], i + 2);
}

CharVocab CharVocab::from_corpora(std::span<const Corpus* const> corpora) {
  std::set<char32_t> seen;
  for (const auto* corpus : corpora)
    for (const auto& s : corpus->sentences)
      for (const auto& t : s.tokens)
        for (char32_t c : utf8_decode(t.form)) seen.insert(c);
  return CharVocab(std::vector<char32_t>(seen.begin(), seen.end()));
}

std::size_t CharVocab::index(char32_t c) const {
  const auto it = index_.find(c);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> CharVocab::encode(std::string_view word) const {
  auto chars = utf8_decode(word);
  if (chars.size() > kMaxWordChars) {
    const std::size_t half = kMaxWordChars / 2;
    chars = chars.substr(0, half) + chars.substr(chars.size() - half);
  }
  std::vector<std::size_t> ids;
  ids.reserve(chars.size() + 2);
  ids.push_back(kBoundary);
  for (char32_t c : chars) ids.push_back(index(c));
  ids.push_back(kBoundary);
  return ids;
}

}  // namespace lexshare
