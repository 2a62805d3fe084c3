#include "lexshare/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

// Calls fn(line_number, line) for each line, with any trailing '\r' removed.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++number, line);
    start = end + 1;
  }
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

// Collects sentences while enforcing id uniqueness.
class SentenceSink {
 public:
  explicit SentenceSink(Corpus& corpus) : corpus_(corpus) {}

  void finish(std::optional<std::string> id, std::vector<Token> tokens, std::size_t line) {
    if (tokens.empty()) return;
    std::string name = id ? std::move(*id) : "s" + std::to_string(corpus_.sentences.size() + 1);
    if (!seen_.insert(name).second) throw ParseError(line, "duplicate sentence id '" + name + "'");
    corpus_.sentences.push_back(Sentence{std::move(name), std::move(tokens)});
  }

 private:
  Corpus& corpus_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

std::vector<std::string> Sentence::layer(const std::string& name) const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) {
    const auto it = token.tags.find(name);
    if (it == token.tags.end()) throw LookupError("sentence '" + id + "' has no layer '" + name + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> Sentence::forms() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& token : tokens) out.push_back(token.form);
  return out;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

const Sentence* Corpus::find(std::string_view id) const {
  for (const auto& s : sentences)
    if (s.id == id) return &s;
  return nullptr;
}

void refresh_layers(Corpus& corpus) {
  corpus.layers.clear();
  for (const auto& s : corpus.sentences)
    for (const auto& t : s.tokens)
      for (const auto& [layer, tag] : t.tags) corpus.layers.insert(layer);
}

void validate(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& s : corpus.sentences) {
    if (s.tokens.empty()) throw Error("sentence '" + s.id + "' has no tokens");
    if (!ids.insert(s.id).second) throw Error("duplicate sentence id '" + s.id + "'");
    for (const auto& t : s.tokens) {
      if (t.form.empty()) throw Error("sentence '" + s.id + "' has an empty token form");
      if (t.tags.size() != corpus.layers.size())
        throw Error("sentence '" + s.id + "' does not carry exactly the corpus layers");
      for (const auto& [layer, tag] : t.tags)
        if (!corpus.has_layer(layer))
          throw Error("sentence '" + s.id + "' carries undeclared layer '" + layer + "'");
    }
  }
}

std::string to_string(OverlapMode mode) {
  switch (mode) {
    case OverlapMode::full: return "full";
    case OverlapMode::partial: return "partial";
    case OverlapMode::none: return "none";
  }
  return "?";
}

OverlapMode parse_overlap_mode(std::string_view text) {
  if (text == "full") return OverlapMode::full;
  if (text == "partial") return OverlapMode::partial;
  if (text == "none") return OverlapMode::none;
  throw ConfigError("unknown overlap mode '" + std::string(text) + "'");
}

Corpus parse_conllu(std::string_view text, std::string language) {
  Corpus corpus;
  corpus.language = std::move(language);
  SentenceSink sink(corpus);
  std::optional<std::string> id;
  std::vector<Token> tokens;
  std::size_t last_line = 0;

  for_each_line(text, [&](std::size_t number, std::string_view line) {
    last_line = number;
    if (is_blank(line)) {
      sink.finish(std::move(id), std::move(tokens), number);
      id.reset();
      tokens.clear();
      return;
    }
    if (line.front() == '#') {
      auto body = trim(line.substr(1));
      if (body.substr(0, 7) == "sent_id") {
        body = trim(body.substr(7));
        if (!body.empty() && body.front() == '=') body = trim(body.substr(1));
        if (!body.empty()) id = std::string(body);
      }
      return;
    }
    const auto fields = split(line, '\t');
    if (fields.size() < 10)
      throw ParseError(number, "expected at least 10 tab-separated columns, found " +
                                   std::to_string(fields.size()));
    const auto token_id = fields[0];
    if (token_id.find('-') != std::string_view::npos || token_id.find('.') != std::string_view::npos)
      return;
    if (fields[1].empty()) throw ParseError(number, "empty token form");
    Token token;
    token.form = std::string(fields[1]);
    token.tags.emplace("upos", std::string(fields[3]));
    token.tags.emplace("deprel", std::string(fields[7]));
    tokens.push_back(std::move(token));
  });
  sink.finish(std::move(id), std::move(tokens), last_line);
  refresh_layers(corpus);
  return corpus;
}

Corpus parse_tsv(std::string_view text, std::span<const std::string> layer_names, std::string language) {
  if (layer_names.empty()) throw ConfigError("parse_tsv needs at least one layer name");
  Corpus corpus;
  corpus.language = std::move(language);
  SentenceSink sink(corpus);
  std::vector<Token> tokens;
  std::size_t last_line = 0;

  for_each_line(text, [&](std::size_t number, std::string_view line) {
    last_line = number;
    if (is_blank(line)) {
      sink.finish(std::nullopt, std::move(tokens), number);
      tokens.clear();
      return;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != layer_names.size() + 1)
      throw ParseError(number, "expected " + std::to_string(layer_names.size() + 1) +
                                   " tab-separated columns, found " + std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(number, "empty token form");
    Token token;
    token.form = std::string(fields[0]);
    for (std::size_t k = 0; k < layer_names.size(); ++k)
      token.tags.emplace(layer_names[k], std::string(fields[k + 1]));
    tokens.push_back(std::move(token));
  });
  sink.finish(std::nullopt, std::move(tokens), last_line);
  refresh_layers(corpus);
  return corpus;
}

std::string write_conllu(const Corpus& corpus) {
  std::string out;
  auto tag_or_blank = [](const Token& t, const char* layer) -> std::string {
    const auto it = t.tags.find(layer);
    return it == t.tags.end() ? "_" : it->second;
  };
  for (const auto& s : corpus.sentences) {
    out += "# sent_id = " + s.id + "\n";
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      out += std::to_string(i + 1) + "\t" + t.form + "\t_\t" + tag_or_blank(t, "upos") + "\t_\t_\t_\t" +
             tag_or_blank(t, "deprel") + "\t_\t_\n";
    }
    out += "\n";
  }
  return out;
}

std::string write_tsv(const Corpus& corpus, std::span<const std::string> layer_names) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    for (const auto& t : s.tokens) {
      out += t.form;
      for (const auto& layer : layer_names) {
        const auto it = t.tags.find(layer);
        if (it == t.tags.end()) throw LookupError("sentence '" + s.id + "' has no layer '" + layer + "'");
        out += '\t';
        out += it->second;
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

Corpus align_layers(const Corpus& a, const Corpus& b, const std::string& layer_a, const std::string& layer_b) {
  if (layer_a == layer_b) throw ConfigError("align_layers needs two distinct layer names");
  if (!a.empty() && !a.has_layer(layer_a)) throw LookupError("first corpus has no layer '" + layer_a + "'");
  if (!b.empty() && !b.has_layer(layer_b)) throw LookupError("second corpus has no layer '" + layer_b + "'");

  Corpus out;
  out.language = a.language;
  for (const auto& sa : a.sentences) {
    const Sentence* sb = b.find(sa.id);
    if (sb == nullptr) continue;
    if (sb->tokens.size() != sa.tokens.size())
      throw AlignmentError(sa.id, "token counts differ (" + std::to_string(sa.tokens.size()) + " vs " +
                                      std::to_string(sb->tokens.size()) + ")");
    Sentence merged{sa.id, {}};
    for (std::size_t i = 0; i < sa.tokens.size(); ++i) {
      const auto& ta = sa.tokens[i];
      const auto& tb = sb->tokens[i];
      if (ta.form != tb.form)
        throw AlignmentError(sa.id, "token " + std::to_string(i + 1) + " differs ('" + ta.form + "' vs '" +
                                        tb.form + "')");
      merged.tokens.push_back(Token{ta.form, {{layer_a, ta.tags.at(layer_a)}, {layer_b, tb.tags.at(layer_b)}}});
    }
    out.sentences.push_back(std::move(merged));
  }
  refresh_layers(out);
  return out;
}

Corpus select_indices(const Corpus& corpus, std::span<const std::size_t> indices) {
  Corpus out;
  out.language = corpus.language;
  out.sentences.reserve(indices.size());
  for (auto i : indices) out.sentences.push_back(corpus.sentences.at(i));
  refresh_layers(out);
  return out;
}

Corpus select_sentences(const Corpus& corpus, const std::set<std::string>& ids) {
  Corpus out;
  out.language = corpus.language;
  for (const auto& s : corpus.sentences)
    if (ids.count(s.id)) out.sentences.push_back(s);
  refresh_layers(out);
  return out;
}

OverlapSplit make_overlap_split(const Corpus& corpus, OverlapMode mode, double aux_fraction, std::uint64_t seed) {
  OverlapSplit split;
  split.mode = mode;
  split.seed = seed;
  if (mode == OverlapMode::full) {
    split.main = corpus;
    split.aux = corpus;
    return split;
  }
  if (!(aux_fraction > 0.0 && aux_fraction < 1.0))
    throw SizingError("aux_fraction must lie strictly between 0 and 1");
  const std::size_t n = corpus.sentences.size();
  if (n < 4) throw SizingError("overlap mode '" + to_string(mode) + "' needs at least 4 sentences, got " +
                               std::to_string(n));
  // The epsilon keeps products like 0.7 * 10 from rounding up past an integer.
  const auto aux_size = static_cast<std::size_t>(std::ceil(aux_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t shared = mode == OverlapMode::partial ? std::max<std::size_t>(1, aux_size / 2) : 0;
  if (aux_size == 0 || aux_size >= n)
    throw SizingError("aux_fraction leaves one side of the split empty");
  if (mode == OverlapMode::partial && shared >= aux_size)
    throw SizingError("partial overlap needs at least 2 auxiliary sentences");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::size_t> aux_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(aux_size));
  std::vector<std::size_t> main_idx(order.begin() + static_cast<std::ptrdiff_t>(aux_size), order.end());
  main_idx.insert(main_idx.end(), aux_idx.begin(), aux_idx.begin() + static_cast<std::ptrdiff_t>(shared));
  std::sort(aux_idx.begin(), aux_idx.end());
  std::sort(main_idx.begin(), main_idx.end());
  split.main = select_indices(corpus, main_idx);
  split.aux = select_indices(corpus, aux_idx);
  return split;
}

Corpus shuffle_labels(const Corpus& corpus, const std::string& layer, std::uint64_t seed) {
  if (!corpus.empty() && !corpus.has_layer(layer)) throw LookupError("corpus has no layer '" + layer + "'");
  Corpus out = corpus;
  Rng rng(seed);
  for (auto& s : out.sentences) {
    auto tags = s.layer(layer);
    rng.shuffle(tags);
    for (std::size_t i = 0; i < tags.size(); ++i) s.tokens[i].tags[layer] = std::move(tags[i]);
  }
  return out;
}

CorpusFormat parse_corpus_format(std::string_view text) {
  if (text == "conllu") return CorpusFormat::conllu;
  if (text == "tsv") return CorpusFormat::tsv;
  throw ConfigError("unknown corpus format '" + std::string(text) + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format, std::span<const std::string> tsv_columns,
                   std::string language) {
  const auto text = read_text_file(path);
  if (format == CorpusFormat::conllu) return parse_conllu(text, std::move(language));
  return parse_tsv(text, tsv_columns, std::move(language));
}

}  // namespace lexshare
