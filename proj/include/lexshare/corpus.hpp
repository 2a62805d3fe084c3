#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lexshare {

struct Token {
  std::string form;
  std::map<std::string, std::string> tags;  // layer name -> tag

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  // Tags of one layer in token order. Throws LookupError if a token lacks the layer.
  std::vector<std::string> layer(const std::string& name) const;
  std::vector<std::string> forms() const;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::string language = "und";
  std::set<std::string> layers;
  std::vector<Sentence> sentences;

  bool has_layer(const std::string& name) const { return layers.count(name) != 0; }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;
  const Sentence* find(std::string_view id) const;

  bool operator==(const Corpus&) const = default;
};

// Checks the structural invariants (non-empty forms and sentences, unique ids, every token
// carrying exactly the declared layers). Throws Error describing the first violation.
void validate(const Corpus& corpus);

// Recomputes corpus.layers from the tokens.
void refresh_layers(Corpus& corpus);

enum class OverlapMode { full, partial, none };

std::string to_string(OverlapMode mode);
OverlapMode parse_overlap_mode(std::string_view text);

struct OverlapSplit {
  OverlapMode mode = OverlapMode::full;
  Corpus main;
  Corpus aux;
  std::uint64_t seed = 0;
};

// CoNLL-U: form from column 2, "upos" from column 4, "deprel" from column 8.
// Multiword ranges ("3-4") and empty nodes ("1.1") are skipped. Sentence ids come from
// "# sent_id = ..." comments, else "s<ordinal>".
Corpus parse_conllu(std::string_view text, std::string language = "und");

// One "form<TAB>tag1...<TAB>tagK" row per token, blank line between sentences.
Corpus parse_tsv(std::string_view text, std::span<const std::string> layer_names,
                 std::string language = "und");

// Writers emit exactly what the parsers read back. write_conllu fills the columns it does not
// model with "_".
std::string write_conllu(const Corpus& corpus);
std::string write_tsv(const Corpus& corpus, std::span<const std::string> layer_names);

// Shared sentence ids of a and b (in a's order), each token carrying layer_a from a and
// layer_b from b.
Corpus align_layers(const Corpus& a, const Corpus& b, const std::string& layer_a,
                    const std::string& layer_b);

OverlapSplit make_overlap_split(const Corpus& corpus, OverlapMode mode, double aux_fraction,
                                std::uint64_t seed);

// Per-sentence seeded permutation of one layer's tags. A single generator seeded with `seed`
// is consumed sentence by sentence in corpus order.
Corpus shuffle_labels(const Corpus& corpus, const std::string& layer, std::uint64_t seed);

// Sentences whose ids are in `ids`, in corpus order.
Corpus select_sentences(const Corpus& corpus, const std::set<std::string>& ids);
// Sentences at the given positions, in the given order.
Corpus select_indices(const Corpus& corpus, std::span<const std::size_t> indices);

enum class CorpusFormat { conllu, tsv };

CorpusFormat parse_corpus_format(std::string_view text);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::span<const std::string> tsv_columns, std::string language = "und");

}  // namespace lexshare
