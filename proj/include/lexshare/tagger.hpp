#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"
#include "lexshare/neural.hpp"

namespace lexshare {

struct TaskSpec {
  std::string name;  // also the corpus layer that carries the gold tags
  std::vector<std::string> tagset;
};

struct TaggerConfig {
  std::size_t word_dim = 32;
  std::size_t char_channels = 16;
  std::size_t char_blocks = 2;
  std::size_t hidden_dim = 32;
  std::vector<TaskSpec> tasks;
  std::vector<std::string> languages;
  bool use_word = true;
  bool use_char = true;
  bool use_language_embedding = false;
  std::size_t lang_dim = 8;
  std::size_t epochs = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 1;
  AdamConfig adam;

  // Throws ConfigError on empty tagsets, duplicate task names, zero sizes or no input channel.
  void validate() const;
  const TaskSpec& task(std::string_view name) const;
  bool has_task(std::string_view name) const;
  std::size_t encoder_input_dim() const;
};

nlohmann::ordered_json to_json(const TaggerConfig& config);
// Missing fields keep their defaults.
TaggerConfig tagger_config_from_json(const nlohmann::json& j);
// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::ordered_json& j);

// Sorted distinct tags of a layer over the given corpora.
std::vector<std::string> collect_tagset(std::span<const Corpus* const> corpora, const std::string& layer);

// Shared encoder (character ResNet, optional language vectors, bidirectional GRU) under
// "char/", "lang/" and "encoder/"; one linear head per task under "head/<task>/". Word vectors
// come from a frozen pre-trained table.
class MultitaskTagger {
 public:
  static MultitaskTagger build(TaggerConfig config, std::shared_ptr<const EmbeddingTable> words, CharVocab chars);

  const TaggerConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  const CharVocab& char_vocab() const { return chars_; }
  const std::shared_ptr<const EmbeddingTable>& word_table() const { return words_; }

  std::vector<std::string> shared_paths() const;
  std::vector<std::string> head_paths(std::string_view task) const;

  // Per-token argmax of the task head; ties go to the lowest tag index.
  std::vector<std::string> predict(const Sentence& sentence, std::string_view task, std::string_view language) const;
  std::vector<std::size_t> predict_indices(const Sentence& sentence, std::string_view task,
                                           std::string_view language) const;

  // Mean token cross-entropy of the sentence under one task, gradients accumulated into
  // parameters(). When `predicted` is given it receives the forward pass's argmax tags.
  double accumulate_gradients(const Sentence& sentence, std::string_view task, std::string_view language,
                              std::span<const std::size_t> gold, std::vector<std::size_t>* predicted = nullptr);
  double loss(const Sentence& sentence, std::string_view task, std::string_view language,
              std::span<const std::size_t> gold) const;

  // Throws ConfigError for tags outside the task's tagset.
  std::vector<std::size_t> gold_indices(const Sentence& sentence, std::string_view task) const;

 private:
  struct Forward;

  MultitaskTagger(TaggerConfig config, std::shared_ptr<const EmbeddingTable> words, CharVocab chars);
  Forward forward(const Sentence& sentence, std::string_view task, std::string_view language) const;
  std::size_t task_index(std::string_view task) const;

  TaggerConfig config_;
  std::shared_ptr<const EmbeddingTable> words_;
  CharVocab chars_;
  ParameterStore params_;
};

struct TaskData {
  const Corpus* corpus = nullptr;
  std::string task;
};

struct EpochStats {
  std::size_t epoch = 0;
  double main_loss = 0.0;
  double aux_loss = 0.0;  // 0 without auxiliary data
  double main_train_accuracy = 0.0;
  double aux_train_accuracy = 0.0;
  double monitor_accuracy = 0.0;  // dev accuracy, or clean main training accuracy without dev data
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_accuracy = 0.0;
  bool stopped_early = false;
};

struct TrainOptions {
  const Corpus* dev = nullptr;
  // Without dev data, monitor the lowest clean training accuracy over all tasks instead of the
  // main task's alone.
  bool monitor_all_tasks = false;
};

// Sentence-level Adam updates over a seeded shuffle of the merged main + auxiliary update list,
// each update using only its own task's loss. Early stopping with config.patience on the main
// task's monitor accuracy; the best epoch's parameters are restored at the end. Throws
// DivergenceError (with the epoch) on a non-finite loss or gradient.
TrainHistory train(MultitaskTagger& model, const TaskData& main, std::span<const TaskData> aux,
                   const TrainOptions& options = {});

struct EvalResult {
  double accuracy = 0.0;  // percent
  std::size_t correct = 0;
  std::size_t n_tokens = 0;
};

EvalResult evaluate(const MultitaskTagger& model, const Corpus& corpus, std::string_view task,
                    std::string_view language);
EvalResult evaluate(const MultitaskTagger& model, const Corpus& corpus, std::string_view task);

// Writes the parameter container to `path` and a JSON manifest to `path` + ".json".
void save_checkpoint(const MultitaskTagger& model, const std::filesystem::path& path);
MultitaskTagger load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const EmbeddingTable> words);

}  // namespace lexshare
