#include "lexshare/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

const std::string kCharPrefix = "char";
const std::string kFwdPrefix = "encoder/fwd";
const std::string kBwdPrefix = "encoder/bwd";

std::string head_prefix(std::string_view task) { return "head/" + std::string(task); }
std::string lang_path(std::string_view language) { return "lang/" + std::string(language); }

std::size_t argmax(std::span<const double> xs) {
  return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

}  // namespace

// ---- config ------------------------------------------------------------------------------

void TaggerConfig::validate() const {
  if (tasks.empty()) throw ConfigError("tagger config declares no tasks");
  std::set<std::string> names;
  for (const auto& t : tasks) {
    if (t.name.empty()) throw ConfigError("task with an empty name");
    if (t.tagset.empty()) throw ConfigError("task '" + t.name + "' has an empty tagset");
    if (!names.insert(t.name).second) throw ConfigError("duplicate task '" + t.name + "'");
    if (std::set<std::string>(t.tagset.begin(), t.tagset.end()).size() != t.tagset.size())
      throw ConfigError("task '" + t.name + "' repeats a tag");
  }
  if (!use_word && !use_char) throw ConfigError("tagger needs word or character input");
  if (hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (use_word && word_dim == 0) throw ConfigError("word_dim must be positive");
  if (use_char && char_channels == 0) throw ConfigError("char_channels must be positive");
  if (use_language_embedding) {
    if (lang_dim == 0) throw ConfigError("lang_dim must be positive");
    if (languages.empty()) throw ConfigError("language embeddings need at least one language");
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

const TaskSpec& TaggerConfig::task(std::string_view name) const {
  for (const auto& t : tasks)
    if (t.name == name) return t;
  throw LookupError("unknown task '" + std::string(name) + "'");
}

bool TaggerConfig::has_task(std::string_view name) const {
  return std::any_of(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.name == name; });
}

std::size_t TaggerConfig::encoder_input_dim() const {
  return (use_word ? word_dim : 0) + (use_char ? char_channels : 0) + (use_language_embedding ? lang_dim : 0);
}

nlohmann::ordered_json to_json(const TaggerConfig& c) {
  nlohmann::ordered_json j;
  j["word_dim"] = c.word_dim;
  j["char_channels"] = c.char_channels;
  j["char_blocks"] = c.char_blocks;
  j["hidden_dim"] = c.hidden_dim;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : c.tasks) j["tasks"].push_back({{"name", t.name}, {"tagset", t.tagset}});
  j["languages"] = c.languages;
  j["use_word"] = c.use_word;
  j["use_char"] = c.use_char;
  j["use_language_embedding"] = c.use_language_embedding;
  j["lang_dim"] = c.lang_dim;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  return j;
}

TaggerConfig tagger_config_from_json(const nlohmann::json& j) {
  TaggerConfig c;
  try {
    c.word_dim = j.value("word_dim", c.word_dim);
    c.char_channels = j.value("char_channels", c.char_channels);
    c.char_blocks = j.value("char_blocks", c.char_blocks);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    if (j.contains("tasks"))
      for (const auto& t : j.at("tasks"))
        c.tasks.push_back({t.at("name").get<std::string>(), t.value("tagset", std::vector<std::string>{})});
    c.languages = j.value("languages", c.languages);
    c.use_word = j.value("use_word", c.use_word);
    c.use_char = j.value("use_char", c.use_char);
    c.use_language_embedding = j.value("use_language_embedding", c.use_language_embedding);
    c.lang_dim = j.value("lang_dim", c.lang_dim);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid tagger config: ") + e.what());
  }
  return c;
}

std::string config_hash(const nlohmann::ordered_json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::vector<std::string> collect_tagset(std::span<const Corpus* const> corpora, const std::string& layer) {
  std::set<std::string> tags;
  for (const auto* c : corpora)
    for (const auto& s : c->sentences)
      for (const auto& tag : s.layer(layer)) tags.insert(tag);
  return {tags.begin(), tags.end()};
}

// ---- model -------------------------------------------------------------------------------

struct MultitaskTagger::Forward {
  std::vector<Vector> inputs;
  std::vector<CharResnetTrace> chars;
  BiGruTrace encoder;
  std::vector<Vector> logits;
};

MultitaskTagger::MultitaskTagger(TaggerConfig config, std::shared_ptr<const EmbeddingTable> words, CharVocab chars)
    : config_(std::move(config)), words_(std::move(words)), chars_(std::move(chars)), params_(config_.seed) {}

MultitaskTagger MultitaskTagger::build(TaggerConfig config, std::shared_ptr<const EmbeddingTable> words,
                                       CharVocab chars) {
  config.validate();
  if (config.use_word) {
    if (!words) throw ConfigError("word input enabled but no embedding table given");
    if (words->dim != config.word_dim)
      throw ConfigError("embedding table has " + std::to_string(words->dim) + " dimensions, config expects " +
                        std::to_string(config.word_dim));
  }
  MultitaskTagger model(std::move(config), std::move(words), std::move(chars));
  const auto& c = model.config_;
  Rng rng(c.seed);
  auto& store = model.params_;
  if (c.use_char) declare_char_resnet(store, kCharPrefix, model.chars_.size(), c.char_channels, c.char_blocks, rng);
  if (c.use_language_embedding) {
    const auto table = LanguageEmbeddingTable::make(c.languages, c.lang_dim, mix_seed(c.seed, "lang"));
    for (const auto& [language, v] : table.vectors) store.add(lang_path(language), {c.lang_dim}).values = v;
  }
  declare_gru(store, kFwdPrefix, c.encoder_input_dim(), c.hidden_dim, rng);
  declare_gru(store, kBwdPrefix, c.encoder_input_dim(), c.hidden_dim, rng);
  for (const auto& task : c.tasks) declare_linear(store, head_prefix(task.name), 2 * c.hidden_dim, task.tagset.size(), rng);
  return model;
}

std::vector<std::string> MultitaskTagger::shared_paths() const {
  std::vector<std::string> out;
  for (const auto& path : params_.paths())
    if (path.rfind("head/", 0) != 0) out.push_back(path);
  return out;
}

std::vector<std::string> MultitaskTagger::head_paths(std::string_view task) const {
  config_.task(task);
  const std::string prefix = head_prefix(task) + "/";
  std::vector<std::string> out;
  for (const auto& path : params_.paths())
    if (path.rfind(prefix, 0) == 0) out.push_back(path);
  return out;
}

std::size_t MultitaskTagger::task_index(std::string_view task) const {
  for (std::size_t i = 0; i < config_.tasks.size(); ++i)
    if (config_.tasks[i].name == task) return i;
  throw LookupError("unknown task '" + std::string(task) + "'");
}

std::vector<std::size_t> MultitaskTagger::gold_indices(const Sentence& sentence, std::string_view task) const {
  const auto& spec = config_.tasks[task_index(task)];
  std::vector<std::size_t> out;
  out.reserve(sentence.size());
  for (const auto& tag : sentence.layer(spec.name)) {
    const auto it = std::find(spec.tagset.begin(), spec.tagset.end(), tag);
    if (it == spec.tagset.end())
      throw ConfigError("tag '" + tag + "' in sentence '" + sentence.id + "' is not in the tagset of task '" +
                        spec.name + "'");
    out.push_back(static_cast<std::size_t>(it - spec.tagset.begin()));
  }
  return out;
}

MultitaskTagger::Forward MultitaskTagger::forward(const Sentence& sentence, std::string_view task,
                                                  std::string_view language) const {
  if (sentence.tokens.empty()) throw ArityError("cannot tag an empty sentence");
  const std::string head = head_prefix(config_.tasks[task_index(task)].name);
  const Tensor* lang = nullptr;
  if (config_.use_language_embedding) {
    const auto path = lang_path(language);
    if (!params_.contains(path)) throw LookupError("unknown language '" + std::string(language) + "'");
    lang = &params_.get(path);
  }
  Forward f;
  f.inputs.reserve(sentence.size());
  ConstCharResnetParams char_params;
  if (config_.use_char) char_params = bind_char_resnet(params_, kCharPrefix);
  for (const auto& token : sentence.tokens) {
    Vector x;
    x.reserve(config_.encoder_input_dim());
    if (config_.use_word) {
      const auto w = lookup(*words_, language, token.form);
      x.insert(x.end(), w.begin(), w.end());
    }
    if (config_.use_char) {
      f.chars.push_back(char_resnet_forward(chars_.encode(token.form), char_params));
      const auto& c = f.chars.back().output;
      x.insert(x.end(), c.begin(), c.end());
    }
    if (lang) x.insert(x.end(), lang->values.begin(), lang->values.end());
    f.inputs.push_back(std::move(x));
  }
  f.encoder = bidirectional_forward(f.inputs, bind_gru(params_, kFwdPrefix), bind_gru(params_, kBwdPrefix));
  const auto head_params = bind_linear(params_, head);
  f.logits.reserve(sentence.size());
  for (const auto& h : f.encoder.outputs) f.logits.push_back(linear(h, head_params));
  return f;
}

std::vector<std::size_t> MultitaskTagger::predict_indices(const Sentence& sentence, std::string_view task,
                                                          std::string_view language) const {
  const auto f = forward(sentence, task, language);
  std::vector<std::size_t> out;
  out.reserve(f.logits.size());
  for (const auto& l : f.logits) out.push_back(argmax(l));
  return out;
}

std::vector<std::string> MultitaskTagger::predict(const Sentence& sentence, std::string_view task,
                                                  std::string_view language) const {
  const auto& tagset = config_.task(task).tagset;
  std::vector<std::string> out;
  for (auto i : predict_indices(sentence, task, language)) out.push_back(tagset[i]);
  return out;
}

double MultitaskTagger::loss(const Sentence& sentence, std::string_view task, std::string_view language,
                             std::span<const std::size_t> gold) const {
  if (gold.size() != sentence.size()) throw ArityError("gold tag count differs from sentence length");
  const auto f = forward(sentence, task, language);
  double total = 0.0;
  for (std::size_t i = 0; i < f.logits.size(); ++i) total += softmax_xent(f.logits[i], gold[i]).loss;
  return total / static_cast<double>(gold.size());
}

double MultitaskTagger::accumulate_gradients(const Sentence& sentence, std::string_view task,
                                             std::string_view language, std::span<const std::size_t> gold,
                                             std::vector<std::size_t>* predicted) {
  if (gold.size() != sentence.size()) throw ArityError("gold tag count differs from sentence length");
  const auto f = forward(sentence, task, language);
  const std::size_t n = f.logits.size();
  const double scale = 1.0 / static_cast<double>(n);
  auto head = bind_linear(params_, head_prefix(config_.tasks[task_index(task)].name));

  double total = 0.0;
  std::vector<Vector> d_outputs(n, Vector(2 * config_.hidden_dim, 0.0));
  if (predicted) predicted->clear();
  for (std::size_t i = 0; i < n; ++i) {
    auto xent = softmax_xent(f.logits[i], gold[i]);
    total += xent.loss;
    if (predicted) predicted->push_back(argmax(f.logits[i]));
    for (auto& g : xent.grad) g *= scale;
    linear_backward(f.encoder.outputs[i], xent.grad, head, d_outputs[i]);
  }
  const auto d_inputs =
      bidirectional_backward(f.encoder, d_outputs, bind_gru(params_, kFwdPrefix), bind_gru(params_, kBwdPrefix));

  std::size_t offset = config_.use_word ? config_.word_dim : 0;
  if (config_.use_char) {
    auto char_params = bind_char_resnet(params_, kCharPrefix);
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> d(d_inputs[i].data() + offset, config_.char_channels);
      char_resnet_backward(f.chars[i], d, char_params);
    }
    offset += config_.char_channels;
  }
  if (config_.use_language_embedding) {
    auto& lang = params_.get(lang_path(language));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < config_.lang_dim; ++k) lang.grad[k] += d_inputs[i][offset + k];
  }
  return total * scale;
}

// ---- training ----------------------------------------------------------------------------

namespace {

struct PreparedSet {
  const Corpus* corpus;
  std::string task;
  std::vector<std::vector<std::size_t>> gold;
};

void check_language(const TaggerConfig& config, const Corpus& corpus) {
  if (config.languages.empty()) return;
  if (std::find(config.languages.begin(), config.languages.end(), corpus.language) == config.languages.end())
    throw ConfigError("corpus language '" + corpus.language + "' is not covered by the tagger config");
}

}  // namespace

TrainHistory train(MultitaskTagger& model, const TaskData& main, std::span<const TaskData> aux,
                   const TrainOptions& options) {
  const auto& config = model.config();
  std::vector<PreparedSet> sets;
  auto prepare = [&](const TaskData& data) {
    if (data.corpus == nullptr) throw ConfigError("training data without a corpus");
    if (!config.has_task(data.task)) throw ConfigError("no head for task '" + data.task + "'");
    check_language(config, *data.corpus);
    PreparedSet set{data.corpus, data.task, {}};
    for (const auto& s : data.corpus->sentences) set.gold.push_back(model.gold_indices(s, data.task));
    sets.push_back(std::move(set));
  };
  prepare(main);
  for (const auto& a : aux) prepare(a);
  if (main.corpus->empty()) throw ConfigError("main training corpus is empty");
  if (options.dev) check_language(config, *options.dev);

  std::vector<std::pair<std::size_t, std::size_t>> schedule;
  for (std::size_t k = 0; k < sets.size(); ++k)
    for (std::size_t i = 0; i < sets[k].gold.size(); ++i) schedule.emplace_back(k, i);

  Rng rng(mix_seed(config.seed, "schedule"));
  AdamState adam;
  TrainHistory history;
  ParameterStore best = model.parameters();
  bool have_best = false;
  std::vector<std::size_t> predicted;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(schedule);
    double loss_sum[2] = {0.0, 0.0};
    std::size_t sentences[2] = {0, 0}, correct[2] = {0, 0}, tokens[2] = {0, 0};
    for (const auto& [k, i] : schedule) {
      const auto& set = sets[k];
      const auto& sentence = set.corpus->sentences[i];
      model.parameters().zero_grad();
      const double loss =
          model.accumulate_gradients(sentence, set.task, set.corpus->language, set.gold[i], &predicted);
      if (!std::isfinite(loss))
        throw DivergenceError("", epoch, "non-finite loss in epoch " + std::to_string(epoch));
      try {
        adam_step(model.parameters(), adam, config.adam);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.path(), epoch, std::string(e.what()) + " in epoch " + std::to_string(epoch));
      }
      const int side = k == 0 ? 0 : 1;
      loss_sum[side] += loss;
      ++sentences[side];
      tokens[side] += predicted.size();
      for (std::size_t t = 0; t < predicted.size(); ++t) correct[side] += predicted[t] == set.gold[i][t];
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.main_loss = loss_sum[0] / static_cast<double>(std::max<std::size_t>(1, sentences[0]));
    stats.aux_loss = sentences[1] ? loss_sum[1] / static_cast<double>(sentences[1]) : 0.0;
    stats.main_train_accuracy = 100.0 * static_cast<double>(correct[0]) / static_cast<double>(std::max<std::size_t>(1, tokens[0]));
    stats.aux_train_accuracy =
        tokens[1] ? 100.0 * static_cast<double>(correct[1]) / static_cast<double>(tokens[1]) : 0.0;
    const Corpus& monitor = options.dev && !options.dev->empty() ? *options.dev : *main.corpus;
    stats.monitor_accuracy = evaluate(model, monitor, main.task).accuracy;
    if (options.monitor_all_tasks && &monitor == main.corpus)
      for (const auto& a : aux)
        if (!a.corpus->empty())
          stats.monitor_accuracy = std::min(stats.monitor_accuracy, evaluate(model, *a.corpus, a.task).accuracy);
    history.epochs.push_back(stats);

    if (!have_best || stats.monitor_accuracy > history.best_accuracy) {
      have_best = true;
      history.best_accuracy = stats.monitor_accuracy;
      history.best_epoch = epoch;
      best = model.parameters();
    }
    // Nothing can beat a perfect monitor score, so later epochs could not change the result.
    if (history.best_accuracy >= 100.0 || epoch - history.best_epoch >= config.patience) {
      history.stopped_early = epoch < config.epochs;
      break;
    }
  }
  model.parameters() = std::move(best);
  model.parameters().zero_grad();
  return history;
}

EvalResult evaluate(const MultitaskTagger& model, const Corpus& corpus, std::string_view task,
                    std::string_view language) {
  EvalResult result;
  for (const auto& s : corpus.sentences) {
    const auto gold = s.layer(model.config().task(task).name);
    const auto predicted = model.predict(s, task, language);
    for (std::size_t i = 0; i < gold.size(); ++i) result.correct += gold[i] == predicted[i];
    result.n_tokens += gold.size();
  }
  if (result.n_tokens == 0) throw UndefinedError("accuracy over an empty corpus is undefined");
  result.accuracy = 100.0 * static_cast<double>(result.correct) / static_cast<double>(result.n_tokens);
  return result;
}

EvalResult evaluate(const MultitaskTagger& model, const Corpus& corpus, std::string_view task) {
  return evaluate(model, corpus, task, corpus.language);
}

// ---- checkpoints -------------------------------------------------------------------------

void save_checkpoint(const MultitaskTagger& model, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_parameters(out, model.parameters());
  }
  nlohmann::ordered_json manifest;
  const auto config = to_json(model.config());
  manifest["format"] = "lexshare-checkpoint";
  manifest["version"] = 1;
  manifest["seed"] = model.config().seed;
  manifest["config_hash"] = config_hash(config);
  manifest["parameters"] = path.filename().string();
  manifest["config"] = config;
  std::vector<std::uint32_t> chars;
  for (char32_t c : model.char_vocab().chars()) chars.push_back(static_cast<std::uint32_t>(c));
  manifest["char_vocab"] = chars;
  write_text_file(path.string() + ".json", manifest.dump(2) + "\n");
}

MultitaskTagger load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const EmbeddingTable> words) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(path.string() + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid checkpoint manifest: ") + e.what());
  }
  auto config = tagger_config_from_json(manifest.at("config"));
  if (config_hash(to_json(config)) != manifest.value("config_hash", ""))
    throw ConfigError("checkpoint manifest config hash does not match its config");
  std::vector<char32_t> chars;
  for (auto c : manifest.at("char_vocab").get<std::vector<std::uint32_t>>()) chars.push_back(static_cast<char32_t>(c));
  auto model = MultitaskTagger::build(std::move(config), std::move(words), CharVocab(std::move(chars)));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  auto stored = read_parameters(in);
  if (stored.paths() != model.parameters().paths()) throw ConfigError("checkpoint parameters do not match the config");
  for (auto& [p, t] : stored)
    if (t.shape != model.parameters().get(p).shape) throw ConfigError("checkpoint shape mismatch at '" + p + "'");
  model.parameters() = std::move(stored);
  return model;
}

}  // namespace lexshare
