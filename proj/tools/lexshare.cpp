// Command-line front end: corpus statistics, tagger training and evaluation, the TnT baseline,
// experiment protocols and synthetic fixture generation.

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"
#include "lexshare/error.hpp"
#include "lexshare/experiment.hpp"
#include "lexshare/fixtures.hpp"
#include "lexshare/pipeline.hpp"
#include "lexshare/tagger.hpp"
#include "lexshare/tagstats.hpp"
#include "lexshare/tnt.hpp"

namespace {

using namespace lexshare;
using json = nlohmann::ordered_json;

constexpr int kConfigExit = 2;
constexpr int kFailedCellExit = 3;

struct CorpusArgs {
  std::string format;
  std::vector<std::string> columns;
  std::string language = "und";

  void attach(CLI::App* app) {
    app->add_option("--format", format, "conllu or tsv (default: by file extension)");
    app->add_option("--columns", columns, "tag layer names of a tsv corpus")->delimiter(',');
    app->add_option("--lang", language, "language code of the corpora");
  }

  Corpus load(const std::string& path) const {
    json spec{{"path", path}, {"language", language}};
    if (!format.empty()) spec["format"] = format;
    if (!columns.empty()) spec["columns"] = columns;
    return load_corpus_spec(nlohmann::json::parse(spec.dump()), ".");
  }
};

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::shared_ptr<const EmbeddingTable> maybe_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  return load_embeddings_spec(path, ".");
}

int cmd_stats(const std::string& path, const CorpusArgs& corpus_args, const std::vector<std::string>& layers,
              std::optional<std::uint64_t> shuffle_seed) {
  Corpus corpus = corpus_args.load(path);
  if (layers.size() != 2) throw ConfigError("--layers takes two layer names A,B");
  for (const auto& l : layers)
    if (!corpus.has_layer(l)) throw ConfigError("corpus has no layer '" + l + "'");
  if (shuffle_seed) corpus = shuffle_labels(corpus, layers[1], *shuffle_seed);
  const auto j = joint_distribution(corpus, layers[0], layers[1]);
  const double h_a = entropy(j.marginal_a), h_b = entropy(j.marginal_b), mi = mutual_information(j);
  const double h_a_given_b = conditional_entropy(j.transposed()), h_b_given_a = conditional_entropy(j);

  // One TSV record, then the same fields as JSON.
  std::cout << format_number(h_a) << '\t' << format_number(h_b) << '\t' << format_number(mi) << '\t'
            << format_number(h_a_given_b) << '\t' << format_number(h_b_given_a) << '\n';
  json out;
  out["H_a"] = h_a;
  out["H_b"] = h_b;
  out["I"] = mi;
  out["H_a_given_b"] = h_a_given_b;
  out["H_b_given_a"] = h_b_given_a;
  out["layers"] = layers;
  out["tokens"] = j.total;
  if (shuffle_seed) out["shuffle_seed"] = *shuffle_seed;
  std::cout << out.dump() << "\n";
  return 0;
}

struct TrainArgs {
  std::string main, main_layer, dev, embeddings, config, checkpoint;
  std::vector<std::string> aux, aux_layers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

int cmd_train(const TrainArgs& a, const CorpusArgs& corpus_args) {
  if (a.aux.size() != a.aux_layers.size()) throw ConfigError("give one --aux-layer per --aux corpus");
  const Corpus main = corpus_args.load(a.main);
  std::vector<Corpus> aux;
  for (const auto& p : a.aux) aux.push_back(corpus_args.load(p));
  std::optional<Corpus> dev;
  if (!a.dev.empty()) dev = corpus_args.load(a.dev);

  const auto table = maybe_embeddings(a.embeddings);
  nlohmann::json config_json = a.config.empty() ? nlohmann::json::object() : read_json_file(a.config);
  TaggerConfig config = tagger_config_from_json(config_json);
  if (table && !config_json.contains("word_dim")) config.word_dim = table->dim;
  if (!table) config.use_word = false;
  if (a.seed) config.seed = *a.seed;
  if (a.epochs) config.epochs = *a.epochs;
  config.languages = {main.language};

  std::vector<const Corpus*> all{&main};
  for (const auto& c : aux) all.push_back(&c);
  if (dev) all.push_back(&*dev);
  auto with_layer = [&](const std::string& layer) {
    std::vector<const Corpus*> out;
    for (const auto* c : all)
      if (c->has_layer(layer)) out.push_back(c);
    return out;
  };
  config.tasks = {{a.main_layer, collect_tagset(with_layer(a.main_layer), a.main_layer)}};
  for (const auto& layer : a.aux_layers)
    if (!config.has_task(layer)) config.tasks.push_back({layer, collect_tagset(with_layer(layer), layer)});

  std::vector<const Corpus*> train_corpora{&main};
  for (const auto& c : aux) train_corpora.push_back(&c);
  auto model = MultitaskTagger::build(config, table, CharVocab::from_corpora(train_corpora));
  std::vector<TaskData> aux_data;
  for (std::size_t i = 0; i < aux.size(); ++i) aux_data.push_back({&aux[i], a.aux_layers[i]});
  TrainOptions options;
  if (dev) options.dev = &*dev;
  const auto history = train(model, {&main, a.main_layer}, aux_data, options);
  save_checkpoint(model, a.checkpoint);

  json out;
  out["checkpoint"] = a.checkpoint;
  out["epochs_run"] = history.epochs.size();
  out["best_epoch"] = history.best_epoch;
  out["best_monitor_accuracy"] = history.best_accuracy;
  out["stopped_early"] = history.stopped_early;
  out["config_hash"] = config_hash(to_json(model.config()));
  print(out);
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& embeddings, const std::string& path,
             const std::string& task, std::string language, const CorpusArgs& corpus_args) {
  const auto model = load_checkpoint(checkpoint, maybe_embeddings(embeddings));
  Corpus corpus = corpus_args.load(path);
  if (language.empty()) {
    const auto& langs = model.config().languages;
    language = langs.size() == 1 ? langs.front() : corpus.language;
  }
  if (!model.config().has_task(task)) throw ConfigError("checkpoint has no task '" + task + "'");
  const auto result = evaluate(model, corpus, task, language);
  print(json{{"task", task},
             {"language", language},
             {"accuracy", result.accuracy},
             {"correct", result.correct},
             {"n_tokens", result.n_tokens}});
  return 0;
}

int cmd_baseline(const std::string& train_path, const std::string& test_path, const std::string& layer,
                 const CorpusArgs& corpus_args) {
  const Corpus train_corpus = corpus_args.load(train_path);
  const Corpus test = corpus_args.load(test_path);
  if (!train_corpus.has_layer(layer) || !test.has_layer(layer))
    throw ConfigError("layer '" + layer + "' missing from the training or test corpus");
  const auto model = tnt_train(train_corpus, layer);
  std::size_t correct = 0, tokens = 0, unknown = 0, unknown_correct = 0;
  for (const auto& s : test.sentences) {
    const auto predicted = tnt_predict(model, s);
    const auto gold = s.layer(layer);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool ok = predicted[i] == gold[i];
      correct += ok;
      ++tokens;
      if (!model.known(s.tokens[i].form)) {
        ++unknown;
        unknown_correct += ok;
      }
    }
  }
  if (tokens == 0) throw ConfigError("test corpus is empty");
  json out{{"layer", layer},
           {"accuracy", 100.0 * static_cast<double>(correct) / static_cast<double>(tokens)},
           {"n_tokens", tokens},
           {"unknown_tokens", unknown}};
  if (unknown > 0) out["unknown_accuracy"] = 100.0 * static_cast<double>(unknown_correct) / static_cast<double>(unknown);
  out["lambdas"] = model.lambdas;
  print(out);
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path, const std::string& format) {
  const auto config = read_json_file(config_path);
  const auto outcome = run_experiment(config, std::filesystem::path(config_path).parent_path(),
                                      parse_report_format(format));
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  if (out_path.empty())
    std::cout << outcome.report;
  else
    write_text_file(out_path, outcome.report);
  if (outcome.failed_cells > 0) {
    std::cerr << outcome.failed_cells << " grid cell(s) failed\n";
    return kFailedCellExit;
  }
  return 0;
}

int cmd_synth(const std::string& protocol, const std::string& dir, std::uint64_t seed,
              const std::vector<std::uint64_t>& run_seeds, std::size_t workers) {
  FixtureOptions options;
  options.seed = seed;
  if (!run_seeds.empty()) options.run_seeds = run_seeds;
  options.workers = workers;
  write_bundle(fixture_by_name(protocol, options), dir);
  std::cout << (std::filesystem::path(dir) / "experiment.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexshare: multitask sequence labelling toolkit"};
  app.require_subcommand(1);
  CorpusArgs corpus_args;

  auto* stats = app.add_subcommand("stats", "entropy and mutual information of tag layers");
  std::string stats_corpus;
  std::vector<std::string> stats_layers;
  std::optional<std::uint64_t> shuffle_seed;
  stats->add_option("--corpus", stats_corpus)->required();
  stats->add_option("--layers", stats_layers, "two layers A,B")->delimiter(',')->required();
  stats->add_option("--shuffle-seed", shuffle_seed, "shuffle layer B within each sentence first");
  corpus_args.attach(stats);

  auto* train_cmd = app.add_subcommand("train", "train a (multitask) tagger");
  TrainArgs t;
  train_cmd->add_option("--main", t.main)->required();
  train_cmd->add_option("--main-layer", t.main_layer)->required();
  train_cmd->add_option("--aux", t.aux, "auxiliary corpus (repeatable)");
  train_cmd->add_option("--aux-layer", t.aux_layers, "layer of the matching --aux corpus");
  train_cmd->add_option("--dev", t.dev);
  train_cmd->add_option("--embeddings", t.embeddings, "text embedding file (omit for character input only)");
  train_cmd->add_option("--config", t.config, "tagger config JSON");
  train_cmd->add_option("--seed", t.seed);
  train_cmd->add_option("--epochs", t.epochs);
  train_cmd->add_option("--checkpoint", t.checkpoint)->required();
  corpus_args.attach(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "accuracy of a checkpoint on a corpus");
  std::string eval_checkpoint, eval_embeddings, eval_corpus, eval_task, eval_lang;
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required();
  eval_cmd->add_option("--embeddings", eval_embeddings);
  eval_cmd->add_option("--corpus", eval_corpus)->required();
  eval_cmd->add_option("--task", eval_task)->required();
  eval_cmd->add_option("--as-lang", eval_lang, "language identity used by the tagger");
  corpus_args.attach(eval_cmd);

  auto* base = app.add_subcommand("baseline", "train and evaluate the TnT baseline");
  std::string base_train, base_test, base_layer;
  base->add_option("--train", base_train)->required();
  base->add_option("--test", base_test)->required();
  base->add_option("--layer", base_layer)->required();
  corpus_args.attach(base);

  auto* exp = app.add_subcommand("experiment", "run an experiment config");
  std::string exp_config, exp_out, exp_format = "json";
  exp->add_option("--config", exp_config)->required();
  exp->add_option("--out", exp_out, "report path (default: stdout)");
  exp->add_option("--report-format", exp_format, "json or tsv");

  auto* synth = app.add_subcommand("synth", "write a synthetic fixture and its experiment config");
  std::string synth_protocol, synth_dir;
  std::uint64_t synth_seed = 100;
  std::vector<std::uint64_t> synth_run_seeds;
  std::size_t synth_workers = 1;
  synth->add_option("--protocol", synth_protocol, "effectivity, transfer or holdout")->required();
  synth->add_option("--out-dir", synth_dir)->required();
  synth->add_option("--seed", synth_seed, "fixture generation seed");
  synth->add_option("--run-seeds", synth_run_seeds, "training seeds written into the config")->delimiter(',');
  synth->add_option("--workers", synth_workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigExit;
  }

  try {
    if (*stats) return cmd_stats(stats_corpus, corpus_args, stats_layers, shuffle_seed);
    if (*train_cmd) return cmd_train(t, corpus_args);
    if (*eval_cmd) return cmd_eval(eval_checkpoint, eval_embeddings, eval_corpus, eval_task, eval_lang, corpus_args);
    if (*base) return cmd_baseline(base_train, base_test, base_layer, corpus_args);
    if (*exp) return cmd_experiment(exp_config, exp_out, exp_format);
    if (*synth) return cmd_synth(synth_protocol, synth_dir, synth_seed, synth_run_seeds, synth_workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
