#include "lexshare/pipeline.hpp"

#include <map>

#include "lexshare/error.hpp"
#include "lexshare/tagger.hpp"

namespace lexshare {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const std::string& path, const fs::path& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

template <class T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": bad \"" + key + "\": " + e.what());
  }
}

template <class T>
T optional(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return required<T>(j, key, where);
}

// Loads each distinct corpus and embedding spec once, so cells that share data share pointers.
class Loader {
 public:
  explicit Loader(fs::path base_dir) : base_dir_(std::move(base_dir)) {}

  std::shared_ptr<const Corpus> corpus(const nlohmann::json& spec) {
    auto& slot = corpora_[spec.dump()];
    if (!slot) slot = std::make_shared<const Corpus>(load_corpus_spec(spec, base_dir_));
    return slot;
  }

  std::shared_ptr<const EmbeddingTable> embeddings(const nlohmann::json& spec) {
    auto& slot = tables_[spec.dump()];
    if (!slot) slot = load_embeddings_spec(spec, base_dir_);
    return slot;
  }

 private:
  fs::path base_dir_;
  std::map<std::string, std::shared_ptr<const Corpus>> corpora_;
  std::map<std::string, std::shared_ptr<const EmbeddingTable>> tables_;
};

TaggerConfig tagger_from(const nlohmann::json& config, const EmbeddingTable* table) {
  const nlohmann::json j = config.value("tagger", nlohmann::json::object());
  TaggerConfig tagger = tagger_config_from_json(j);
  if (!j.contains("word_dim") && table) tagger.word_dim = table->dim;
  return tagger;
}

ReportMeta meta_from(const nlohmann::json& config, const std::vector<std::uint64_t>& seeds) {
  ReportMeta meta;
  meta.config_hash = config_hash(nlohmann::ordered_json::parse(config.dump()));
  meta.seeds = seeds;
  return meta;
}

}  // namespace

nlohmann::json read_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Corpus load_corpus_spec(const nlohmann::json& spec, const fs::path& base_dir) {
  nlohmann::json s = spec.is_string() ? nlohmann::json{{"path", spec}} : spec;
  const auto path = resolve(required<std::string>(s, "path", "corpus"), base_dir);
  if (!fs::exists(path)) throw ConfigError("corpus file '" + path.string() + "' does not exist");
  const std::string default_format = path.extension() == ".conllu" ? "conllu" : "tsv";
  const auto format = parse_corpus_format(optional<std::string>(s, "format", default_format, "corpus"));
  const auto columns = optional<std::vector<std::string>>(s, "columns", {}, "corpus");
  if (format == CorpusFormat::tsv && columns.empty())
    throw ConfigError("corpus '" + path.string() + "': tsv corpora need \"columns\"");
  return read_corpus(path, format, columns, optional<std::string>(s, "language", "und", "corpus"));
}

std::shared_ptr<const EmbeddingTable> load_embeddings_spec(const nlohmann::json& spec, const fs::path& base_dir) {
  auto load = [&](const std::string& path) {
    const auto p = resolve(path, base_dir);
    if (!fs::exists(p)) throw ConfigError("embedding file '" + p.string() + "' does not exist");
    return load_text_embeddings(read_text_file(p));
  };
  if (spec.is_string()) return std::make_shared<const EmbeddingTable>(load(spec.get<std::string>()));
  if (!spec.is_object() || spec.empty())
    throw ConfigError("embeddings must be a path or an object mapping languages to paths");
  std::vector<std::pair<std::string, EmbeddingTable>> tables;
  for (const auto& [language, path] : spec.items()) {
    if (!path.is_string()) throw ConfigError("embeddings for '" + language + "' must be a path");
    tables.emplace_back(language, load(path.get<std::string>()));
  }
  return std::make_shared<const EmbeddingTable>(merge_multilingual(tables));
}

std::string emit_transfer_tsv(const std::vector<TransferPoint>& points) {
  std::string out = "source_lang\ttarget_lang\tn_target_samples\tmetric\n";
  for (const auto& p : points)
    out += p.source_lang + '\t' + p.target_lang + '\t' + std::to_string(p.n_target_samples) + '\t' +
           format_number(p.metric) + '\n';
  return out;
}

std::string emit_holdout_tsv(const HoldoutReport& r) {
  return "language\ttask\theldout_accuracy\tskyline_accuracy\tmajority_baseline\tn_test_tokens\n" + r.language +
         '\t' + r.task + '\t' + format_number(r.heldout_accuracy) + '\t' + format_number(r.skyline_accuracy) + '\t' +
         format_number(r.majority_baseline) + '\t' + std::to_string(r.n_test_tokens) + '\n';
}

ExperimentOutcome run_experiment(const nlohmann::json& config, const fs::path& base_dir, ReportFormat format) {
  if (!config.is_object()) throw ConfigError("experiment config must be a JSON object");
  const auto protocol = required<std::string>(config, "protocol", "experiment");
  const auto seeds = required<std::vector<std::uint64_t>>(config, "seeds", "experiment");
  if (seeds.empty()) throw ConfigError("experiment: \"seeds\" is empty");
  const auto workers = optional<std::size_t>(config, "workers", 1, "experiment");
  Loader loader(base_dir);
  Report report;
  report.meta = meta_from(config, seeds);
  ExperimentOutcome outcome;

  if (protocol == "effectivity") {
    EffectivityOptions options;
    options.seeds = seeds;
    options.workers = workers;
    options.aux_fraction = optional<double>(config, "aux_fraction", options.aux_fraction, protocol);
    options.test_fraction = optional<double>(config, "test_fraction", options.test_fraction, protocol);
    options.dev_fraction = optional<double>(config, "dev_fraction", options.dev_fraction, protocol);
    options.permutation.permutations =
        optional<std::uint64_t>(config, "permutations", options.permutation.permutations, protocol);
    options.permutation.seed = optional<std::uint64_t>(config, "permutation_seed", options.permutation.seed, protocol);
    if (config.contains("modes")) {
      options.modes.clear();
      for (const auto& m : required<std::vector<std::string>>(config, "modes", protocol)) {
        try {
          options.modes.push_back(parse_overlap_mode(m));
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
    }
    std::vector<GridCell> grid;
    const auto cells = required<nlohmann::json>(config, "grid", protocol);
    if (!cells.is_array() || cells.empty()) throw ConfigError("effectivity: \"grid\" must be a non-empty array");
    for (const auto& c : cells) {
      GridCell cell;
      cell.name = required<std::string>(c, "name", "grid cell");
      cell.corpus = loader.corpus(required<nlohmann::json>(c, "corpus", cell.name));
      cell.main_layer = required<std::string>(c, "main_layer", cell.name);
      cell.aux_layer = required<std::string>(c, "aux_layer", cell.name);
      if (c.contains("embeddings")) cell.embeddings = loader.embeddings(c.at("embeddings"));
      grid.push_back(std::move(cell));
    }
    options.tagger = tagger_from(config, grid.front().embeddings.get());
    const auto result = run_mtl_effectivity(grid, options);
    report.records = result.records;
    auto& summary = report.extra["summary"] = nlohmann::ordered_json::array();
    for (const auto& s : result.summary) summary.push_back(to_json(s));
    auto& outcomes = report.extra["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : result.cells) outcomes.push_back(to_json(c));
    outcome.failed_cells = result.failed();
    outcome.report = emit_report(report, format);
  } else if (protocol == "transfer") {
    TransferOptions options;
    options.seeds = seeds;
    options.workers = workers;
    options.task = required<std::string>(config, "task", protocol);
    options.sample_counts = required<std::vector<std::size_t>>(config, "sample_counts", protocol);
    options.test_fraction = optional<double>(config, "test_fraction", options.test_fraction, protocol);
    std::vector<Corpus> sources;
    for (const auto& s : required<std::vector<nlohmann::json>>(config, "sources", protocol))
      sources.push_back(*loader.corpus(s));
    const auto target = loader.corpus(required<nlohmann::json>(config, "target", protocol));
    std::shared_ptr<const EmbeddingTable> table;
    if (config.contains("embeddings")) table = loader.embeddings(config.at("embeddings"));
    options.tagger = tagger_from(config, table.get());
    const auto result = run_transfer_curve(sources, *target, table, options);
    outcome.warnings = result.warnings;
    auto& points = report.extra["transfer"] = nlohmann::ordered_json::array();
    for (const auto& p : result.points) points.push_back(to_json(p));
    report.extra["warnings"] = result.warnings;
    outcome.report = format == ReportFormat::tsv ? emit_transfer_tsv(result.points) : emit_report(report, format);
  } else if (protocol == "holdout") {
    HoldoutOptions options;
    options.seeds = seeds;
    options.workers = workers;
    std::vector<TaskLanguagePair> pairs;
    for (const auto& p : required<std::vector<nlohmann::json>>(config, "pairs", protocol))
      pairs.push_back({required<std::string>(p, "language", "pair"), required<std::string>(p, "task", "pair"),
                       *loader.corpus(required<nlohmann::json>(p, "corpus", "pair"))});
    const auto h = required<nlohmann::json>(config, "held_out", protocol);
    HoldoutTarget target{required<std::string>(h, "language", "held_out"), required<std::string>(h, "task", "held_out"),
                         *loader.corpus(required<nlohmann::json>(h, "test", "held_out")),
                         *loader.corpus(required<nlohmann::json>(h, "skyline_train", "held_out"))};
    std::shared_ptr<const EmbeddingTable> table;
    if (config.contains("embeddings")) table = loader.embeddings(config.at("embeddings"));
    options.tagger = tagger_from(config, table.get());
    const auto result = run_joint_holdout(pairs, target, table, options);
    report.extra["holdout"] = to_json(result);
    outcome.report = format == ReportFormat::tsv ? emit_holdout_tsv(result) : emit_report(report, format);
  } else {
    throw ConfigError("unknown protocol '" + protocol + "' (expected effectivity, transfer or holdout)");
  }
  return outcome;
}

}  // namespace lexshare
