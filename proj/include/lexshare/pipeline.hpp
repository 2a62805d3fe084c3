#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"
#include "lexshare/experiment.hpp"

namespace lexshare {

// Parses a JSON file; syntax errors become ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);

// {"path": ..., "format": "conllu" | "tsv", "columns": [...], "language": ...}. Relative paths
// resolve against base_dir. The format defaults to conllu for *.conllu files and tsv otherwise.
Corpus load_corpus_spec(const nlohmann::json& spec, const std::filesystem::path& base_dir);

// A path string (one table keyed by bare words) or {"<iso>": path, ...} (merged multilingual table).
std::shared_ptr<const EmbeddingTable> load_embeddings_spec(const nlohmann::json& spec,
                                                           const std::filesystem::path& base_dir);

struct ExperimentOutcome {
  std::string report;
  std::size_t failed_cells = 0;
  std::vector<std::string> warnings;
};

// Runs the protocol named by config["protocol"] ("effectivity", "transfer" or "holdout").
// Throws ConfigError for malformed or inconsistent configs.
ExperimentOutcome run_experiment(const nlohmann::json& config, const std::filesystem::path& base_dir,
                                 ReportFormat format);

std::string emit_transfer_tsv(const std::vector<TransferPoint>& points);
std::string emit_holdout_tsv(const HoldoutReport& report);

}  // namespace lexshare
