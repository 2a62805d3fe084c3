#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"
#include "lexshare/tagger.hpp"
#include "lexshare/tagstats.hpp"

namespace lexshare {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ExperimentRecord {
  std::string language;
  OverlapMode condition = OverlapMode::full;
  double delta_acc = 0.0;  // MTL minus single-task accuracy, percentage points
  double h_aux = 0.0;      // bits
  double mi = 0.0;         // bits
  std::uint64_t seed = 0;

  bool operator==(const ExperimentRecord&) const = default;
};

// One corpus carrying both the main and the auxiliary layer.
struct GridCell {
  std::string name;
  std::shared_ptr<const Corpus> corpus;
  std::string main_layer;
  std::string aux_layer;
  std::shared_ptr<const EmbeddingTable> embeddings;
};

struct EffectivityOptions {
  TaggerConfig tagger;  // tasks and languages are filled in per cell
  std::vector<OverlapMode> modes{OverlapMode::full, OverlapMode::partial, OverlapMode::none};
  std::vector<std::uint64_t> seeds{1};
  double aux_fraction = 0.5;
  double test_fraction = 0.2;
  double dev_fraction = 0.1;
  std::size_t workers = 1;
  PermutationTest permutation;
};

struct CorrelationEntry {
  std::string status;  // "ok", "insufficient-n" or "undefined-correlation"
  std::optional<CorrelationResult> result;
};

struct CorrelationSummary {
  OverlapMode mode = OverlapMode::full;
  std::size_t n = 0;
  std::size_t failed = 0;
  CorrelationEntry entropy;
  CorrelationEntry mutual_information;
};

struct CellOutcome {
  std::string cell;
  OverlapMode mode = OverlapMode::full;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string message;  // failure reason
  double single_accuracy = 0.0;
  double mtl_accuracy = 0.0;
};

struct EffectivityResult {
  std::vector<ExperimentRecord> records;  // successful cells, ordered by (cell, mode, seed)
  std::vector<CellOutcome> cells;         // every cell, same order
  std::vector<CorrelationSummary> summary;
  std::size_t failed() const;
};

// For every (cell, mode, seed): hold out test and dev sentences, split the rest into main and
// auxiliary parts, train a single-task and a multitask tagger from the same seed and record
// the accuracy gain next to the auxiliary entropy and the main/auxiliary mutual information.
// Cells whose training diverges are kept out of the records and reported in `cells`.
EffectivityResult run_mtl_effectivity(std::span<const GridCell> grid, const EffectivityOptions& options);

std::vector<CorrelationSummary> summarize(std::span<const ExperimentRecord> records,
                                          std::span<const OverlapMode> modes, std::span<const CellOutcome> cells,
                                          const PermutationTest& permutation = {});

struct TransferPoint {
  std::string source_lang;
  std::string target_lang;
  std::size_t n_target_samples = 0;
  double metric = 0.0;  // mean error rate over seeds, percent
  std::vector<double> per_seed;

  bool operator==(const TransferPoint&) const = default;
};

struct TransferOptions {
  TaggerConfig tagger;
  std::string task;
  std::vector<std::size_t> sample_counts{0};
  std::vector<std::uint64_t> seeds{1};
  double test_fraction = 0.3;
  std::size_t workers = 1;
};

struct TransferResult {
  std::vector<TransferPoint> points;  // by source, then sample count
  std::vector<std::string> warnings;
};

// Error on a held-out part of the target corpus of a tagger trained on each source corpus plus
// the first n seeded-sampled target sentences. Counts above the available pool are clamped.
TransferResult run_transfer_curve(std::span<const Corpus> sources, const Corpus& target,
                                  std::shared_ptr<const EmbeddingTable> embeddings, const TransferOptions& options);

struct TaskLanguagePair {
  std::string language;
  std::string task;
  Corpus corpus;
};

struct HoldoutTarget {
  std::string language;
  std::string task;
  Corpus test;
  Corpus skyline_train;  // supervised data for the held-out pair, used only by the skyline
};

struct HoldoutOptions {
  TaggerConfig tagger;
  std::vector<std::uint64_t> seeds{1};
  std::size_t workers = 1;
};

struct HoldoutReport {
  std::string language;
  std::string task;
  double heldout_accuracy = 0.0;  // mean over seeds
  double skyline_accuracy = 0.0;
  double majority_baseline = 0.0;
  std::size_t n_test_tokens = 0;
  std::vector<double> heldout_per_seed;
  std::vector<double> skyline_per_seed;
};

// Trains one multitask, multilingual tagger on all observed (language, task) pairs and tags the
// held-out pair zero-shot.
HoldoutReport run_joint_holdout(std::span<const TaskLanguagePair> pairs, const HoldoutTarget& held_out,
                                std::shared_ptr<const EmbeddingTable> embeddings, const HoldoutOptions& options);

// Percentage of test tokens carrying the most frequent tag.
double majority_baseline(const Corpus& test, const std::string& layer);

// ---- reports ----------------------------------------------------------------------------

enum class ReportFormat { json, tsv };
ReportFormat parse_report_format(std::string_view text);

struct ReportMeta {
  std::string toolkit_version = kToolkitVersion;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
};

struct Report {
  ReportMeta meta;
  std::vector<ExperimentRecord> records;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // summary, cells, ...
};

// TSV: header "language condition delta_acc h_aux mi seed", then one row per record.
// JSON: toolkit_version, config_hash, seeds, records, then the extra members.
std::string emit_report(const Report& report, ReportFormat format);
Report parse_report(std::string_view json);

nlohmann::ordered_json to_json(const CorrelationSummary& summary);
nlohmann::ordered_json to_json(const CellOutcome& cell);
nlohmann::ordered_json to_json(const TransferPoint& point);
nlohmann::ordered_json to_json(const HoldoutReport& report);

// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace lexshare
