#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "lexshare/error.hpp"
#include "lexshare/experiment.hpp"
#include "lexshare/fixtures.hpp"
#include "lexshare/pipeline.hpp"
#include "lexshare/synthetic.hpp"
#include "lexshare/tagstats.hpp"

using namespace lexshare;
namespace fs = std::filesystem;

namespace {

SyntheticLanguage small_language(const std::string& iso, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.language = iso;
  spec.n_tags = 4;
  spec.words_per_tag = 6;
  spec.max_length = 6;
  spec.seed = seed;
  return SyntheticLanguage::generate(spec);
}

TaggerConfig quick_tagger() {
  TaggerConfig t;
  t.word_dim = 16;
  t.char_channels = 4;
  t.char_blocks = 1;
  t.hidden_dim = 8;
  t.epochs = 2;
  t.patience = 2;
  t.adam.learning_rate = 0.01;
  return t;
}

std::vector<GridCell> small_grid() {
  const auto lang = small_language("aa", 1);
  auto corpus = lang.sample(40, 2);
  corpus = add_noisy_copy(corpus, "pos", "noisy", 0.5, 3);
  auto shared = std::make_shared<const Corpus>(std::move(corpus));
  auto table = std::make_shared<const EmbeddingTable>(lang.embeddings(1.0, 1));
  return {{"aa-sem", shared, "pos", "sem", table}, {"aa-noisy", shared, "pos", "noisy", table}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lexshare-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1.5e-7), "-1.5e-07");
  for (double x : {1.0 / 3.0, 123456.789, 5e-324, 1.7976931348623157e308})
    EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
}

TEST(Report, JsonRoundTripWithNonFinite) {
  Report r;
  r.meta.config_hash = "abc";
  r.meta.seeds = {1, 2};
  r.records = {{"en", OverlapMode::partial, 1.25, 2.5, 0.75, 1}, {"de", OverlapMode::none, NAN, 1.0, 0.0, 2}};
  r.extra["note"] = "x";
  const auto text = emit_report(r, ReportFormat::json);
  EXPECT_NE(text.find("null"), std::string::npos);
  const auto back = parse_report(text);
  EXPECT_EQ(back.meta.toolkit_version, kToolkitVersion);
  EXPECT_EQ(back.meta.seeds, r.meta.seeds);
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0], r.records[0]);
  EXPECT_TRUE(std::isnan(back.records[1].delta_acc));
  EXPECT_EQ(back.records[1].condition, OverlapMode::none);
  EXPECT_EQ(back.extra, r.extra);
  EXPECT_EQ(emit_report(back, ReportFormat::json), text);
  EXPECT_THROW(parse_report("{"), ParseError);
  EXPECT_THROW(parse_report("{\"records\": []}"), ParseError);
}

TEST(Report, TsvLayout) {
  Report r;
  r.records = {{"en", OverlapMode::full, 0.5, 1.0, 0.25, 3}};
  EXPECT_EQ(emit_report(r, ReportFormat::tsv), "language\tcondition\tdelta_acc\th_aux\tmi\tseed\nen\tfull\t0.5\t1\t0.25\t3\n");
  EXPECT_EQ(parse_report_format("tsv"), ReportFormat::tsv);
  EXPECT_THROW(parse_report_format("xml"), Error);
}

TEST(Summarize, StatusesFollowSampleSize) {
  std::vector<ExperimentRecord> records{{"a", OverlapMode::full, 1, 1, 1, 1}, {"b", OverlapMode::full, 2, 2, 2, 1}};
  const OverlapMode modes[] = {OverlapMode::full, OverlapMode::none};
  auto s = summarize(records, modes, {});
  EXPECT_EQ(s[0].entropy.status, "insufficient-n");
  EXPECT_EQ(s[1].n, 0u);
  records.push_back({"c", OverlapMode::full, 3, 2, 2, 1});
  s = summarize(records, modes, {}, {500, 1});
  EXPECT_EQ(s[0].mutual_information.status, "ok");
  EXPECT_NEAR(s[0].mutual_information.result->rho, std::sqrt(0.75), 1e-12);
  for (auto& r : records) r.h_aux = 4;
  s = summarize(records, modes, {}, {500, 1});
  EXPECT_EQ(s[0].entropy.status, "undefined-correlation");
}

TEST(Effectivity, RecordsMatchDirectStatistics) {
  const auto grid = small_grid();
  EffectivityOptions options;
  options.tagger = quick_tagger();
  options.seeds = {1, 2};
  options.permutation = {200, 1};
  const auto result = run_mtl_effectivity(grid, options);
  ASSERT_EQ(result.cells.size(), 2u * 3u * 2u);
  EXPECT_EQ(result.failed(), 0u);
  ASSERT_EQ(result.records.size(), result.cells.size());
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    const auto& c = result.cells[i];
    EXPECT_EQ(r.condition, c.mode);
    EXPECT_EQ(r.seed, c.seed);
    EXPECT_DOUBLE_EQ(r.delta_acc, c.mtl_accuracy - c.single_accuracy);
    EXPECT_GE(r.mi, 0.0);
    EXPECT_LE(r.mi, r.h_aux + 1e-9);
    const auto& cell = c.cell == grid[0].name ? grid[0] : grid[1];
    if (c.mode == OverlapMode::none)
      EXPECT_EQ(r.mi, mutual_information(joint_distribution(*cell.corpus, cell.main_layer, cell.aux_layer)));
  }
  // Cells come out sorted by name.
  EXPECT_EQ(result.cells.front().cell, "aa-noisy");
  ASSERT_EQ(result.summary.size(), 3u);
  EXPECT_EQ(result.summary[0].n, 4u);
}

TEST(Effectivity, WorkerCountDoesNotChangeResults) {
  const auto grid = small_grid();
  EffectivityOptions options;
  options.tagger = quick_tagger();
  options.modes = {OverlapMode::partial};
  options.seeds = {3, 4};
  const auto serial = run_mtl_effectivity(grid, options);
  options.workers = 3;
  const auto parallel = run_mtl_effectivity(grid, options);
  EXPECT_EQ(serial.records, parallel.records);
}

TEST(Effectivity, RejectsBadFractions) {
  const auto grid = small_grid();
  EffectivityOptions options;
  options.tagger = quick_tagger();
  options.aux_fraction = 1.0;
  EXPECT_THROW(run_mtl_effectivity(grid, options), ConfigError);
}

TEST(Transfer, CurveShapeAndClamping) {
  const auto target_lang = small_language("tt", 4);
  const auto source_lang = target_lang.derive_related("cl", 0.1, 0.05, 1);
  const std::vector<Corpus> sources{source_lang.sample(20, 1)};
  const auto target = target_lang.sample(20, 2);
  const std::vector<std::pair<std::string, EmbeddingTable>> parts{{"cl", source_lang.embeddings()},
                                                                  {"tt", target_lang.embeddings()}};
  auto table = std::make_shared<const EmbeddingTable>(merge_multilingual(parts));
  TransferOptions options;
  options.tagger = quick_tagger();
  options.task = "pos";
  options.sample_counts = {0, 5, 100};
  options.seeds = {1, 2};
  const auto result = run_transfer_curve(sources, target, table, options);
  ASSERT_EQ(result.points.size(), 3u);
  EXPECT_EQ(result.points[0].n_target_samples, 0u);
  EXPECT_EQ(result.points[2].n_target_samples, 14u);  // 20 minus 6 test sentences
  EXPECT_FALSE(result.warnings.empty());
  for (const auto& p : result.points) {
    EXPECT_EQ(p.source_lang, "cl");
    EXPECT_EQ(p.target_lang, "tt");
    ASSERT_EQ(p.per_seed.size(), 2u);
    EXPECT_DOUBLE_EQ(p.metric, (p.per_seed[0] + p.per_seed[1]) / 2);
  }
  options.sample_counts = {5, 5};
  EXPECT_THROW(run_transfer_curve(sources, target, table, options), ConfigError);
}

TEST(Holdout, MajorityBaselineByHand) {
  Corpus c;
  c.sentences.push_back({"1", {{"a", {{"t", "X"}}}, {"b", {{"t", "Y"}}}, {"c", {{"t", "X"}}}}});
  c.sentences.push_back({"2", {{"d", {{"t", "X"}}}}});
  refresh_layers(c);
  EXPECT_DOUBLE_EQ(majority_baseline(c, "t"), 75.0);
  EXPECT_THROW(majority_baseline(Corpus{}, "t"), UndefinedError);
}

TEST(Pipeline, ConfigErrors) {
  const auto dir = scratch("pipeline");
  EXPECT_THROW(read_json_file(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  EXPECT_THROW(run_experiment(nlohmann::json::array(), dir, ReportFormat::json), ConfigError);
  EXPECT_THROW(run_experiment({{"protocol", "nope"}, {"seeds", {1}}}, dir, ReportFormat::json), ConfigError);
  EXPECT_THROW(run_experiment({{"protocol", "effectivity"}}, dir, ReportFormat::json), ConfigError);
  EXPECT_THROW(run_experiment({{"protocol", "effectivity"}, {"seeds", {1}}, {"grid", nlohmann::json::array()}}, dir,
                              ReportFormat::json),
               ConfigError);
  EXPECT_THROW(load_corpus_spec({{"path", "absent.tsv"}, {"columns", {"pos"}}}, dir), ConfigError);
  std::ofstream(dir / "c.tsv") << "a\tX\n";
  EXPECT_THROW(load_corpus_spec({{"path", "c.tsv"}}, dir), ConfigError);
  EXPECT_EQ(load_corpus_spec({{"path", "c.tsv"}, {"columns", {"pos"}}, {"language", "en"}}, dir).language, "en");
  fs::remove_all(dir);
}

TEST(Pipeline, FixtureRunIsDeterministic) {
  FixtureOptions fo;
  fo.run_seeds = {1};
  auto bundle = holdout_fixture(fo);
  bundle.config["tagger"]["epochs"] = 2;
  const auto dir = scratch("fixture");
  write_bundle(bundle, dir);
  EXPECT_TRUE(fs::exists(dir / "experiment.json"));
  const auto config = read_json_file(dir / "experiment.json");
  const auto a = run_experiment(config, dir, ReportFormat::json);
  const auto b = run_experiment(config, dir, ReportFormat::json);
  EXPECT_EQ(a.report, b.report);
  const auto parsed = parse_report(a.report);
  EXPECT_TRUE(parsed.extra.contains("holdout"));
  EXPECT_EQ(parsed.meta.config_hash, config_hash(nlohmann::ordered_json::parse(config.dump())));
  fs::remove_all(dir);
}
