#include "lexshare/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"

namespace lexshare {

namespace {

// Runs fn(0 .. n-1) on up to `workers` threads. The first exception by index is rethrown after
// all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t fraction_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

struct HeldOut {
  Corpus test;
  Corpus dev;
  Corpus pool;
};

HeldOut hold_out(const Corpus& corpus, double test_fraction, double dev_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(corpus.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, "heldout"));
  rng.shuffle(order);
  const std::size_t n_test = fraction_count(test_fraction, order.size());
  const std::size_t n_dev = std::min(fraction_count(dev_fraction, order.size()), order.size() - n_test);
  auto pick = [&](std::size_t from, std::size_t to) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(to));
    std::sort(idx.begin(), idx.end());
    return select_indices(corpus, idx);
  };
  return {pick(0, n_test), pick(n_test, n_test + n_dev), pick(n_test + n_dev, order.size())};
}

std::uint64_t layer_fingerprint(const Corpus& corpus, const std::string& layer) {
  std::uint64_t h = fnv1a(corpus.language);
  for (const auto& s : corpus.sentences) {
    h = fnv1a(s.id, fnv1a("\x1e", h));
    for (const auto& t : s.tokens) {
      h = fnv1a(t.form, fnv1a("\x1f", h));
      h = fnv1a(t.tags.at(layer), fnv1a("\x1d", h));
    }
  }
  return h;
}

CharVocab vocab_of(std::span<const Corpus* const> corpora) { return CharVocab::from_corpora(corpora); }

void require_layer(const Corpus& corpus, const std::string& layer, const std::string& what) {
  if (!corpus.has_layer(layer)) throw ConfigError(what + " has no layer '" + layer + "'");
}

}  // namespace

std::size_t EffectivityResult::failed() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.failed; }));
}

EffectivityResult run_mtl_effectivity(std::span<const GridCell> grid, const EffectivityOptions& options) {
  if (options.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (options.modes.empty()) throw ConfigError("experiment needs at least one overlap mode");
  if (!(options.aux_fraction > 0.0 && options.aux_fraction < 1.0))
    throw ConfigError("aux_fraction must be in (0, 1)");
  if (!(options.test_fraction > 0.0 && options.dev_fraction >= 0.0 &&
        options.test_fraction + options.dev_fraction < 1.0))
    throw ConfigError("test and dev fractions must be non-negative and leave training data");

  std::vector<const GridCell*> cells;
  std::set<std::string> names;
  for (const auto& cell : grid) {
    if (!cell.corpus) throw ConfigError("grid cell '" + cell.name + "' has no corpus");
    if (!names.insert(cell.name).second) throw ConfigError("duplicate grid cell '" + cell.name + "'");
    if (cell.main_layer == cell.aux_layer) throw ConfigError("grid cell '" + cell.name + "' uses one layer twice");
    require_layer(*cell.corpus, cell.main_layer, "grid cell '" + cell.name + "'");
    require_layer(*cell.corpus, cell.aux_layer, "grid cell '" + cell.name + "'");
    cells.push_back(&cell);
  }
  std::sort(cells.begin(), cells.end(), [](const GridCell* a, const GridCell* b) { return a->name < b->name; });

  struct Job {
    const GridCell* cell;
    OverlapMode mode;
    std::uint64_t seed;
    std::size_t single = 0;  // index into singles
  };
  struct SingleJob {
    const GridCell* cell;
    OverlapMode mode;
    std::uint64_t seed;
    std::optional<double> accuracy;
    std::string error;
  };
  std::vector<Job> jobs;
  std::vector<SingleJob> singles;
  std::map<std::tuple<std::uint64_t, std::string, const EmbeddingTable*, int, std::uint64_t>, std::size_t> single_index;
  std::map<const GridCell*, std::uint64_t> fingerprints;
  for (const auto* cell : cells) fingerprints[cell] = layer_fingerprint(*cell->corpus, cell->main_layer);

  for (const auto* cell : cells) {
    for (auto mode : options.modes) {
      for (auto seed : options.seeds) {
        const auto key = std::make_tuple(fingerprints[cell], cell->main_layer, cell->embeddings.get(),
                                         static_cast<int>(mode), seed);
        auto [it, inserted] = single_index.emplace(key, singles.size());
        if (inserted) singles.push_back({cell, mode, seed, std::nullopt, {}});
        jobs.push_back({cell, mode, seed, it->second});
      }
    }
  }

  auto make_model = [&](const GridCell& cell, bool with_aux, std::uint64_t seed) {
    TaggerConfig config = options.tagger;
    config.seed = seed;
    config.languages = {cell.corpus->language};
    const Corpus* all[] = {cell.corpus.get()};
    config.tasks = {{cell.main_layer, collect_tagset(all, cell.main_layer)}};
    if (with_aux) config.tasks.push_back({cell.aux_layer, collect_tagset(all, cell.aux_layer)});
    return MultitaskTagger::build(std::move(config), cell.embeddings, vocab_of(all));
  };
  auto prepare = [&](const GridCell& cell, OverlapMode mode, std::uint64_t seed) {
    HeldOut held = hold_out(*cell.corpus, options.test_fraction, options.dev_fraction, seed);
    OverlapSplit split = make_overlap_split(held.pool, mode, options.aux_fraction, mix_seed(seed, "overlap"));
    return std::make_pair(std::move(held), std::move(split));
  };

  parallel_for(singles.size(), options.workers, [&](std::size_t i) {
    auto& job = singles[i];
    const auto [held, split] = prepare(*job.cell, job.mode, job.seed);
    auto model = make_model(*job.cell, false, job.seed);
    TrainOptions train_options;
    if (!held.dev.empty()) train_options.dev = &held.dev;
    try {
      train(model, {&split.main, job.cell->main_layer}, {}, train_options);
      job.accuracy = evaluate(model, held.test, job.cell->main_layer).accuracy;
    } catch (const DivergenceError& e) {
      job.error = std::string("single-task training diverged: ") + e.what();
    }
  });

  EffectivityResult result;
  result.cells.resize(jobs.size());
  std::vector<std::optional<ExperimentRecord>> records(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& cell = *job.cell;
    auto& outcome = result.cells[i];
    outcome.cell = cell.name;
    outcome.mode = job.mode;
    outcome.seed = job.seed;
    const auto& single = singles[job.single];
    if (!single.accuracy) {
      outcome.failed = true;
      outcome.message = single.error;
      return;
    }
    const auto [held, split] = prepare(cell, job.mode, job.seed);
    auto model = make_model(cell, true, job.seed);
    TrainOptions train_options;
    if (!held.dev.empty()) train_options.dev = &held.dev;
    const TaskData aux[] = {{&split.aux, cell.aux_layer}};
    try {
      train(model, {&split.main, cell.main_layer}, aux, train_options);
    } catch (const DivergenceError& e) {
      outcome.failed = true;
      outcome.message = std::string("multitask training diverged: ") + e.what();
      return;
    }
    outcome.single_accuracy = *single.accuracy;
    outcome.mtl_accuracy = evaluate(model, held.test, cell.main_layer).accuracy;

    ExperimentRecord r;
    r.language = cell.corpus->language;
    r.condition = job.mode;
    r.seed = job.seed;
    r.delta_acc = outcome.mtl_accuracy - outcome.single_accuracy;
    r.h_aux = entropy(tag_distribution(split.aux, cell.aux_layer));
    if (job.mode == OverlapMode::full) {
      r.mi = mutual_information(joint_distribution(split.aux, cell.main_layer, cell.aux_layer));
    } else if (job.mode == OverlapMode::partial) {
      std::set<std::string> main_ids;
      for (const auto& s : split.main.sentences) main_ids.insert(s.id);
      std::set<std::string> shared;
      for (const auto& s : split.aux.sentences)
        if (main_ids.count(s.id)) shared.insert(s.id);
      r.mi = mutual_information(joint_distribution(select_sentences(split.aux, shared), cell.main_layer, cell.aux_layer));
    } else {
      r.mi = mutual_information(joint_distribution(*cell.corpus, cell.main_layer, cell.aux_layer));
    }
    records[i] = std::move(r);
  });

  for (auto& r : records)
    if (r) result.records.push_back(std::move(*r));
  result.summary = summarize(result.records, options.modes, result.cells, options.permutation);
  return result;
}

std::vector<CorrelationSummary> summarize(std::span<const ExperimentRecord> records,
                                          std::span<const OverlapMode> modes, std::span<const CellOutcome> cells,
                                          const PermutationTest& permutation) {
  std::vector<CorrelationSummary> out;
  for (auto mode : modes) {
    CorrelationSummary s;
    s.mode = mode;
    std::vector<double> delta, h, mi;
    for (const auto& r : records) {
      if (r.condition != mode) continue;
      delta.push_back(r.delta_acc);
      h.push_back(r.h_aux);
      mi.push_back(r.mi);
    }
    s.n = delta.size();
    for (const auto& c : cells) s.failed += c.mode == mode && c.failed;
    auto correlate = [&](const std::vector<double>& xs) {
      CorrelationEntry e;
      if (delta.size() < 3) {
        e.status = "insufficient-n";
        return e;
      }
      try {
        e.result = spearman_rho(delta, xs, permutation);
        e.status = "ok";
      } catch (const UndefinedError&) {
        e.status = "undefined-correlation";
      }
      return e;
    };
    s.entropy = correlate(h);
    s.mutual_information = correlate(mi);
    out.push_back(std::move(s));
  }
  return out;
}

TransferResult run_transfer_curve(std::span<const Corpus> sources, const Corpus& target,
                                  std::shared_ptr<const EmbeddingTable> embeddings, const TransferOptions& options) {
  if (sources.empty()) throw ConfigError("transfer curve needs at least one source corpus");
  if (options.task.empty()) throw ConfigError("transfer curve needs a task");
  if (options.seeds.empty()) throw ConfigError("transfer curve needs at least one seed");
  if (options.sample_counts.empty()) throw ConfigError("transfer curve needs sample counts");
  for (std::size_t i = 1; i < options.sample_counts.size(); ++i)
    if (options.sample_counts[i] <= options.sample_counts[i - 1])
      throw ConfigError("sample counts must be strictly ascending");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0, 1)");
  for (const auto& s : sources) require_layer(s, options.task, "source corpus '" + s.language + "'");
  require_layer(target, options.task, "target corpus");
  for (const auto& s : sources)
    if (s.language == target.language) throw ConfigError("source and target share language '" + target.language + "'");
  if (embeddings && embeddings->is_multilingual()) {
    auto check = [&](const std::string& language) {
      if (!embeddings->language_scope.count(language))
        throw ConfigError("embedding table does not cover language '" + language + "'");
    };
    check(target.language);
    for (const auto& s : sources) check(s.language);
  }

  std::vector<const Corpus*> all{&target};
  for (const auto& s : sources) all.push_back(&s);
  const auto tagset = collect_tagset(all, options.task);

  const std::size_t n_test = std::max<std::size_t>(1, fraction_count(options.test_fraction, target.sentences.size()));
  if (n_test >= target.sentences.size()) throw SizingError("target corpus too small to hold out a test set");
  const std::size_t pool_size = target.sentences.size() - n_test;

  TransferResult result;
  std::vector<std::size_t> counts;
  for (auto n : options.sample_counts) {
    if (n > pool_size) {
      result.warnings.push_back("requested " + std::to_string(n) + " target samples, only " +
                                std::to_string(pool_size) + " available; using " + std::to_string(pool_size));
      n = pool_size;
    }
    counts.push_back(n);
  }

  struct Job {
    std::size_t source, count, seed;
    double error = 0.0;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sources.size(); ++s)
    for (std::size_t c = 0; c < counts.size(); ++c)
      for (std::size_t k = 0; k < options.seeds.size(); ++k) jobs.push_back({s, c, k});

  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    auto& job = jobs[i];
    const Corpus& source = sources[job.source];
    const std::uint64_t seed = options.seeds[job.seed];
    std::vector<std::size_t> order(target.sentences.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    Rng rng(mix_seed(seed, "transfer-target"));
    rng.shuffle(order);
    const std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    const std::vector<std::size_t> sample_idx(
        order.begin() + static_cast<std::ptrdiff_t>(n_test),
        order.begin() + static_cast<std::ptrdiff_t>(n_test + counts[job.count]));
    const Corpus test = select_indices(target, test_idx);
    const Corpus sample = select_indices(target, sample_idx);

    TaggerConfig config = options.tagger;
    config.seed = seed;
    config.tasks = {{options.task, tagset}};
    config.languages = {source.language, target.language};
    std::sort(config.languages.begin(), config.languages.end());
    const Corpus* seen[] = {&source, &sample};
    auto model = MultitaskTagger::build(std::move(config), embeddings, vocab_of(seen));
    std::vector<TaskData> aux;
    if (!sample.empty()) aux.push_back({&sample, options.task});
    train(model, {&source, options.task}, aux);
    job.error = 100.0 - evaluate(model, test, options.task).accuracy;
  });

  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      TransferPoint p;
      p.source_lang = sources[s].language;
      p.target_lang = target.language;
      p.n_target_samples = counts[c];
      for (const auto& job : jobs)
        if (job.source == s && job.count == c) p.per_seed.push_back(job.error);
      double sum = 0.0;
      for (double e : p.per_seed) sum += e;
      p.metric = sum / static_cast<double>(p.per_seed.size());
      result.points.push_back(std::move(p));
    }
  }
  return result;
}

double majority_baseline(const Corpus& test, const std::string& layer) {
  const auto d = tag_distribution(test, layer);
  if (d.total == 0) throw UndefinedError("majority baseline over an empty corpus is undefined");
  std::uint64_t best = 0;
  for (const auto& [tag, n] : d.counts) best = std::max(best, n);
  return 100.0 * static_cast<double>(best) / static_cast<double>(d.total);
}

HoldoutReport run_joint_holdout(std::span<const TaskLanguagePair> pairs, const HoldoutTarget& held_out,
                                std::shared_ptr<const EmbeddingTable> embeddings, const HoldoutOptions& options) {
  if (pairs.empty()) throw ConfigError("joint training needs at least one (language, task) pair");
  if (options.seeds.empty()) throw ConfigError("joint training needs at least one seed");
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> languages, tasks;
  for (const auto& p : pairs) {
    if (!seen.insert({p.language, p.task}).second)
      throw ConfigError("pair (" + p.language + ", " + p.task + ") given twice");
    if (p.corpus.empty()) throw ConfigError("pair (" + p.language + ", " + p.task + ") has no sentences");
    require_layer(p.corpus, p.task, "pair (" + p.language + ", " + p.task + ")");
    languages.insert(p.language);
    tasks.insert(p.task);
  }
  if (seen.count({held_out.language, held_out.task}))
    throw ConfigError("held-out pair (" + held_out.language + ", " + held_out.task + ") is also a training pair");
  if (!languages.count(held_out.language))
    throw ConfigError("held-out language '" + held_out.language + "' is not observed with any task");
  if (!tasks.count(held_out.task))
    throw ConfigError("held-out task '" + held_out.task + "' is not observed in any language");
  if (held_out.test.empty()) throw ConfigError("held-out test corpus is empty");
  require_layer(held_out.test, held_out.task, "held-out test corpus");
  if (held_out.skyline_train.empty()) throw ConfigError("skyline training corpus is empty");
  require_layer(held_out.skyline_train, held_out.task, "skyline training corpus");

  std::vector<Corpus> corpora;
  for (const auto& p : pairs) {
    corpora.push_back(p.corpus);
    corpora.back().language = p.language;
  }
  Corpus test = held_out.test;
  test.language = held_out.language;
  Corpus skyline_train = held_out.skyline_train;
  skyline_train.language = held_out.language;

  TaggerConfig joint = options.tagger;
  joint.languages.assign(languages.begin(), languages.end());
  joint.tasks.clear();
  for (const auto& task : tasks) {
    std::vector<const Corpus*> with_task;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].task == task) with_task.push_back(&corpora[i]);
    joint.tasks.push_back({task, collect_tagset(with_task, task)});
  }
  std::vector<const Corpus*> all;
  for (const auto& c : corpora) all.push_back(&c);
  const CharVocab joint_chars = vocab_of(all);

  TaggerConfig skyline = options.tagger;
  skyline.languages = {held_out.language};
  const Corpus* sky[] = {&skyline_train};
  skyline.tasks = {{held_out.task, collect_tagset(sky, held_out.task)}};
  const CharVocab skyline_chars = vocab_of(sky);

  HoldoutReport report;
  report.language = held_out.language;
  report.task = held_out.task;
  report.n_test_tokens = test.token_count();
  report.majority_baseline = majority_baseline(test, held_out.task);
  report.heldout_per_seed.resize(options.seeds.size());
  report.skyline_per_seed.resize(options.seeds.size());

  parallel_for(2 * options.seeds.size(), options.workers, [&](std::size_t i) {
    const std::size_t k = i / 2;
    if (i % 2 == 0) {
      TaggerConfig config = joint;
      config.seed = options.seeds[k];
      auto model = MultitaskTagger::build(std::move(config), embeddings, joint_chars);
      std::vector<TaskData> aux;
      for (std::size_t j = 1; j < corpora.size(); ++j) aux.push_back({&corpora[j], pairs[j].task});
      train(model, {&corpora[0], pairs[0].task}, aux);
      report.heldout_per_seed[k] = evaluate(model, test, held_out.task).accuracy;
    } else {
      TaggerConfig config = skyline;
      config.seed = options.seeds[k];
      auto model = MultitaskTagger::build(std::move(config), embeddings, skyline_chars);
      train(model, {&skyline_train, held_out.task}, {});
      report.skyline_per_seed[k] = evaluate(model, test, held_out.task).accuracy;
    }
  });
  auto mean = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  report.heldout_accuracy = mean(report.heldout_per_seed);
  report.skyline_accuracy = mean(report.skyline_per_seed);
  return report;
}

// ---- reports ----------------------------------------------------------------------------

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::json;
  if (text == "tsv") return ReportFormat::tsv;
  throw ConfigError("unknown report format '" + std::string(text) + "' (expected json or tsv)");
}

std::string format_number(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

namespace {

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double number_from(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

nlohmann::ordered_json correlation_json(const CorrelationEntry& e) {
  nlohmann::ordered_json j;
  j["status"] = e.status;
  if (e.result) {
    j["rho"] = number(e.result->rho);
    j["p_value"] = number(e.result->p_value);
    j["permutations"] = e.result->permutations;
    j["permutation_seed"] = e.result->seed;
  }
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const CorrelationSummary& s) {
  nlohmann::ordered_json j;
  j["condition"] = to_string(s.mode);
  j["n"] = s.n;
  j["failed"] = s.failed;
  j["delta_acc_vs_h_aux"] = correlation_json(s.entropy);
  j["delta_acc_vs_mi"] = correlation_json(s.mutual_information);
  return j;
}

nlohmann::ordered_json to_json(const CellOutcome& c) {
  nlohmann::ordered_json j;
  j["cell"] = c.cell;
  j["condition"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["status"] = c.failed ? "failed" : "ok";
  if (c.failed) {
    j["message"] = c.message;
  } else {
    j["single_accuracy"] = number(c.single_accuracy);
    j["mtl_accuracy"] = number(c.mtl_accuracy);
  }
  return j;
}

nlohmann::ordered_json to_json(const TransferPoint& p) {
  nlohmann::ordered_json j;
  j["source_lang"] = p.source_lang;
  j["target_lang"] = p.target_lang;
  j["n_target_samples"] = p.n_target_samples;
  j["metric"] = number(p.metric);
  auto& seeds = j["per_seed"] = nlohmann::ordered_json::array();
  for (double e : p.per_seed) seeds.push_back(number(e));
  return j;
}

nlohmann::ordered_json to_json(const HoldoutReport& r) {
  nlohmann::ordered_json j;
  j["language"] = r.language;
  j["task"] = r.task;
  j["heldout_accuracy"] = number(r.heldout_accuracy);
  j["skyline_accuracy"] = number(r.skyline_accuracy);
  j["majority_baseline"] = number(r.majority_baseline);
  j["n_test_tokens"] = r.n_test_tokens;
  auto& h = j["heldout_per_seed"] = nlohmann::ordered_json::array();
  for (double x : r.heldout_per_seed) h.push_back(number(x));
  auto& s = j["skyline_per_seed"] = nlohmann::ordered_json::array();
  for (double x : r.skyline_per_seed) s.push_back(number(x));
  return j;
}

std::string emit_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::tsv) {
    std::string out = "language\tcondition\tdelta_acc\th_aux\tmi\tseed\n";
    for (const auto& r : report.records) {
      out += r.language + '\t' + to_string(r.condition) + '\t' + format_number(r.delta_acc) + '\t' +
             format_number(r.h_aux) + '\t' + format_number(r.mi) + '\t' + std::to_string(r.seed) + '\n';
    }
    return out;
  }
  nlohmann::ordered_json j;
  j["toolkit_version"] = report.meta.toolkit_version;
  j["config_hash"] = report.meta.config_hash;
  j["seeds"] = report.meta.seeds;
  auto& records = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    nlohmann::ordered_json row;
    row["language"] = r.language;
    row["condition"] = to_string(r.condition);
    row["delta_acc"] = number(r.delta_acc);
    row["h_aux"] = number(r.h_aux);
    row["mi"] = number(r.mi);
    row["seed"] = r.seed;
    records.push_back(std::move(row));
  }
  for (const auto& [key, value] : report.extra.items()) j[key] = value;
  return j.dump(2) + "\n";
}

Report parse_report(std::string_view json) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("report is not valid JSON: ") + e.what());
  }
  Report report;
  try {
    report.meta.toolkit_version = j.at("toolkit_version").get<std::string>();
    report.meta.config_hash = j.at("config_hash").get<std::string>();
    report.meta.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& row : j.at("records")) {
      ExperimentRecord r;
      r.language = row.at("language").get<std::string>();
      r.condition = parse_overlap_mode(row.at("condition").get<std::string>());
      r.delta_acc = number_from(row.at("delta_acc"));
      r.h_aux = number_from(row.at("h_aux"));
      r.mi = number_from(row.at("mi"));
      r.seed = row.at("seed").get<std::uint64_t>();
      report.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed report: ") + e.what());
  }
  for (const auto& [key, value] : j.items())
    if (key != "toolkit_version" && key != "config_hash" && key != "seeds" && key != "records")
      report.extra[key] = value;
  return report;
}

}  // namespace lexshare
