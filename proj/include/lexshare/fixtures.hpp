#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace lexshare {

// Generated corpora and embedding files plus an experiment config that refers to them by
// relative path.
struct FixtureBundle {
  struct File {
    std::string name;
    std::string text;
  };
  nlohmann::json config;
  std::vector<File> files;
};

struct FixtureOptions {
  std::uint64_t seed = 100;  // fixture generation
  std::vector<std::uint64_t> run_seeds{1, 2, 3, 4, 5};
  std::size_t workers = 1;
};

// Three languages with 6, 8 and 10 tags, each with four auxiliary layers derived from "pos":
// a relabeling, two noisy copies (30% and 60% of tokens redrawn) and a per-sentence shuffle.
FixtureBundle effectivity_fixture(const FixtureOptions& options = {}, std::size_t sentences = 200);

// Target "tt", a related source "cl" (small spelling changes, nearby vectors) and an unrelated
// source "ds", with a merged multilingual embedding table.
FixtureBundle transfer_fixture(const FixtureOptions& options = {});

// Languages "en" and "fr" sharing word forms; pairs (en, pos), (en, sem), (fr, pos) with
// (fr, sem) held out.
FixtureBundle holdout_fixture(const FixtureOptions& options = {});

FixtureBundle fixture_by_name(const std::string& protocol, const FixtureOptions& options = {});

// Writes the files and "experiment.json" into dir (created if missing).
void write_bundle(const FixtureBundle& bundle, const std::filesystem::path& dir);

}  // namespace lexshare
