#include "lexshare/fixtures.hpp"

#include "lexshare/corpus.hpp"
#include "lexshare/embeddings.hpp"
#include "lexshare/error.hpp"
#include "lexshare/rng.hpp"
#include "lexshare/synthetic.hpp"

namespace lexshare {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kBaseColumns{SyntheticLanguage::kCoarseLayer, SyntheticLanguage::kFineLayer};

json corpus_ref(const std::string& file, const std::string& language, const std::vector<std::string>& columns) {
  return {{"path", file}, {"format", "tsv"}, {"columns", columns}, {"language", language}};
}

void add_corpus(FixtureBundle& b, const std::string& file, const Corpus& c, const std::vector<std::string>& columns) {
  b.files.push_back({file, write_tsv(c, columns)});
}

void add_vectors(FixtureBundle& b, const std::string& file, const EmbeddingTable& t) {
  b.files.push_back({file, write_text_embeddings(t)});
}

}  // namespace

FixtureBundle effectivity_fixture(const FixtureOptions& options, std::size_t sentences) {
  FixtureBundle b;
  const std::vector<std::string> columns{"pos", "sem", "relabel", "noisy30", "noisy60", "shuffled"};
  const char* languages[] = {"aa", "bb", "cc"};
  const std::size_t tags[] = {6, 8, 10};
  json grid = json::array();
  for (std::size_t k = 0; k < 3; ++k) {
    SyntheticSpec spec;
    spec.language = languages[k];
    spec.seed = options.seed + k;
    spec.n_tags = tags[k];
    spec.embedding_dim = 16;
    spec.ambiguity = 0.3;
    const auto lang = SyntheticLanguage::generate(spec);
    Corpus c = lang.sample(sentences, mix_seed(options.seed, k));
    c = add_noisy_copy(c, "pos", "relabel", 0.0, mix_seed(options.seed, 10 * k + 1));
    c = add_noisy_copy(c, "pos", "noisy30", 0.3, mix_seed(options.seed, 10 * k + 2));
    c = add_noisy_copy(c, "pos", "noisy60", 0.6, mix_seed(options.seed, 10 * k + 3));
    c = add_shuffled_copy(c, "pos", "shuffled", mix_seed(options.seed, 10 * k + 4));
    const std::string corpus_file = spec.language + ".tsv", vector_file = spec.language + ".vec";
    add_corpus(b, corpus_file, c, columns);
    add_vectors(b, vector_file, lang.embeddings(0.4, mix_seed(options.seed, 10 * k + 5)));
    for (const char* aux : {"relabel", "noisy30", "noisy60", "shuffled"})
      grid.push_back({{"name", spec.language + "-" + aux},
                      {"corpus", corpus_ref(corpus_file, spec.language, columns)},
                      {"main_layer", "pos"},
                      {"aux_layer", aux},
                      {"embeddings", vector_file}});
  }
  b.config = {{"protocol", "effectivity"},
              {"seeds", options.run_seeds},
              {"workers", options.workers},
              {"modes", {"full", "partial", "none"}},
              {"aux_fraction", 0.8},
              {"test_fraction", 0.25},
              {"dev_fraction", 0.1},
              {"tagger", {{"word_dim", 16}, {"epochs", 30}, {"patience", 5}}},
              {"grid", grid}};
  return b;
}

FixtureBundle transfer_fixture(const FixtureOptions& options) {
  FixtureBundle b;
  SyntheticSpec spec;
  spec.language = "tt";
  spec.seed = options.seed + 1000;
  spec.embedding_dim = 16;
  spec.ambiguity = 0.2;
  const auto target = SyntheticLanguage::generate(spec);
  const auto close = target.derive_related("cl", 0.15, 0.1, mix_seed(options.seed, "close"));
  SyntheticSpec far_spec = spec;
  far_spec.language = "ds";
  far_spec.seed = options.seed + 2000;
  const auto distant = SyntheticLanguage::generate(far_spec);

  json embeddings = json::object();
  std::uint64_t salt = 0;
  for (const auto* lang : {&target, &close, &distant}) {
    const std::string id = lang->language();
    add_corpus(b, id + ".tsv", lang->sample(150, mix_seed(options.seed, ++salt)), kBaseColumns);
    add_vectors(b, id + ".vec", lang->embeddings(1.0, mix_seed(options.seed, ++salt)));
    embeddings[id] = id + ".vec";
  }
  b.config = {{"protocol", "transfer"},
              {"seeds", options.run_seeds},
              {"workers", options.workers},
              {"task", "pos"},
              {"sample_counts", {0, 10, 25, 50, 105}},
              {"test_fraction", 0.3},
              {"sources", {corpus_ref("cl.tsv", "cl", kBaseColumns), corpus_ref("ds.tsv", "ds", kBaseColumns)}},
              {"target", corpus_ref("tt.tsv", "tt", kBaseColumns)},
              {"embeddings", embeddings},
              {"tagger", {{"word_dim", 16}, {"epochs", 30}, {"patience", 5}, {"use_language_embedding", true}}}};
  return b;
}

FixtureBundle holdout_fixture(const FixtureOptions& options) {
  FixtureBundle b;
  SyntheticSpec spec;
  spec.language = "en";
  spec.seed = options.seed + 3000;
  spec.embedding_dim = 16;
  spec.ambiguity = 0.2;
  const auto en = SyntheticLanguage::generate(spec);
  const auto fr = en.derive_related("fr", 0.0, 0.05, mix_seed(options.seed, "fr"));
  add_corpus(b, "en.tsv", en.sample(120, mix_seed(options.seed, 1)), kBaseColumns);
  add_corpus(b, "fr.tsv", fr.sample(120, mix_seed(options.seed, 2)), kBaseColumns);
  add_corpus(b, "fr-test.tsv", fr.sample(40, mix_seed(options.seed, 3), "t"), kBaseColumns);
  add_corpus(b, "fr-skyline.tsv", fr.sample(60, mix_seed(options.seed, 4), "k"), kBaseColumns);
  add_vectors(b, "en.vec", en.embeddings(1.0, mix_seed(options.seed, 5)));
  add_vectors(b, "fr.vec", fr.embeddings(1.0, mix_seed(options.seed, 6)));
  b.config = {
      {"protocol", "holdout"},
      {"seeds", options.run_seeds},
      {"workers", options.workers},
      {"pairs",
       {{{"language", "en"}, {"task", "pos"}, {"corpus", corpus_ref("en.tsv", "en", kBaseColumns)}},
        {{"language", "en"}, {"task", "sem"}, {"corpus", corpus_ref("en.tsv", "en", kBaseColumns)}},
        {{"language", "fr"}, {"task", "pos"}, {"corpus", corpus_ref("fr.tsv", "fr", kBaseColumns)}}}},
      {"held_out",
       {{"language", "fr"},
        {"task", "sem"},
        {"test", corpus_ref("fr-test.tsv", "fr", kBaseColumns)},
        {"skyline_train", corpus_ref("fr-skyline.tsv", "fr", kBaseColumns)}}},
      {"embeddings", {{"en", "en.vec"}, {"fr", "fr.vec"}}},
      {"tagger", {{"word_dim", 16}, {"epochs", 30}, {"patience", 5}, {"use_language_embedding", true}}}};
  return b;
}

FixtureBundle fixture_by_name(const std::string& protocol, const FixtureOptions& options) {
  if (protocol == "effectivity") return effectivity_fixture(options);
  if (protocol == "transfer") return transfer_fixture(options);
  if (protocol == "holdout") return holdout_fixture(options);
  throw ConfigError("unknown fixture '" + protocol + "' (expected effectivity, transfer or holdout)");
}

void write_bundle(const FixtureBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : bundle.files) write_text_file(dir / f.name, f.text);
  write_text_file(dir / "experiment.json", bundle.config.dump(2) + "\n");
}

}  // namespace lexshare
