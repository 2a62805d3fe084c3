#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lexshare/corpus.hpp"
#include "lexshare/error.hpp"
#include "lexshare/experiment.hpp"
#include "lexshare/fixtures.hpp"
#include "lexshare/pipeline.hpp"
#include "lexshare/tagstats.hpp"
#include "lexshare/tnt.hpp"

namespace py = pybind11;
using namespace lexshare;

namespace {

py::dict layer_stats(const Corpus& corpus, const std::string& a, const std::string& b) {
  const auto j = joint_distribution(corpus, a, b);
  py::dict out;
  out["H_a"] = entropy(j.marginal_a);
  out["H_b"] = entropy(j.marginal_b);
  out["I"] = mutual_information(j);
  out["H_a_given_b"] = conditional_entropy(j.transposed());
  out["H_b_given_a"] = conditional_entropy(j);
  out["tokens"] = j.total;
  return out;
}

std::string run_experiment_file(const std::filesystem::path& config, const std::string& format) {
  const auto j = read_json_file(config);
  return run_experiment(j, config.parent_path(), parse_report_format(format)).report;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tag-layer statistics, TnT baseline and experiment runner";
  m.attr("__version__") = kToolkitVersion;

  auto base = py::register_exception<Error>(m, "LexshareError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<UndefinedError>(m, "UndefinedError", base.ptr());

  py::class_<Token>(m, "Token")
      .def_readonly("form", &Token::form)
      .def_readonly("tags", &Token::tags);
  py::class_<Sentence>(m, "Sentence")
      .def_readonly("id", &Sentence::id)
      .def_readonly("tokens", &Sentence::tokens)
      .def("layer", &Sentence::layer)
      .def("forms", &Sentence::forms)
      .def("__len__", &Sentence::size);
  py::class_<Corpus>(m, "Corpus")
      .def_readonly("language", &Corpus::language)
      .def_readonly("layers", &Corpus::layers)
      .def_readonly("sentences", &Corpus::sentences)
      .def("token_count", &Corpus::token_count)
      .def("__len__", [](const Corpus& c) { return c.sentences.size(); });

  m.def("parse_tsv", [](const std::string& text, const std::vector<std::string>& columns,
                        const std::string& language) { return parse_tsv(text, columns, language); },
        py::arg("text"), py::arg("columns"), py::arg("language") = "und");
  m.def("parse_conllu", [](const std::string& text, const std::string& language) { return parse_conllu(text, language); },
        py::arg("text"), py::arg("language") = "und");
  m.def("write_tsv", [](const Corpus& c, const std::vector<std::string>& columns) { return write_tsv(c, columns); });
  m.def("write_conllu", &write_conllu);
  m.def("shuffle_labels", &shuffle_labels, py::arg("corpus"), py::arg("layer"), py::arg("seed"));

  m.def("layer_stats", &layer_stats, py::arg("corpus"), py::arg("layer_a"), py::arg("layer_b"),
        "Entropies, mutual information and conditional entropies of two layers, in bits.");
  m.def(
      "spearman",
      [](const std::vector<double>& xs, const std::vector<double>& ys, std::uint64_t permutations, std::uint64_t seed) {
        const auto r = spearman_rho(xs, ys, {permutations, seed});
        return py::make_tuple(r.rho, r.p_value);
      },
      py::arg("xs"), py::arg("ys"), py::arg("permutations") = 10000, py::arg("seed") = 20180501);

  py::class_<TntModel>(m, "TntModel")
      .def_readonly("tags", &TntModel::tags)
      .def_readonly("lambdas", &TntModel::lambdas)
      .def("tag", [](const TntModel& model, const std::vector<std::string>& words) {
        std::vector<std::string> out;
        for (auto t : tnt_decode(model, words)) out.push_back(model.tags[t]);
        return out;
      });
  m.def("tnt_train", &tnt_train, py::arg("corpus"), py::arg("layer"));

  m.def("run_experiment", &run_experiment_file, py::arg("config"), py::arg("report_format") = "json",
        "Runs an experiment config file and returns the report text.");
  m.def(
      "write_fixture",
      [](const std::string& protocol, const std::filesystem::path& out_dir, std::uint64_t seed,
         std::vector<std::uint64_t> run_seeds) {
        FixtureOptions options;
        options.seed = seed;
        options.run_seeds = std::move(run_seeds);
        write_bundle(fixture_by_name(protocol, options), out_dir);
      },
      py::arg("protocol"), py::arg("out_dir"), py::arg("seed") = 100,
      py::arg("run_seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5});
}
