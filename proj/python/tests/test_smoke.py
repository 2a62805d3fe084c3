import json
import math

import pytest

import lexshare

TSV = "the\tDET\tD\ndog\tNOUN\tN\nruns\tVERB\tV\n\na\tDET\tD\ncat\tNOUN\tN\n"


def test_parse_and_write_round_trip():
    corpus = lexshare.parse_tsv(TSV, ["pos", "coarse"], "en")
    assert len(corpus) == 2
    assert corpus.language == "en"
    assert corpus.sentences[0].forms() == ["the", "dog", "runs"]
    again = lexshare.parse_tsv(lexshare.write_tsv(corpus, ["pos", "coarse"]), ["pos", "coarse"], "en")
    assert [s.layer("pos") for s in again.sentences] == [s.layer("pos") for s in corpus.sentences]


def test_layer_stats_for_a_relabeling():
    corpus = lexshare.parse_tsv(TSV, ["pos", "coarse"])
    stats = lexshare.layer_stats(corpus, "pos", "coarse")
    p = [2 / 5, 2 / 5, 1 / 5]
    expected = -sum(x * math.log2(x) for x in p)
    assert stats["H_a"] == pytest.approx(expected, abs=1e-12)
    assert stats["I"] == pytest.approx(stats["H_a"], abs=1e-12)
    assert stats["H_b_given_a"] == pytest.approx(0.0, abs=1e-12)


def test_spearman_and_errors():
    rho, p = lexshare.spearman([1, 2, 3, 4], [2, 4, 6, 8], permutations=100, seed=1)
    assert rho == pytest.approx(1.0)
    assert 0 < p <= 1
    with pytest.raises(lexshare.UndefinedError):
        lexshare.spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(lexshare.ParseError):
        lexshare.parse_tsv("a\tB\tC\tD\n", ["pos"])


def test_tnt_tags_training_data():
    corpus = lexshare.parse_tsv(TSV, ["pos", "coarse"])
    model = lexshare.tnt_train(corpus, "pos")
    assert model.tags == ["DET", "NOUN", "VERB"]
    assert model.tag(["the", "dog", "runs"]) == ["DET", "NOUN", "VERB"]
    assert sum(model.lambdas) == pytest.approx(1.0)


def test_fixture_and_bad_config(tmp_path):
    lexshare.write_fixture("holdout", tmp_path, run_seeds=[1])
    config = json.loads((tmp_path / "experiment.json").read_text())
    assert config["protocol"] == "holdout"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"protocol": "nope", "seeds": [1]}))
    with pytest.raises(lexshare.ConfigError):
        lexshare.run_experiment(bad)
