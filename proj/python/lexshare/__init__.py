"""Python access to the lexshare toolkit."""

from ._core import (
    ConfigError,
    Corpus,
    LexshareError,
    ParseError,
    TntModel,
    UndefinedError,
    __version__,
    layer_stats,
    parse_conllu,
    parse_tsv,
    run_experiment,
    shuffle_labels,
    spearman,
    tnt_train,
    write_conllu,
    write_fixture,
    write_tsv,
)

__all__ = [
    "ConfigError",
    "Corpus",
    "LexshareError",
    "ParseError",
    "TntModel",
    "UndefinedError",
    "__version__",
    "layer_stats",
    "parse_conllu",
    "parse_tsv",
    "run_experiment",
    "shuffle_labels",
    "spearman",
    "tnt_train",
    "write_conllu",
    "write_fixture",
    "write_tsv",
]
