"""Corpus annotation and processing: CoNLL-U Plus handling, span tooling,
GeoNames linking, descriptor classification, statistics and the task service."""

from ._corpusflow import (  # noqa: F401
    Conflict,
    Document,
    Error,
    GeonamesIndex,
    InvalidArgument,
    LinearModel,
    NotFound,
    ParseError,
    Service,
    anonymize,
    evaluate_labels,
    io_to_iob,
    link_geonames,
    parse_conllu,
    resolve_operations,
    spans_to_iob,
    stats_csv,
)

__version__ = "0.3.0"
