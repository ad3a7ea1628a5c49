"""Leveled frequency-graph model for massive hierarchical data.

A directed graph with one level per random variable, one node per
outcome, and integer co-occurrence frequencies on the arcs. Training is
incremental and mergeable; queries score parent classification and
same-level relatedness. See the README for the file formats and CLI.
"""

from .errors import (
    AggregatedParseError,
    EmptyTermsError,
    InvalidModelError,
    InvalidSchemaError,
    LevelMismatchError,
    ModelFormatError,
    NoSharedParentError,
    ObservationError,
    ParseError,
    PGMHDError,
    SchemaMismatchError,
    UnknownNodeError,
    ZeroEvidenceError,
)
from .ingest import (
    IngestConfig,
    UserLogRecord,
    dedupe_triples,
    expand_and_dedupe,
    format_path_line,
    parse_path_line,
    parse_userlog_line,
    prefilter,
    train_sharded,
)
from .model import (
    ROOT,
    ROOT_LABEL,
    Model,
    ModelSchema,
    NodeRef,
    NodeStat,
    Observation,
)
from .persist import dumps, load, loads, save
from .scoring import (
    ScoredResult,
    classification_score,
    classify,
    edge_probability,
    related,
    similarity_log_score,
)
from .synth import generate_synthetic, planted_vocabulary

__version__ = "0.1.0"

__all__ = [
    "AggregatedParseError",
    "EmptyTermsError",
    "IngestConfig",
    "InvalidModelError",
    "InvalidSchemaError",
    "LevelMismatchError",
    "Model",
    "ModelFormatError",
    "ModelSchema",
    "NoSharedParentError",
    "NodeRef",
    "NodeStat",
    "Observation",
    "ObservationError",
    "PGMHDError",
    "ParseError",
    "ROOT",
    "ROOT_LABEL",
    "SchemaMismatchError",
    "ScoredResult",
    "UnknownNodeError",
    "UserLogRecord",
    "ZeroEvidenceError",
    "classification_score",
    "classify",
    "dedupe_triples",
    "dumps",
    "edge_probability",
    "expand_and_dedupe",
    "format_path_line",
    "generate_synthetic",
    "load",
    "loads",
    "parse_path_line",
    "parse_userlog_line",
    "planted_vocabulary",
    "prefilter",
    "related",
    "save",
    "similarity_log_score",
    "train_sharded",
    "__version__",
]
