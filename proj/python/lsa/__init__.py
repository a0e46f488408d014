"""Local sentiment aggregation for aspect-based sentiment classification."""

from ._lsa import (
    AlignmentError,
    DataError,
    DimensionError,
    LsaError,
    NumericError,
    ParseError,
    SchemaError,
    UsageError,
    build_spc_input,
    cluster_histogram,
    compute_metrics,
    evaluate,
    iqr,
    median,
    parse_grid,
    position_weight,
    relative_token_distance,
    run_cli,
    syntactic_distance,
    synthesize,
    tokenize,
    train,
    tree_shortest_distance,
)

__version__ = "0.1.0"
