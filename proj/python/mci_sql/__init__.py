from ._core import (
    ConfigError,
    GatewayError,
    MciError,
    ParseError,
    abstract_pattern,
    ask,
    bench,
    build_profile,
    default_schedule,
    execute,
    execution_match,
    linking_score,
    load_config,
    load_dataset,
    mine_patterns,
    normalize,
    parses,
    references,
    render_schema,
    vote,
)

__all__ = [
    "ConfigError",
    "GatewayError",
    "MciError",
    "ParseError",
    "abstract_pattern",
    "ask",
    "bench",
    "build_profile",
    "default_schedule",
    "execute",
    "execution_match",
    "linking_score",
    "load_config",
    "load_dataset",
    "mine_patterns",
    "normalize",
    "parses",
    "references",
    "render_schema",
    "vote",
]
