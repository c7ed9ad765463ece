"""Relation extraction with contextualized relation embeddings.

Sentences are encoded into per-relation embedding rows, scored against
learned entity embeddings with a pluggable KB scoring function,
aggregated per entity pair, and trained against a normalized
multi-relation target.
"""

from .errors import (
    CheckpointError,
    ConfigError,
    CorpusFormatError,
    CreError,
    DataError,
    KBFormatError,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "CorpusFormatError",
    "CreError",
    "DataError",
    "KBFormatError",
]

__version__ = "0.1.0"
