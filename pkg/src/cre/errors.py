"""Exception hierarchy for the toolkit."""


class CreError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(CreError):
    """Malformed corpus file (bad JSON line, out-of-range entity index)."""


class KBFormatError(CreError):
    """Malformed knowledge-base triples file."""


class DataError(CreError):
    """Dataset construction or split produced an invalid result."""


class ConfigError(CreError):
    """Bad run configuration (unknown key, bad value, inconsistent dims)."""


class CheckpointError(CreError):
    """Unreadable, corrupted, or incompatible checkpoint file."""
