"""Exception taxonomy, aligned with the CLI exit codes."""


class StutterkitError(Exception):
    """Base class for all package errors."""


class AudioFormatError(StutterkitError):
    """Unreadable, empty, corrupt, or unsupported audio payload."""


class InsufficientSpeechError(StutterkitError):
    """Too little detected speech for a rate estimate; caller should
    request a longer calibration sample."""


class AlignmentError(StutterkitError):
    """Malformed word alignment (overlapping or retrograde intervals)."""


class AnnotationParseError(StutterkitError):
    """Annotation or alignment file failed to parse; message carries the
    offending line number."""


class ConfigError(StutterkitError):
    """RuleConfig invariant violation."""
