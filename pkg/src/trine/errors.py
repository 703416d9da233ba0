"""Exception types shared across the package."""


class TrineError(Exception):
    """Base class for all errors raised by this package."""


class EdgeListError(TrineError):
    """Malformed edge-list input. Carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SchemaError(TrineError):
    """Node label or metapath inconsistent with the declared schema."""


class ConfigError(TrineError):
    """Invalid configuration value or combination."""


class SamplerError(TrineError):
    """Negative sampling cannot produce a valid sample."""


class NonFiniteError(TrineError):
    """A parameter update produced NaN or Inf."""


class EmbeddingFileError(TrineError):
    """Malformed embedding file. Carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EvalError(TrineError):
    """Evaluation harness cannot proceed (degenerate data or metrics)."""
