"""Exception types shared across the package."""


class SpanObjError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(SpanObjError, ValueError):
    """Arguments violate a precondition (shape, finiteness, range)."""


class DegenerateInputError(InvalidInputError):
    """Structurally empty input, e.g. an all-masked span matrix."""


class InvalidTargetError(SpanObjError, ValueError):
    """Supervision target out of range or masked out."""


class NoSupervisionError(SpanObjError, ValueError):
    """Shared-normalization instance whose ground-truth sets are all empty."""


class OracleFailureError(SpanObjError, RuntimeError):
    """The finite-difference oracle hit a non-finite function value."""


class DegenerateSampleError(SpanObjError, ValueError):
    """Statistical sample with zero variance."""


class DegeneratePairsError(SpanObjError, ValueError):
    """Paired test with zero difference variance; no p-value is defined."""


class DivergenceError(SpanObjError, RuntimeError):
    """Training produced a non-finite loss."""


class VocabularyError(SpanObjError, ValueError):
    """Token id outside the embedding table."""


class ConfigError(SpanObjError, ValueError):
    """Invalid or unknown configuration values."""
