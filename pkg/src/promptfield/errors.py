"""Typed errors shared across the package."""


class PromptFieldError(Exception):
    """Base class for every error raised by this package."""


class InvalidPrompt(PromptFieldError):
    """Prompt is empty or otherwise unusable."""


class PromptNotCached(PromptFieldError):
    """Cache provider has no entry for the requested prompt."""


class EmbeddingServiceError(PromptFieldError):
    """Remote embedding endpoint failed after retries."""


class DimensionMismatch(PromptFieldError):
    """Vector or array shapes disagree with the configured sizes."""


class UnsupportedGrid(PromptFieldError):
    """Field grid resolution outside the supported set {2, 5, 10}."""


class NumericalError(PromptFieldError):
    """A computation produced non-finite or out-of-contract values."""


class UnsupportedVersion(PromptFieldError):
    """Checkpoint written by an incompatible format version."""


class CorruptCheckpoint(PromptFieldError):
    """Checkpoint file is structurally broken or inconsistent."""


class PlacementError(PromptFieldError):
    """Could not place agents without overlap within the attempt budget."""


class NoScoreFound(PromptFieldError):
    """Evaluator reply contains no usable score."""


class EvaluatorUnavailable(PromptFieldError):
    """Scoring endpoint unreachable after retries."""


class UnparseableReply(PromptFieldError):
    """Evaluator kept answering, but never with a parseable score."""


class TransportError(PromptFieldError):
    """One failed HTTP exchange; callers may retry."""


class DegenerateWorld(PromptFieldError):
    """World has too few agents for the requested statistic."""


class AllZeroDifferences(PromptFieldError):
    """Every paired difference is zero; the signed-rank test is undefined."""


class IncompatibleGenomes(PromptFieldError):
    """Genomes come from different architectures."""


class EvolutionAborted(PromptFieldError):
    """Evolution stopped on a hard failure outside per-candidate fallback."""


class ConfigError(PromptFieldError):
    """Configuration value outside its documented range."""


class SessionNotFound(PromptFieldError):
    """No live steering session with that id."""


class ParseError(PromptFieldError):
    """Malformed structured text input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
