"""Exception and warning types shared across the package.

Every error raised by this package derives from :class:`OocdError`, so
callers can catch one base type at pipeline boundaries while tests assert
on the precise subtype.
"""

from __future__ import annotations

__all__ = [
    "OocdError",
    "ParseError",
    "MissingImage",
    "InsufficientSamples",
    "CorpusValidationError",
    "BackendUnavailable",
    "GenerationFailed",
    "EncoderFailure",
    "DimensionMismatch",
    "MissingRecord",
    "ZeroVector",
    "LengthMismatch",
    "SingleClassData",
    "NonFiniteFeature",
    "ShapeMismatch",
    "EmptyInput",
    "SingleClassTruth",
    "ConfigError",
    "MissingArtifact",
    "DegenerateCovarianceWarning",
]


class OocdError(Exception):
    """Base class for all package errors."""


# -- corpus ---------------------------------------------------------------


class ParseError(OocdError):
    """Annotation row is malformed (bad JSON, missing or invalid field)."""

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


class MissingImage(OocdError):
    """A sample's image path does not resolve to a readable file."""

    def __init__(self, message: str, *, path: str | None = None):
        super().__init__(message)
        self.path = path


class InsufficientSamples(OocdError):
    """Requested more samples than the collection contains."""


class CorpusValidationError(OocdError):
    """Strict-mode validation failed; carries the full defect list."""

    def __init__(self, message: str, defects):
        super().__init__(message)
        self.defects = list(defects)


# -- generation -----------------------------------------------------------


class BackendUnavailable(OocdError):
    """No backend is registered under the requested id, or it cannot start."""


class GenerationFailed(OocdError):
    """A backend raised while producing an artifact."""

    def __init__(self, message: str, *, sample_id: str | None = None):
        super().__init__(message)
        self.sample_id = sample_id


# -- embedding ------------------------------------------------------------


class EncoderFailure(OocdError):
    """An encoder could not embed the given input."""


class DimensionMismatch(OocdError):
    """Vector length differs from the encoder's declared dimension."""


class MissingRecord(OocdError):
    """The store holds no record for (sample id, artifact, encoder)."""

    def __init__(self, message: str, *, sample_id: str | None = None,
                 artifact: str | None = None, encoder_id: str | None = None):
        super().__init__(message)
        self.sample_id = sample_id
        self.artifact = artifact
        self.encoder_id = encoder_id


# -- similarity -----------------------------------------------------------


class ZeroVector(OocdError):
    """Cosine similarity is undefined for a zero-norm vector."""


class LengthMismatch(OocdError):
    """Cosine similarity requires equal-length vectors."""


# -- classification -------------------------------------------------------


class SingleClassData(OocdError):
    """Training labels contain only one class."""


class NonFiniteFeature(OocdError):
    """A feature matrix contains NaN or infinite entries."""


class ShapeMismatch(OocdError):
    """Feature shape does not match what a model or assembler expects."""


# -- evaluation -----------------------------------------------------------


class EmptyInput(OocdError):
    """Metric called with empty inputs."""


class SingleClassTruth(OocdError):
    """AUC is undefined when only one class is present in the truth."""


# -- pipeline / CLI -------------------------------------------------------


class ConfigError(OocdError):
    """Run configuration is missing, unparseable, or invalid."""


class MissingArtifact(OocdError):
    """A stage dependency has not been produced yet."""

    def __init__(self, message: str, *, artifact: str | None = None):
        super().__init__(message)
        self.artifact = artifact


# -- warnings -------------------------------------------------------------


class DegenerateCovarianceWarning(UserWarning):
    """Training data rank is below the requested projection size."""
