"""Exceptions raised by the library and mapped to exit codes by the CLI."""


class CivicError(Exception):
    """
    Base error for the package.

    Mirrors an HTTP error carrying a status code: every error knows the process
    exit code the CLI should return when it escapes a command.
    """

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigurationError(CivicError, ValueError):
    """Invalid or incomplete run configuration (missing files, bad values)."""

    exit_code = 2


class StageError(CivicError):
    """A pipeline stage failed; carries the name of the stage."""

    def __init__(self, stage: str, detail: str):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage


class IngestError(CivicError, ValueError):
    """Unreadable post archive."""


class NameModelError(CivicError, ValueError):
    """Invalid name, training set or persisted name model."""


class TopicModelError(CivicError, ValueError):
    """Invalid corpus or LDA parameters."""


class AttentionShapeError(CivicError, ValueError):
    """Matrix shapes do not conform for an attention computation."""


class ClassifierError(CivicError, ValueError):
    """Invalid training data for the text categorizer or sentiment lexicon."""


class GeoFusionError(CivicError, ValueError):
    """Invalid polygons, attribute tables or feature recipes."""


class UnmatchedBlockGroupError(GeoFusionError):
    """A located GEOID has no row in the attribute table."""


class GeocoderError(CivicError):
    """Base error for the remote reverse geocoder."""


class GeocoderTimeoutError(GeocoderError):
    """The geocoder did not answer in time."""


class GeocoderResponseError(GeocoderError):
    """The geocoder answered with a non-2xx status."""

    def __init__(self, status_code: int, detail: str):
        super().__init__(detail)
        self.status_code = status_code


class GeocoderParseError(GeocoderError):
    """The geocoder body is not JSON or carries no GEOID."""


class DesignMatrixError(CivicError, ValueError):
    """The design matrix violates the requirements of the logit estimator."""


class CollinearDesignError(DesignMatrixError):
    """Design columns are linearly dependent."""


class QuasiSeparationError(DesignMatrixError):
    """A coefficient diverged while iterating, i.e. outcomes are (nearly) separated."""


class ReportFormatError(CivicError, ValueError):
    """Unsupported output format for a table."""
