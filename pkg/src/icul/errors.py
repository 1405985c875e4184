"""Exception hierarchy.

Every exception carries a machine-readable ``category`` string that the CLI
emits on stderr, so callers can branch on failure kinds without parsing
messages.
"""


class IculError(Exception):
    category = "error"


class ParseError(IculError):
    """Malformed input record; message names the offending line."""

    category = "parse"


class SanitizationError(IculError):
    """Record text or label contains a prompt separator."""

    category = "sanitization"


class SizeError(IculError):
    """A requested sample or split does not fit the available data."""

    category = "size"


class ConfigError(IculError):
    category = "config"


class OverlapError(IculError):
    """Sets required to be disjoint share elements."""

    category = "overlap"


class CoverageError(IculError):
    """A label in the label set has no training examples."""

    category = "coverage"


class LabelError(IculError):
    """A label outside the corpus label set was used."""

    category = "label"


class DivergenceError(IculError):
    """Weights left the finite guard region during an update."""

    category = "divergence"


class SampleSizeError(IculError):
    """Too few scores to fit a distribution."""

    category = "sample-size"


class AlignmentError(IculError):
    """Per-point inputs have mismatched lengths."""

    category = "alignment"


class ClassError(IculError):
    """Both hypothesis classes are required but only one is present."""

    category = "class"


class CapabilityError(IculError):
    """The unlearning method cannot run against this backend."""

    category = "capability"


class BackendError(IculError):
    """Remote backend transport failure; carries the HTTP status if any."""

    category = "backend"

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class IncompleteLogprobsError(IculError):
    """A label token is missing from the returned log-probabilities."""

    category = "incomplete-logprobs"


class IntegrityError(IculError):
    """A persisted artifact is missing or fails its digest check."""

    category = "integrity"


class DependencyError(IculError):
    """A pipeline stage ran before the stage it depends on."""

    category = "dependency"
