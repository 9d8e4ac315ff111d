"""Exception hierarchy shared across the engine."""


class PolicyGraphError(Exception):
    """Base class for all engine errors."""

    code = "error"


class IntegrityError(PolicyGraphError):
    """Digest or dimension mismatch between declared and actual data."""

    code = "integrity"


class StateError(PolicyGraphError):
    """Illegal lifecycle transition or operation on a disabled resource."""

    code = "state"


class NotFoundError(PolicyGraphError):
    code = "not_found"


class ConflictError(PolicyGraphError):
    """Uniqueness violation or a decision that was already made."""

    code = "conflict"


class InputError(PolicyGraphError):
    """Invalid caller-supplied value."""

    code = "input"


class ConfigError(PolicyGraphError):
    """Missing or inconsistent configuration (query sets, providers, ...)."""

    code = "config"


class ProviderError(PolicyGraphError):
    """External provider unreachable or misbehaving; retryable."""

    code = "provider"


class UnsupportedFormatError(PolicyGraphError):
    """Document format needs an external provider that is not configured."""

    code = "unsupported_format"


class FetchError(PolicyGraphError):
    """Transport failure while fetching a source; retryable."""

    code = "fetch"

    def __init__(self, message, source_id=None):
        super().__init__(message)
        self.source_id = source_id


class StalenessError(PolicyGraphError):
    """Model trained under a different embedding epoch than the current one."""

    code = "stale_model"


class TrainingError(PolicyGraphError):
    """Training set does not satisfy the model preconditions."""

    code = "training"


class ExportError(PolicyGraphError):
    code = "export"


class OntologyError(PolicyGraphError):
    """Unknown predicate or domain/range violation."""

    code = "ontology"

    def __init__(self, message, expected=None, actual=None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class GraphImportError(PolicyGraphError):
    """Malformed or invalid triple text; carries the offending line number."""

    code = "import"

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class LeaseError(PolicyGraphError):
    """Review lease expired or is held by someone else."""

    code = "lease"


class PlanError(PolicyGraphError):
    """Requested pipeline stages violate the dependency order."""

    code = "plan"


class BusyError(PolicyGraphError):
    """An overlapping pipeline run is already in progress."""

    code = "busy"


class UndefinedMetricError(PolicyGraphError):
    """Metric has no defined value for this input (e.g. kappa with p_e = 1)."""

    code = "undefined_metric"
