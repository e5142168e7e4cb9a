"""Exception types shared across the package.

Every error carries a stable ``code`` string so callers (and the CLI) can
dispatch on the failure condition without parsing messages.
"""


class BatchSearchError(Exception):
    """Base class for all batchsearch errors."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class EnvironmentInvalid(BatchSearchError):
    """Raised when a pool/label/batch-size triple violates an invariant.

    Codes: EMPTY_POOL, UNEQUAL_LENGTHS, LABEL_RANGE, BATCH_TOO_LARGE,
    ALPHABET_MISMATCH, CONFIG_INVALID.
    """


class ObservationInvalid(BatchSearchError):
    """Raised on an ill-formed batch observation.

    Codes: DUPLICATE_SELECTION, OUT_OF_POOL, SIZE_MISMATCH.
    """


class DatasetParseError(BatchSearchError):
    """Raised when a dataset file cannot be parsed. Code: PARSE_ERROR."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__("PARSE_ERROR", message)
        self.row = row


class TrainingError(BatchSearchError):
    """Raised by the surrogate trainer. Codes: EMPTY_LOG, SHAPE_MISMATCH."""


class GPNumericalError(BatchSearchError):
    """Raised by the GP module. Codes: SINGULAR_KERNEL, SHAPE_MISMATCH."""


class SelectionError(BatchSearchError):
    """Raised by agent policies. Code: INSUFFICIENT_UNOBSERVED."""


class HarnessError(BatchSearchError):
    """Raised by the benchmark harness.

    Codes: RHO_DEGENERATE, SIZE_MISMATCH, NEGATIVE_STEP, POOL_EXHAUSTED,
    INSUFFICIENT_TRIALS.
    """


class ConfigError(BatchSearchError):
    """Raised for malformed run configuration files. Code: CONFIG_INVALID."""

    def __init__(self, message: str):
        super().__init__("CONFIG_INVALID", message)
