"""Domain exception hierarchy.

The CLI maps every :class:`NpacLabError` to exit code 1 with a
machine-parseable ``error:`` line; anything else is a bug.
"""


class NpacLabError(Exception):
    """Base class for all domain errors."""

    code = "domain_error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class ModelMismatchError(NpacLabError):
    """An NPac references primaries the table does not carry."""

    code = "model_mismatch"


class InvalidNPacError(NpacLabError):
    """NPac weights violate convexity or id constraints."""

    code = "invalid_npac"


class EnumerationCapError(NpacLabError):
    """Full NP materialization was refused above the configured cap."""

    code = "enumeration_cap"


class DegenerateGamutError(NpacLabError):
    """The NP cloud does not span a volume; no hull can be built."""

    code = "degenerate_gamut"


class OutOfGamutError(NpacLabError):
    """Target color is unreachable; carries the closest surface match."""

    code = "out_of_gamut"

    def __init__(self, message, closest=None, **details):
        super().__init__(message, **details)
        self.closest = closest


class NonConvergenceError(NpacLabError):
    """An iterative solve missed its tolerance at the iteration cap."""

    code = "non_convergence"

    def __init__(self, message, residuals=None, **details):
        super().__init__(message, **details)
        self.residuals = residuals or []


class FileFormatError(NpacLabError):
    """A press/table/chart/LUT file failed structural validation."""

    code = "bad_file"
