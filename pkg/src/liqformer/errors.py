"""Exception hierarchy shared across the package."""


class LiqformerError(Exception):
    """Base class for all package errors."""


class InputError(LiqformerError):
    """Rejected input values (non-finite samples, bad ranges, bad units)."""


class SchemaError(InputError):
    """File or payload does not match the declared schema."""


class RowError(InputError):
    """A single record failed validation; carries the 1-based row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class DomainError(InputError):
    """Value outside the mathematical domain of a formula."""


class ShapeError(LiqformerError):
    """Tensor or configuration shape mismatch."""


class ConfigError(LiqformerError):
    """Invalid configuration value."""


class StateError(LiqformerError):
    """Operation invoked in an invalid state (e.g. backward before forward)."""


class FitError(LiqformerError):
    """Estimator could not be fitted from the given data."""


class SplitError(LiqformerError):
    """Requested data partition is impossible."""


class CapacityError(LiqformerError):
    """Problem size exceeds a hard limit of the exact algorithm."""
