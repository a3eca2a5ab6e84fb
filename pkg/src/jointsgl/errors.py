"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when user-supplied values violate a documented precondition."""


class AlignmentError(InvalidInputError):
    """Raised when two predictor matrices share no feature names."""


class DataFormatError(ValueError):
    """Raised for malformed files; message carries path and line when known."""


class SolverError(RuntimeError):
    """Raised when an optimizer produces non-finite values."""


class CalibrationError(RuntimeError):
    """Raised when censoring-rate calibration cannot bracket its target."""
