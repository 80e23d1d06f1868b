"""Exception types raised by the sampling engine and its front end."""


class BoundsError(ValueError):
    """A patch region does not lie fully inside its grid."""


class ShapeMismatchError(ValueError):
    """Operands have incompatible array shapes."""


class SingularityError(ArithmeticError):
    """A schedule coefficient makes the requested operation divide by zero."""


class NumericError(RuntimeError):
    """A numeric consistency check failed (non-finite values, FFT residue)."""


class ContractViolationError(RuntimeError):
    """A denoiser was invoked outside its declared limits.

    Raised when a patch larger than the denoiser's declared maximum is
    presented; doubles as the constant-memory tripwire.
    """


class SchedulingError(RuntimeError):
    """Patch scheduling failed (full ledger selection, livelock guard)."""


class ConfigError(ValueError):
    """Invalid run configuration. ``violations`` lists every problem found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class FormatError(ValueError):
    """Malformed or unsupported PNM image file."""
