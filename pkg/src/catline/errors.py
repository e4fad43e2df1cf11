"""Exception types raised by catline."""


class CatlineError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(CatlineError, ValueError):
    """Invalid Hilbert-space dimension or mismatched operator layouts."""


class TruncationError(CatlineError, ValueError):
    """Fock truncation too small for the requested cat amplitude."""


class DegenerateStateError(CatlineError, ValueError):
    """Requested state does not exist (e.g. odd cat at alpha = 0)."""


class StepSizeError(CatlineError, ValueError):
    """Integrator step violates the stability guard."""


class NumericalFailure(CatlineError, RuntimeError):
    """Integration lost positivity or trace beyond tolerance."""


class ConfigError(CatlineError, ValueError):
    """Malformed or invalid scenario configuration.

    ``line`` is set for parse errors, ``field`` for validation errors.
    """

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix = f"line {line}: "
        elif field is not None:
            prefix = f"{field}: "
        super().__init__(prefix + message)
