"""Exception hierarchy for cascade-lab.

Every failure the library raises on purpose derives from CascadeLabError so the
CLI can map it to an exit code without catching unrelated bugs.
"""

from typing import List, Optional


class CascadeLabError(Exception):
    """Base class for all cascade-lab errors."""

    pass


class ConfigValidationError(CascadeLabError):
    """Raised when a config file cannot be parsed or violates an invariant."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


class IntegrationDivergedError(CascadeLabError):
    """Raised when a trajectory produces non-finite or runaway values."""

    def __init__(
        self,
        model: str,
        step: int,
        t: float,
        dt: float,
        dt_key: str = "integrator.dt",
        hint: Optional[str] = None,
    ):
        self.model = model
        self.step = step
        self.t = t
        self.dt = dt
        self.dt_key = dt_key
        hint = hint or f"try a smaller {dt_key} than {dt:g}"
        super().__init__(f"{model} integration diverged at step {step} (t={t:.6g}); {hint}")


class FitError(CascadeLabError):
    """Raised when a statistical fit cannot be performed on the given data."""

    pass


class DomainError(CascadeLabError, ValueError):
    """Raised when a closed-form expression is evaluated outside its domain."""

    pass


class DegenerateExponentError(DomainError):
    """Raised for alpha = -2, where the n(W) exponent has a zero denominator."""

    pass


class PlotScriptError(CascadeLabError):
    """Raised when a plot script would reference a CSV that was not written."""

    pass


class RunError(CascadeLabError):
    """Raised when a run fails for a reason not covered by a specific error."""

    pass


class ConfigParseError(ConfigValidationError):
    """Raised when a config file is missing or is not well-formed TOML."""

    pass


class DimensionMismatchError(DomainError):
    """Raised when a state does not have one entry per grid shell."""

    pass
