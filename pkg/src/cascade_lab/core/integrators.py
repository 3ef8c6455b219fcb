"""Fixed-step Runge-Kutta steppers for autonomous systems y' = f(y).

Both steppers are pure: they return a new array and never modify ``y``.
"""

from typing import Callable, Optional, Tuple

import numpy as np

Rhs = Callable[[np.ndarray], np.ndarray]


def rk4_step(f: Rhs, y: np.ndarray, dt: float) -> np.ndarray:
    """Advance y by one classical four-stage Runge-Kutta step.

    Parameters:
        f: right-hand side
        y: current state
        dt: step length
    Returns:
        state at t + dt
    """
    s1 = f(y)
    s2 = f(y + 0.5 * dt * s1)
    s3 = f(y + 0.5 * dt * s2)
    s4 = f(y + dt * s3)
    return y + (dt / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)


def integrating_factors(decay: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Return (exp(-decay * dt / 2), exp(-decay * dt)) for a fixed step."""
    half = np.exp(-0.5 * dt * decay)
    return half, half * half


def integrating_factor_rk4_step(
    nonlinear: Rhs,
    decay: np.ndarray,
    y: np.ndarray,
    dt: float,
    factors: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """RK4 for y' = -decay * y + N(y) with the linear part integrated exactly.

    The diagonal linear term is absorbed by the factor exp(-decay * t)
    (Lawson's scheme), so stiff damping at high wavenumber does not restrict
    dt. With decay == 0 this is exactly rk4_step applied to N. ``factors``
    takes the output of integrating_factors(decay, dt) for repeated steps.
    """
    half, full = factors if factors is not None else integrating_factors(decay, dt)
    s1 = nonlinear(y)
    s2 = nonlinear(half * (y + 0.5 * dt * s1))
    s3 = nonlinear(half * y + 0.5 * dt * s2)
    s4 = nonlinear(full * y + dt * half * s3)
    return full * y + (dt / 6.0) * (full * s1 + 2.0 * half * (s2 + s3) + s4)


def is_finite(y: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(y)))
