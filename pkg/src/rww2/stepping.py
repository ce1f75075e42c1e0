"""Fixed-step fourth-order Runge-Kutta integration with blowup detection.

States are plain numpy arrays (real or complex, any shape); the tendency is
any callable ``rhs(y) -> dy``.  Blowup is data, not an exception: the loop
stops when the state leaves the finite range and reports the last good time.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from .errors import ConfigurationError

__all__ = ["IntegrationConfig", "BlowupReport", "IntegrationResult", "rk4_step", "integrate"]


@dataclass(frozen=True)
class IntegrationConfig:
    """Time step, horizon and sampling/blowup policy for one integration."""

    dt: float
    t_end: float
    sample_stride: int = 1
    blowup_threshold: float = 1e10
    cfl_constant: float = 0.5
    grid_spacing: float | None = None  # advisory; enables the dt <= C sqrt(dx) warning

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError(f"integration.dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ConfigurationError(f"integration.t_end must be nonnegative, got {self.t_end}")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ConfigurationError("integration.dt must not exceed integration.t_end")
        if self.sample_stride < 1:
            raise ConfigurationError("integration.sample_stride must be >= 1")
        if not self.blowup_threshold > 1:
            raise ConfigurationError("integration.blowup_threshold must exceed 1")


@dataclass(frozen=True)
class BlowupReport:
    time: float          # last time with a finite, below-threshold state
    trigger: str         # "nonfinite" or "threshold"
    detected_at: float   # time of the offending step


@dataclass
class IntegrationResult:
    times: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    final_time: float = 0.0
    final_state: np.ndarray | None = None
    blowup: BlowupReport | None = None
    n_steps: int = 0

    @property
    def blew_up(self):
        return self.blowup is not None


def rk4_step(y, rhs, dt):
    """One classical four-stage Runge-Kutta update."""
    k1 = rhs(y)
    k2 = rhs(y + (0.5 * dt) * k1)
    k3 = rhs(y + (0.5 * dt) * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _state_ok(y, threshold):
    if not np.isfinite(y).all():
        return "nonfinite"
    if np.abs(y).max() > threshold:
        return "threshold"
    return None


def integrate(y0, rhs, config, on_sample=None, t0=0.0):
    """Run the fixed-step loop from t0 to t0 + t_end.

    ``on_sample(t, y)`` is invoked at the initial state, every
    ``sample_stride``-th step and the final step; whatever it returns is
    collected in the result.  On blowup the loop stops and the report carries
    the last finite time.
    """
    if config.grid_spacing is not None:
        limit = config.cfl_constant * math.sqrt(config.grid_spacing)
        if config.dt > limit:
            warnings.warn(
                f"time step {config.dt} exceeds the advisory stability bound "
                f"{limit:.3g} = C sqrt(dx); continuing anyway",
                stacklevel=2,
            )
    result = IntegrationResult()
    y = np.array(y0, copy=True)
    n_steps = int(round(config.t_end / config.dt)) if config.t_end > 0 else 0
    if on_sample is not None:
        result.times.append(t0)
        result.samples.append(on_sample(t0, y))
    t_prev = t0
    for i in range(1, n_steps + 1):
        y_new = rk4_step(y, rhs, config.dt)
        t = t0 + i * config.dt
        bad = _state_ok(y_new, config.blowup_threshold)
        if bad is not None:
            result.blowup = BlowupReport(time=t_prev, trigger=bad, detected_at=t)
            result.final_time = t_prev
            result.final_state = y
            result.n_steps = i - 1
            return result
        y = y_new
        t_prev = t
        if on_sample is not None and (i % config.sample_stride == 0 or i == n_steps):
            result.times.append(t)
            result.samples.append(on_sample(t, y))
    result.final_time = t0 + n_steps * config.dt
    result.final_state = y
    result.n_steps = n_steps
    return result
