"""Fixed-step explicit RK4 integration of the semi-discrete system."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .grid import Grid
from .kernels import KernelSpec, kernel_matrix

RhsFn = Callable[[np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    """Time integration produced a non-finite state."""

    def __init__(self, msg: str, t: float = math.nan, i: int = -1):
        super().__init__(msg)
        self.t = t
        self.i = i


class NegativityError(IntegrationError):
    """A cell count dropped below the negativity tolerance."""


@dataclass(frozen=True)
class IntegrationConfig:
    t_end: float
    dt: float
    negativity_tolerance: float = 1e-12
    record_every: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError(f"t_end must be >= 0, got {self.t_end!r}")
        if not self.negativity_tolerance >= 0:
            raise ValueError("negativity_tolerance must be >= 0")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be an integer >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n_records, I)

    def __len__(self):
        return self.times.size

    def __iter__(self):
        return iter(zip(self.times, self.states))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _check_finite(N: np.ndarray, t: float) -> None:
    bad = ~np.isfinite(N)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise IntegrationError(f"non-finite state at t={t:.6g}, cell {i}", t, i)


def rk4_step(N: np.ndarray, dt: float, f: RhsFn) -> np.ndarray:
    """One classical four-stage Runge-Kutta step of dN/dt = f(N)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    N = np.asarray(N, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = f(N)
        k2 = f(N + 0.5 * dt * k1)
        k3 = f(N + 0.5 * dt * k2)
        k4 = f(N + dt * k3)
        out = N + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    bad = ~np.isfinite(out)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise IntegrationError(f"non-finite value in RK4 step (cell {i})", i=i)
    return out


def integrate(N0, cfg: IntegrationConfig, f: RhsFn) -> Trajectory:
    """Integrate from t=0 to cfg.t_end, recording every ``record_every`` steps.

    The last step is shortened to land on t_end exactly, and the final state
    is always recorded. Every step is checked for negativity; entries within
    the tolerance are clamped to zero.
    """
    N = np.array(N0, dtype=np.float64)
    _check_finite(N, 0.0)
    if (N < 0).any():
        i = int(np.argmin(N))
        raise NegativityError(f"initial state negative in cell {i}", 0.0, i)

    n_steps = int(math.ceil(cfg.t_end / cfg.dt - 1e-9)) if cfg.t_end > 0 else 0
    times: List[float] = [0.0]
    states: List[np.ndarray] = [N.copy()]
    t = 0.0
    for step in range(1, n_steps + 1):
        h = cfg.dt if step < n_steps else cfg.t_end - (n_steps - 1) * cfg.dt
        try:
            N = rk4_step(N, h, f)
        except IntegrationError as e:
            raise IntegrationError(f"non-finite state at t={t + h:.6g}, cell {e.i}", t + h, e.i) from None
        t = cfg.t_end if step == n_steps else step * cfg.dt
        m = N.min()
        if m < 0:
            if m < -cfg.negativity_tolerance:
                i = int(np.argmin(N))
                raise NegativityError(
                    f"negative count {m:.3e} at t={t:.6g}, cell {i}", t, i
                )
            N[N < 0] = 0.0
        if step % cfg.record_every == 0 or step == n_steps:
            times.append(t)
            states.append(N.copy())
    return Trajectory(np.array(times), np.array(states))


def suggest_dt(N, g: Grid, k: KernelSpec, safety: float = 0.1) -> float:
    """safety / max_i sum_j beta(x_i, x_j) N_j, or ``safety`` when that is zero."""
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    N = np.asarray(N, dtype=np.float64)
    rate = float(np.max(kernel_matrix(k, g.pivots) @ N)) if N.size else 0.0
    if rate <= 0:
        return float(safety)
    return safety / rate
