"""Coagulation kernels and the closed-form constant-kernel reference solution."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

KERNEL_FAMILIES = ("constant", "sum", "product")


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric coagulation rate beta(x, y).

    ``family`` is one of ``constant`` (beta = c), ``sum`` (beta = a(x+y)),
    ``product`` (beta = a x y) or ``custom``. Custom kernels carry their own
    vectorised ``func``; symmetry is the caller's responsibility.

    Product kernels gel at finite time (t = 1/a for the exponential initial
    datum), after which the truncated simulation no longer tracks the
    physical solution.
    """

    family: str
    param: float = 1.0
    func: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        if self.family == "custom":
            if self.func is None:
                raise ValueError("custom kernel needs func")
        elif self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        elif not np.isfinite(self.param) or self.param < 0:
            raise ValueError(f"kernel parameter must be finite and >= 0, got {self.param!r}")

    def __call__(self, x, y):
        return kernel_eval(self, x, y)

    @property
    def name(self) -> str:
        return self.family


def constant_kernel(c: float = 1.0) -> KernelSpec:
    return KernelSpec("constant", c)


def sum_kernel(a: float = 1.0) -> KernelSpec:
    return KernelSpec("sum", a)


def product_kernel(a: float = 1.0) -> KernelSpec:
    return KernelSpec("product", a)


def custom_kernel(func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> KernelSpec:
    return KernelSpec("custom", func=func)


def make_kernel(name: str, param: float = 1.0) -> KernelSpec:
    """Kernel from a family name, as used by the command line."""
    if name not in KERNEL_FAMILIES:
        raise ValueError(f"unknown kernel {name!r}; choose from {', '.join(KERNEL_FAMILIES)}")
    return KernelSpec(name, param)


def kernel_eval(k: KernelSpec, x, y):
    """Evaluate beta(x, y); broadcasts over arrays, returns float for scalars."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if k.family == "constant":
        out = np.full(np.broadcast(x, y).shape, k.param)
    elif k.family == "sum":
        out = k.param * (x + y)
    elif k.family == "product":
        out = k.param * (x * y)
    else:
        out = np.asarray(k.func(x, y), dtype=np.float64)
        out = np.broadcast_to(out, np.broadcast(x, y).shape)
    if out.ndim == 0:
        return float(out)
    return out


def kernel_matrix(k: KernelSpec, pivots: np.ndarray) -> np.ndarray:
    """Matrix beta(x_i, x_j) over all pivot pairs."""
    return np.asarray(kernel_eval(k, pivots[:, None], pivots[None, :]), dtype=np.float64)


def initial_condition_exponential() -> Callable:
    """Number density n(0, x) = exp(-x): unit total number and unit total mass."""
    return lambda x: np.exp(-np.asarray(x, dtype=np.float64))


INITIAL_CONDITIONS = {"exponential": initial_condition_exponential}


@dataclass(frozen=True)
class AnalyticReference:
    """Reference solution: number density and low-order moments over time."""

    density_fn: Callable[[float, np.ndarray], np.ndarray]
    moment_fn: Callable[[float, int], float]

    def density(self, t: float, x):
        return self.density_fn(t, x)

    def density_at(self, t: float) -> Callable:
        return lambda x: self.density_fn(t, x)

    def moment(self, t: float, k: int) -> float:
        return self.moment_fn(t, k)


def _const_density(t, x):
    s = t + 2.0
    return 4.0 / s**2 * np.exp(-2.0 * np.asarray(x, dtype=np.float64) / s)


def _const_moment(t, k):
    if k == 0:
        return 2.0 / (t + 2.0)
    if k == 1:
        return 1.0
    raise ValueError("only moments of order 0 and 1 are available")


def analytic_constant_kernel_reference(c: float = 1.0) -> AnalyticReference:
    """Solution for beta = c with n(0, x) = exp(-x).

    For c = 1: n(t, x) = 4/(t+2)^2 exp(-2x/(t+2)), M0(t) = 2/(t+2),
    M1(t) = 1. Other c rescale time, t -> c t.
    """
    if not c > 0:
        raise ValueError("kernel constant must be positive")
    return AnalyticReference(lambda t, x: _const_density(c * t, x),
                             lambda t, k: _const_moment(c * t, k))


def analytic_truncated_constant_kernel_reference(R: float, c: float = 1.0) -> AnalyticReference:
    """Solution for beta = c, n(0, x) = exp(-x), of the equation truncated to ]0, R].

    Truncation only removes the death of particles in ]0, R] by partners
    larger than R. The solution is a time-warped rescaling of the
    untruncated one, n_R(t, x) = a(t) n(s(t), x) on ]0, R], where
        s' = a,   a' = a^2 * int_R^inf n(s, y) dy,   a(0) = 1, s(0) = 0
    (written for c = 1; other c rescale time). The two scalar ODEs are
    integrated to near machine precision for each requested time. The
    parameterisation degenerates (s -> inf) at a finite time that shrinks
    with R; asking beyond it raises ValueError. Density is zero beyond R.
    """
    from scipy.integrate import solve_ivp

    if not R > 0:
        raise ValueError("R must be positive")
    if not c > 0:
        raise ValueError("kernel constant must be positive")

    def tail(s):
        q = 2.0 / (s + 2.0)
        return q * np.exp(-q * R)

    def ode(_t, y):
        a, s = y
        return [a * a * tail(s), a]

    @lru_cache(maxsize=256)
    def warp(t: float):
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        if t == 0:
            return 1.0, 0.0
        sol = solve_ivp(ode, (0.0, c * t), [1.0, 0.0], method="DOP853",
                        rtol=1e-13, atol=1e-16)
        if not sol.success:
            raise ValueError(f"truncated reference undefined at t={t}: {sol.message}")
        return float(sol.y[0, -1]), float(sol.y[1, -1])

    def density(t, x):
        a, s = warp(float(t))
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= R, a * _const_density(s, x), 0.0)

    def moment(t, k):
        a, s = warp(float(t))
        q = 2.0 / (s + 2.0)
        e = np.exp(-q * R)
        if k == 0:
            return float(a * q * (1.0 - e))
        if k == 1:
            return float(a * (1.0 - e * (1.0 + q * R)))
        raise ValueError("only moments of order 0 and 1 are available")

    return AnalyticReference(density, moment)
