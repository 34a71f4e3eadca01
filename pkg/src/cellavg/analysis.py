"""Projection onto grids, discrete norms and moments, and EOC studies."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate as spi

from .cat import make_rhs
from .grid import GeometricParams, Grid, make_uniform_grid, refine_geometric
from .kernels import AnalyticReference, KernelSpec
from .timestepper import IntegrationConfig, integrate


class QuadratureError(RuntimeError):
    pass


def project_density(n: Callable, g: Grid, quad_tol: float = 1e-12) -> np.ndarray:
    """Cell integrals of the density ``n`` by adaptive quadrature."""
    out = np.empty(g.n_cells)
    b = g.boundaries
    for i in range(g.n_cells):
        with warnings.catch_warnings():
            warnings.simplefilter("error", spi.IntegrationWarning)
            try:
                val, err = spi.quad(lambda x: float(n(x)), b[i], b[i + 1],
                                    epsabs=quad_tol, epsrel=0.0, limit=200)
            except spi.IntegrationWarning as e:
                raise QuadratureError(f"quadrature failed on cell {i}: {e}") from None
        if not math.isfinite(val) or err > quad_tol:
            raise QuadratureError(f"quadrature on cell {i} missed tolerance (err={err:.2e})")
        out[i] = val
    return out


def l1_norm(v) -> float:
    return float(np.sum(np.abs(np.asarray(v, dtype=np.float64))))


def numerical_moment(N, g: Grid, k: int) -> float:
    """Pivot-weighted moment sum_i x_i^k N_i."""
    if k not in (0, 1, 2):
        raise ValueError(f"moment order must be 0, 1 or 2, got {k!r}")
    return float(np.sum(g.pivots**k * np.asarray(N, dtype=np.float64)))


def eoc(errors: Sequence[float], cells: Sequence[int]) -> np.ndarray:
    """Pairwise orders ln(e_m / e_{m+1}) / ln(I_{m+1} / I_m)."""
    e = np.asarray(errors, dtype=np.float64)
    n = np.asarray(cells, dtype=np.float64)
    return np.log(e[:-1] / e[1:]) / np.log(n[1:] / n[:-1])


@dataclass(frozen=True)
class GridFamily:
    """Refinement family: uniform on [0, R] or geometric on [R r^-I, R]."""

    kind: str
    R: float
    I: int
    r: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "geometric"):
            raise ValueError(f"unknown grid family {self.kind!r}")
        self.build()  # validates parameters

    def build(self) -> Grid:
        if self.kind == "uniform":
            return make_uniform_grid(self.R, self.I)
        return GeometricParams(self.R, self.I, self.r).build()

    def refine(self) -> "GridFamily":
        if self.kind == "uniform":
            return GridFamily("uniform", self.R, 2 * self.I)
        p = refine_geometric(GeometricParams(self.R, self.I, self.r))
        return GridFamily("geometric", p.R, p.I, p.r)

    @property
    def r_or_dx(self) -> float:
        return self.R / self.I if self.kind == "uniform" else float(self.r)


@dataclass
class LevelResult:
    level: int
    grid_type: str
    I: int
    r_or_dx: float
    error: float


@dataclass
class ConvergenceReport:
    levels: List[LevelResult]
    eoc: np.ndarray = field(default_factory=lambda: np.empty(0))

    def rows(self) -> List[dict]:
        out = []
        for m, lv in enumerate(self.levels):
            row = asdict(lv)
            row["eoc"] = float(self.eoc[m - 1]) if m > 0 else None
            out.append(row)
        return out

    def to_csv(self, header: Optional[dict] = None) -> str:
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "grid_type", "I", "r_or_dx", "error", "eoc"])
        for row in self.rows():
            w.writerow([
                row["level"], row["grid_type"], row["I"], fmt(row["r_or_dx"]),
                fmt(row["error"]), "" if row["eoc"] is None else fmt(row["eoc"]),
            ])
        return buf.getvalue()

    def to_json(self, header: Optional[dict] = None) -> str:
        doc = {"levels": self.rows()}
        if header is not None:
            doc = {"spec": header, **doc}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def fmt(x: float) -> str:
    """Locale-independent 17-significant-digit float."""
    return format(float(x), ".17g")


def run_level(fam: GridFamily, kern: KernelSpec, ref: AnalyticReference,
              T: float, dt: float, quad_tol: float = 1e-12):
    """Simulate one level; returns (grid, exact cell counts at T, numerical cell counts at T)."""
    g = fam.build()
    N0 = project_density(ref.density_at(0.0), g, quad_tol)
    traj = integrate(N0, IntegrationConfig(T, dt, record_every=10**9), make_rhs(g, kern))
    exact = project_density(ref.density_at(T), g, quad_tol)
    return g, exact, traj.final


def run_convergence_study(family: GridFamily, levels: int, kern: KernelSpec,
                          ref: AnalyticReference, T: float, dt: float,
                          quad_tol: float = 1e-12,
                          progress: Optional[Callable[[LevelResult], None]] = None) -> ConvergenceReport:
    """Errors ||N(T) - N_hat(T)||_1 on successively doubled grids and their EOC."""
    if levels < 3:
        raise ValueError(f"need at least 3 levels, got {levels}")
    results = []
    fam = family
    for m in range(levels):
        _, exact, num = run_level(fam, kern, ref, T, dt, quad_tol)
        lv = LevelResult(m, fam.kind, fam.I, fam.r_or_dx, l1_norm(exact - num))
        results.append(lv)
        if progress is not None:
            progress(lv)
        fam = fam.refine()
    orders = eoc([lv.error for lv in results], [lv.I for lv in results])
    return ConvergenceReport(results, orders)
