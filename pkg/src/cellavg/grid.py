"""Partitions of the volume domain ]0, R] into cells with midpoint pivots.

Cell indices are 0-based throughout the package: cell ``i`` spans
``boundaries[i]`` to ``boundaries[i + 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell boundaries, midpoint pivots and widths of a 1-D volume grid.

    Instances are immutable; use one of the constructors below rather than
    building one directly.
    """

    boundaries: np.ndarray
    pivots: np.ndarray
    widths: np.ndarray
    quasi_uniformity: float
    kind: str = "custom"

    @property
    def n_cells(self) -> int:
        return self.pivots.size

    @property
    def left(self) -> float:
        return float(self.boundaries[0])

    @property
    def right(self) -> float:
        return float(self.boundaries[-1])

    def target_cell(self, v: float) -> Optional[int]:
        return target_cell(self, v)


def _from_boundaries(b: np.ndarray, kind: str) -> Grid:
    b = np.asarray(b, dtype=np.float64)
    pivots = 0.5 * (b[:-1] + b[1:])
    widths = np.diff(b)
    k = float(widths.max() / widths.min())
    return Grid(_frozen(b), _frozen(pivots), _frozen(widths), k, kind)


def make_uniform_grid(R: float, I: int) -> Grid:
    """Uniform grid on [0, R] with ``I`` cells of width R/I."""
    if not (math.isfinite(R) and R > 0):
        raise ValueError(f"R must be positive and finite, got {R!r}")
    if int(I) != I or I < 1:
        raise ValueError(f"cell count must be an integer >= 1, got {I!r}")
    I = int(I)
    # i*R/I rather than linspace: keeps boundaries exact for dyadic R/I
    b = np.arange(I + 1, dtype=np.float64) * R / I
    b[-1] = R
    g = _from_boundaries(b, "uniform")
    return Grid(g.boundaries, g.pivots, g.widths, 1.0, "uniform")


def make_geometric_grid(R: float, I: int, r: float) -> Grid:
    """Geometric grid with boundaries ``R * r**(i - I)`` for i = 0..I.

    Consecutive boundaries have constant ratio ``r`` and the leftmost
    boundary is ``R * r**-I > 0``.
    """
    if not (math.isfinite(R) and R > 0):
        raise ValueError(f"R must be positive and finite, got {R!r}")
    if int(I) != I or I < 2:
        raise ValueError(f"geometric grid needs an integer cell count >= 2, got {I!r}")
    if not (math.isfinite(r) and r > 1):
        raise ValueError(f"ratio r must be > 1, got {r!r}")
    I = int(I)
    b = R * np.power(float(r), np.arange(-I, 1, dtype=np.float64))
    b[-1] = R
    g = _from_boundaries(b, "geometric")
    return Grid(g.boundaries, g.pivots, g.widths, float(r) ** (I - 1), "geometric")


def make_custom_grid(boundaries: Sequence[float]) -> Grid:
    """Grid from an explicit, strictly increasing list of boundaries."""
    b = np.asarray(boundaries, dtype=np.float64)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("need at least two boundaries")
    if not np.all(np.isfinite(b)):
        raise ValueError("boundaries must be finite")
    if b[0] < 0:
        raise ValueError("boundaries must be non-negative")
    if not np.all(np.diff(b) > 0):
        raise ValueError("boundaries must be strictly increasing")
    return _from_boundaries(b, "custom")


@dataclass(frozen=True)
class GeometricParams:
    """Parameters (R, I, r) of a geometric grid."""

    R: float
    I: int
    r: float

    @property
    def left(self) -> float:
        return self.R * self.r ** (-self.I)

    def build(self) -> Grid:
        return make_geometric_grid(self.R, self.I, self.r)

    @classmethod
    def from_left(cls, R: float, I: int, left: float) -> "GeometricParams":
        """Parameters whose grid spans [left, R] with ``I`` cells."""
        if not 0 < left < R:
            raise ValueError("need 0 < left < R")
        return cls(R, I, (R / left) ** (1.0 / I))


def refine_geometric(p: GeometricParams) -> GeometricParams:
    """Double the cell count on the same interval: (R, I, r) -> (R, 2I, sqrt(r))."""
    make_geometric_grid(p.R, p.I, p.r)  # validates
    return GeometricParams(p.R, 2 * p.I, math.sqrt(p.r))


def target_cell(g: Grid, v: float) -> Optional[int]:
    """Index i with boundaries[i] <= v < boundaries[i+1], or None if v is outside."""
    b = g.boundaries
    if not (b[0] <= v < b[-1]):
        return None
    return int(np.searchsorted(b, v, side="right")) - 1
