"""Cell average technique for the truncated coagulation equation.

Newborn particles from every pivot pair (j, k), j >= k, are collected in the
cell containing x_j + x_k. Each cell's total birth is then split between its
own pivot and the neighbouring pivot on the side of the average newborn
volume, so that both number and mass of the birth are preserved.

The split at the outer cells refers to ghost pivots mirrored through the
domain ends (``2*x_{1/2} - x_1`` and ``2*x_{I+1/2} - x_I``). Fractions sent
to a ghost cell are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .grid import Grid
from .kernels import KernelSpec, kernel_eval, kernel_matrix


@dataclass(frozen=True, eq=False)
class AggregationTable:
    """Target cell of every pivot pair sum, grouped by target.

    ``j``, ``k``, ``target`` and ``weight`` hold all I(I+1)/2 pairs with
    j >= k; ``target`` is -1 where x_j + x_k falls beyond the right end.
    The in-domain pairs occupy the first ``n_inside`` rows, sorted by target.
    """

    pivots: np.ndarray
    j: np.ndarray
    k: np.ndarray
    target: np.ndarray
    weight: np.ndarray
    pair_sum: np.ndarray
    n_inside: int
    beta: Optional[np.ndarray] = None
    kernel: Optional[KernelSpec] = None

    @property
    def n_cells(self) -> int:
        return self.pivots.size

    def __len__(self) -> int:
        return self.j.size

    def lookup(self, j: int, k: int) -> Optional[int]:
        """Stored target of the pair (j, k), or None when out of domain."""
        if j < k:
            j, k = k, j
        hit = np.flatnonzero((self.j == j) & (self.k == k))
        t = int(self.target[hit[0]])
        return None if t < 0 else t

    def with_kernel(self, kern: KernelSpec) -> "AggregationTable":
        """Copy of the table with beta(x_k, x_j) precomputed for ``kern``."""
        return replace(self, beta=self.pair_kernel(kern), kernel=kern)

    def pair_kernel(self, kern: KernelSpec) -> np.ndarray:
        """beta(x_k, x_j) for the in-domain pairs."""
        n = self.n_inside
        x = self.pivots
        b = kernel_eval(kern, x[self.k[:n]], x[self.j[:n]])
        return np.ascontiguousarray(np.broadcast_to(b, (n,)), dtype=np.float64)


def build_aggregation_table(g: Grid, kernel: Optional[KernelSpec] = None) -> AggregationTable:
    """Map every pivot pair (j >= k) to the cell receiving x_j + x_k.

    Passing ``kernel`` caches the pair kernel values in the table.
    """
    I = g.n_cells
    x = g.pivots
    j, k = np.tril_indices(I)
    s = x[j] + x[k]
    b = g.boundaries
    tgt = np.searchsorted(b, s, side="right") - 1
    tgt[s >= b[-1]] = -1
    tgt[s < b[0]] = -1
    w = np.where(j == k, 0.5, 1.0)

    inside = tgt >= 0
    # in-domain rows first, grouped by target cell (stable sort keeps (j, k) order)
    order = np.concatenate([
        np.flatnonzero(inside)[np.argsort(tgt[inside], kind="stable")],
        np.flatnonzero(~inside),
    ])
    arrays = [np.ascontiguousarray(a[order]) for a in (j, k, tgt, w, s)]
    for a in arrays:
        a.setflags(write=False)
    table = AggregationTable(x, *arrays, n_inside=int(inside.sum()))
    if kernel is not None:
        table = table.with_kernel(kernel)
    return table


@dataclass(frozen=True)
class RateBundle:
    birth: np.ndarray
    flux: np.ndarray
    death: np.ndarray
    vbar: np.ndarray


def _check_dims(N: np.ndarray, g: Grid, table: AggregationTable) -> np.ndarray:
    N = np.asarray(N, dtype=np.float64)
    same_grid = table.pivots is g.pivots or np.array_equal(table.pivots, g.pivots)
    if N.ndim != 1 or N.size != g.n_cells or not same_grid:
        raise ValueError(
            f"dimension mismatch: state {N.shape}, grid {g.n_cells} cells, table {table.n_cells} cells"
        )
    return N


def compute_rates(N, g: Grid, table: AggregationTable, kern: KernelSpec,
                  kmat: Optional[np.ndarray] = None) -> RateBundle:
    """Discrete birth, volume flux, death and average newborn volume per cell."""
    N = _check_dims(N, g, table)
    I = g.n_cells
    n = table.n_inside
    j, k, tgt = table.j[:n], table.k[:n], table.target[:n]
    if table.beta is not None and table.kernel == kern:
        beta = table.beta
    else:
        beta = table.pair_kernel(kern)
    rate = table.weight[:n] * beta * N[j] * N[k]
    birth = np.bincount(tgt, weights=rate, minlength=I)
    flux = np.bincount(tgt, weights=rate * table.pair_sum[:n], minlength=I)
    if kmat is None:
        kmat = kernel_matrix(kern, g.pivots)
    death = N * (kmat @ N)
    pos = birth > 0
    vbar = g.pivots.copy()
    vbar[pos] = flux[pos] / birth[pos]
    return RateBundle(birth, flux, death, vbar)


def ghost_pivots(g: Grid) -> np.ndarray:
    """Pivots padded with mirrored ghost pivots at both ends (length I + 2)."""
    x = g.pivots
    b = g.boundaries
    return np.concatenate([[2 * b[0] - x[0]], x, [2 * b[-1] - x[-1]]])


def redistribute(rb: RateBundle, g: Grid) -> np.ndarray:
    """Split each cell's birth between its pivot and the neighbour bracketing vbar."""
    I = g.n_cells
    xe = ghost_pivots(g)
    x = xe[1:-1]
    B = rb.birth
    vb = rb.vbar
    idx = np.arange(I)
    side = np.sign(vb - x).astype(np.int64)  # +1 right neighbour, -1 left, 0 stay
    partner = idx + side
    xp = xe[partner + 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        own = np.where(side == 0, 1.0, (vb - xp) / (x - xp))
        other = np.where(side == 0, 0.0, (vb - x) / (xp - x))
    out = B * own
    keep = (side != 0) & (partner >= 0) & (partner < I)
    out += np.bincount(partner[keep], weights=(B * other)[keep], minlength=I)
    return out


def rhs(N, g: Grid, table: AggregationTable, kern: KernelSpec,
        kmat: Optional[np.ndarray] = None) -> np.ndarray:
    """Semi-discrete right-hand side dN/dt = B^CA - D."""
    rb = compute_rates(N, g, table, kern, kmat)
    return redistribute(rb, g) - rb.death


def make_rhs(g: Grid, kern: KernelSpec):
    """Closure N -> rhs(N) with the table and kernel values cached."""
    table = build_aggregation_table(g, kern)
    kmat = kernel_matrix(kern, g.pivots)

    def f(N):
        return rhs(N, g, table, kern, kmat)

    return f


def _heaviside(x: float) -> float:
    if x > 0:
        return 1.0
    if x == 0:
        return 0.5
    return 0.0


def rhs_bruteforce(N, g: Grid, kern: KernelSpec) -> np.ndarray:
    """Direct double-loop evaluation of the CAT right-hand side.

    Independent of the table: target cells are found by linear scan and the
    birth split is written as the four-term Heaviside sum per receiving cell.
    """
    N = [float(v) for v in np.asarray(N, dtype=np.float64)]
    I = g.n_cells
    if len(N) != I:
        raise ValueError(f"dimension mismatch: state has {len(N)} entries, grid has {I} cells")
    b = [float(v) for v in g.boundaries]
    x = [float(v) for v in g.pivots]
    beta = lambda p, q: float(kernel_eval(kern, p, q))

    birth = [0.0] * I
    flux = [0.0] * I
    for jj in range(I):
        for kk in range(jj + 1):
            s = x[jj] + x[kk]
            cell = None
            for i in range(I):
                if b[i] <= s < b[i + 1]:
                    cell = i
                    break
            if cell is None:
                continue
            c = (0.5 if jj == kk else 1.0) * beta(x[kk], x[jj]) * N[jj] * N[kk]
            birth[cell] += c
            flux[cell] += c * s

    vbar = [flux[i] / birth[i] if birth[i] > 0 else x[i] for i in range(I)]

    # ghost pivots, same convention as ghost_pivots()
    xg = [2 * b[0] - x[0]] + x + [2 * b[-1] - x[-1]]

    def lam_minus(i, v):  # (v - x_{i-1}) / (x_i - x_{i-1})
        return (v - xg[i]) / (xg[i + 1] - xg[i])

    def lam_plus(i, v):  # (v - x_{i+1}) / (x_i - x_{i+1})
        return (v - xg[i + 2]) / (xg[i + 1] - xg[i + 2])

    out = [0.0] * I
    for i in range(I):
        total = 0.0
        if i > 0 and birth[i - 1] != 0:
            total += birth[i - 1] * lam_minus(i, vbar[i - 1]) * _heaviside(vbar[i - 1] - x[i - 1])
        if birth[i] != 0:
            h_up = _heaviside(vbar[i] - x[i])
            h_dn = _heaviside(x[i] - vbar[i])
            if h_up:
                total += birth[i] * lam_plus(i, vbar[i]) * h_up
            if h_dn:
                total += birth[i] * lam_minus(i, vbar[i]) * h_dn
        if i < I - 1 and birth[i + 1] != 0:
            total += birth[i + 1] * lam_plus(i, vbar[i + 1]) * _heaviside(x[i + 1] - vbar[i + 1])
        death = N[i] * sum(beta(x[i], x[jj]) * N[jj] for jj in range(I))
        out[i] = total - death
    return np.array(out)
