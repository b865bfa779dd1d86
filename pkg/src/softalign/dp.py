"""Dynamic-programming alignment on the grid lattice.

A path runs from lattice node (0, 0) to (N-1, N-1); each edge advances the
time index by ``p`` and the warped index by ``q`` for a coprime step (p, q).
The warp is linear along an edge, so its slope on every grid cell covered by
the edge is q/p. Edge costs integrate the objective over the covered cells
with the trapezoid rule at that constant slope, which makes the DP optimum
coincide with :func:`objective_eval` evaluated on the returned warp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numba
import numpy as np

from .funcs import CellSrvf, Grid, SampledFunction, Srvf, Warp

_INF = np.inf


@dataclass(frozen=True)
class DpConfig:
    lattice_n: int | None = None
    slope_cap: int = 5
    tie_break: str = "unit-slope-first"

    def __post_init__(self):
        if self.slope_cap < 1:
            raise ValueError("slope_cap must be at least 1")
        if self.lattice_n is not None and self.lattice_n < 3:
            raise ValueError("lattice_n must be at least 3")
        if self.tie_break != "unit-slope-first":
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")

    @cached_property
    def slope_set(self) -> tuple[tuple[int, int], ...]:
        """Admissible (p, q) steps in tie-break order.

        Slopes closest to 1 (in log scale) come first; between (p, q) and
        (q, p) the one whose predecessor has the lower flat index wins.
        """
        steps = [
            (p, q)
            for p in range(1, self.slope_cap + 1)
            for q in range(1, self.slope_cap + 1)
            if math.gcd(p, q) == 1
        ]
        # log of max/min keeps (p, q) and (q, p) exactly tied; log(q/p) can differ in the last bit
        steps.sort(key=lambda s: (math.log(max(s) / min(s)), -s[0]))
        return tuple(steps)

    def step_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.array(self.slope_set, dtype=np.int64)
        return s[:, 0].copy(), s[:, 1].copy()

    @cached_property
    def tables(self):
        return _edge_tables(*self.step_arrays())


@dataclass(frozen=True, eq=False)
class AlignOutcome:
    warp: Warp
    cost: float


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0.0:
        raise ValueError(f"penalty weight must be non-negative, got {lam}")
    return lam


# ----------------------------------------------------------------------------
# kernels
# ----------------------------------------------------------------------------


def _edge_tables(steps_p: np.ndarray, steps_q: np.ndarray):
    """Quadrature tables for every step (p, q), shared by all lattice nodes.

    Along an edge (k, l) -> (k+p, l+q) positions are integers u in [0, p*q]:
    time node r sits at u = r*q and warped node s at u = s*p. The breakpoints
    are the union of both, so the transposed step sees the same points. Each
    sub-interval m between consecutive breakpoints lies inside one time cell
    k + ca[m] and one warped cell l + cb[m]; its ends sit at fractions
    fa0/fa1 and fb0/fb1 of those cells. w[m] is half its length in units of dt.
    """
    offs = [0]
    ca, fa0, fa1, cb, fb0, fb1, w = [], [], [], [], [], [], []
    for p, q in zip(steps_p.tolist(), steps_q.tolist()):
        u = np.union1d(np.arange(p + 1) * q, np.arange(q + 1) * p)
        u0, u1 = u[:-1], u[1:]
        # twice the midpoint stays an integer, so the cell index is exact
        a = (u0 + u1) // (2 * q)
        b = (u0 + u1) // (2 * p)
        ca.append(a)
        fa0.append((u0 - a * q) / q)
        fa1.append((u1 - a * q) / q)
        cb.append(b)
        fb0.append((u0 - b * p) / p)
        fb1.append((u1 - b * p) / p)
        w.append(0.5 * (u1 - u0) / q)
        offs.append(offs[-1] + u0.size)
    cat = np.concatenate
    return (
        np.array(offs, dtype=np.int64),
        cat(ca).astype(np.int64),
        cat(fa0),
        cat(fa1),
        cat(cb).astype(np.int64),
        cat(fb0),
        cat(fb1),
        cat(w),
    )


@numba.njit(cache=True, nogil=True)
def _edge_cost(al, ar, bl, br, k, l, lo, hi, ca, fa0, fa1, cb, fb0, fb1, w, root_scale):
    """Trapezoid of (a(t) - root_scale * b(y))^2 along one edge.

    a and b are linear on each cell with end values (al, ar) and (bl, br);
    every sub-interval reads both ends from its own cell, so jumps at nodes
    are integrated exactly.
    """
    acc = 0.0
    for m in range(lo, hi):
        c = k + ca[m]
        x0 = al[c]
        dx = ar[c] - x0
        d = l + cb[m]
        y0 = bl[d]
        dy = br[d] - y0
        g0 = x0 + dx * fa0[m] - root_scale * (y0 + dy * fb0[m])
        g1 = x0 + dx * fa1[m] - root_scale * (y0 + dy * fb1[m])
        acc += w[m] * (g0 * g0 + g1 * g1)
    return acc


@numba.njit(cache=True, nogil=True)
def _dp_first_order(al, ar, bl, br, steps_p, steps_q, tables, step_pen, use_root, dt):
    """Shared first-order DP for cellwise-linear a = (al, ar) and b = (bl, br).

    With use_root b is scaled by sqrt(q/p) (SRVF action); without it the
    data term is weighted by (dt + dy)/2, which makes the transposed problem
    identical. Cost per edge adds step_pen[s] * p * dt.
    """
    offs, ca, fa0, fa1, cb, fb0, fb1, w = tables
    n = al.shape[0] + 1
    ns = steps_p.shape[0]
    energy = np.full((n, n), _INF)
    pred = np.full((n, n), -1, dtype=np.int64)
    energy[0, 0] = 0.0
    roots = np.empty(ns)
    scale = np.empty(ns)
    for s in range(ns):
        roots[s] = math.sqrt(steps_q[s] / steps_p[s]) if use_root else 1.0
        scale[s] = 1.0 if use_root else 0.5 * (steps_p[s] + steps_q[s]) / steps_p[s]
    cap = 1
    for s in range(ns):
        cap = max(cap, steps_p[s], steps_q[s])
    m = n - 1
    for i in range(1, n):
        for j in range(1, n):
            # nodes outside the slope band can neither be reached nor reach the end
            if j > cap * i or i > cap * j or m - j > cap * (m - i) or m - i > cap * (m - j):
                continue
            best = _INF
            arg = -1
            for s in range(ns):
                p = steps_p[s]
                q = steps_q[s]
                k = i - p
                l = j - q
                if k < 0 or l < 0:
                    continue
                e0 = energy[k, l]
                if e0 == _INF:
                    continue
                c = e0 + step_pen[s] * p * dt
                # edge costs are non-negative, so this edge cannot win
                if c >= best:
                    continue
                c += scale[s] * dt * _edge_cost(
                    al, ar, bl, br, k, l, offs[s], offs[s + 1], ca, fa0, fa1, cb, fb0, fb1, w, roots[s]
                )
                if c < best:
                    best = c
                    arg = s
            energy[i, j] = best
            pred[i, j] = arg
    return energy[n - 1, n - 1], pred


@numba.njit(cache=True, nogil=True)
def _dp_second_order(al, ar, bl, br, steps_p, steps_q, tables, lam, dt):
    """Symmetrically weighted L2 data term plus lam*(slope_out - slope_in)^2/dt at path vertices."""
    offs, ca, fa0, fa1, cb, fb0, fb1, w = tables
    n = al.shape[0] + 1
    ns = steps_p.shape[0]
    slopes = np.empty(ns)
    for s in range(ns):
        slopes[s] = steps_q[s] / steps_p[s]
    energy = np.full((n, n, ns), _INF)
    pred = np.full((n, n, ns), -1, dtype=np.int64)
    for i in range(1, n):
        for j in range(1, n):
            for s in range(ns):
                p = steps_p[s]
                q = steps_q[s]
                k = i - p
                l = j - q
                if k < 0 or l < 0:
                    continue
                edge = (
                    0.5 * (p + q) / p * dt
                    * _edge_cost(al, ar, bl, br, k, l, offs[s], offs[s + 1], ca, fa0, fa1, cb, fb0, fb1, w, 1.0)
                )
                if k == 0 and l == 0:
                    energy[i, j, s] = edge
                    pred[i, j, s] = -1
                    continue
                best = _INF
                arg = -1
                for s0 in range(ns):
                    e0 = energy[k, l, s0]
                    if e0 == _INF:
                        continue
                    ds = slopes[s] - slopes[s0]
                    c = e0 + lam * ds * ds / dt
                    if c < best:
                        best = c
                        arg = s0
                if arg >= 0:
                    energy[i, j, s] = best + edge
                    pred[i, j, s] = arg
    best = _INF
    arg = -1
    for s in range(ns):
        if energy[n - 1, n - 1, s] < best:
            best = energy[n - 1, n - 1, s]
            arg = s
    return best, arg, pred


def _path_to_warp(nodes: list[tuple[int, int]], grid: Grid) -> Warp:
    n = grid.n_samples
    vals = np.empty(n)
    for (k, l), (i, j) in zip(nodes[:-1], nodes[1:]):
        p, q = i - k, j - l
        r = np.arange(p + 1)
        vals[k : i + 1] = (l * p + r * q) / (p * (n - 1))
    vals[0], vals[-1] = 0.0, 1.0
    return Warp(grid, vals)


def _backtrack(pred: np.ndarray, steps_p, steps_q) -> list[tuple[int, int]]:
    n = pred.shape[0]
    i = j = n - 1
    nodes = [(i, j)]
    while i > 0 or j > 0:
        s = pred[i, j]
        i -= steps_p[s]
        j -= steps_q[s]
        nodes.append((i, j))
    return nodes[::-1]


# ----------------------------------------------------------------------------
# public API
# ----------------------------------------------------------------------------


def _merged_frame(gamma: Warp):
    """Sub-intervals between the union of t-nodes and gamma^-1(nodes).

    Returns the breakpoints u, their images y = gamma(u), and for every
    sub-interval the time cell holding it and the cell holding its image.
    """
    grid = gamma.grid
    t = grid.t
    pre = np.interp(t[1:-1], gamma.values, t)
    u = np.unique(np.concatenate([t, pre]))
    y = np.interp(u, t, gamma.values)
    mid = 0.5 * (u[:-1] + u[1:])
    top = grid.n_samples - 2
    cell = np.minimum(np.searchsorted(t, mid, side="right") - 1, top)
    ycell = np.minimum(np.searchsorted(t, np.interp(mid, t, gamma.values), side="right") - 1, top)
    return u, y, cell, ycell


def _cell_values(left, right, cell, x, t, dt):
    return left[cell] + (right[cell] - left[cell]) * ((x - t[cell]) / dt)


def _merged_quadrature(a, b, gamma: Warp, root: np.ndarray, weight=None) -> float:
    """Trapezoid of weight * (a(t) - root * b(gamma(t)))^2 over the union of t-nodes and gamma^-1(nodes).

    a and b are (left, right) cell end values; root and weight are constant
    on each grid cell.
    """
    grid = gamma.grid
    t, dt = grid.t, grid.dt
    u, y, cell, ycell = _merged_frame(gamma)
    rs = root[cell]
    g0 = _cell_values(*a, cell, u[:-1], t, dt) - rs * _cell_values(*b, ycell, y[:-1], t, dt)
    g1 = _cell_values(*a, cell, u[1:], t, dt) - rs * _cell_values(*b, ycell, y[1:], t, dt)
    du = np.diff(u) if weight is None else np.diff(u) * weight[cell]
    return float(0.5 * np.sum((g0**2 + g1**2) * du))


def _pieces(x) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(x, CellSrvf):
        return x.left, x.right
    v = x.values
    return v[:-1], v[1:]


def quadrature_mean(qs, warps) -> Srvf:
    """The mu minimising sum_i ||mu - (q_i * warp_i)||^2 under the quadrature of :func:`objective_eval`.

    mu is piecewise linear on the grid, so this is a small banded least-squares
    problem. It replaces the plain pointwise mean of resampled SRVFs, which
    minimises a slightly different discrete objective. ``qs`` may hold
    :class:`Srvf` or :class:`CellSrvf` values.
    """
    grid = qs[0].grid
    n = grid.n_samples
    t, dt = grid.t, grid.dt
    diag = np.zeros(n)
    off = np.zeros(n - 1)
    rhs = np.zeros(n)
    for q, w in zip(qs, warps):
        u, y, cell, ycell = _merged_frame(w)
        root = np.sqrt(w.slopes)[cell]
        left, right = _pieces(q)
        half = 0.5 * np.diff(u)
        for end in (0, 1):
            sl = slice(end, u.size - 1 + end)
            g = root * _cell_values(left, right, ycell, y[sl], t, dt)
            th = (u[sl] - t[cell]) / dt
            diag += np.bincount(cell, half * (1.0 - th) ** 2, n)
            diag += np.bincount(cell + 1, half * th**2, n)
            off += np.bincount(cell, half * th * (1.0 - th), n - 1)
            rhs += np.bincount(cell, half * (1.0 - th) * g, n)
            rhs += np.bincount(cell + 1, half * th * g, n)
    mat = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    return Srvf(grid, np.linalg.solve(mat, rhs))


def objective_eval(q1, q2, gamma: Warp, lam: float = 0.0) -> float:
    """||q1 - (q2 * gamma)||^2 + lam * ||sqrt(gamma') - 1||^2 for a piecewise-linear warp.

    gamma' is the constant slope on each grid cell. The data term uses the
    trapezoid rule on the merged breakpoints of both sampling grids. q1 and
    q2 may be :class:`Srvf` or :class:`CellSrvf`.
    """
    if not (q1.grid == q2.grid == gamma.grid):
        raise ValueError("objective_eval needs q1, q2 and gamma on one grid")
    root = np.sqrt(gamma.slopes)
    shape = _merged_quadrature(_pieces(q1), _pieces(q2), gamma, root)
    if lam == 0.0:
        return float(shape)
    return float(shape + lam * gamma.grid.dt * np.sum((root - 1.0) ** 2))


def penalty_term(gamma: Warp) -> float:
    """||sqrt(gamma') - 1||^2 with the cellwise slope."""
    return float(gamma.grid.dt * np.sum((np.sqrt(gamma.slopes) - 1.0) ** 2))


def _lattice_pieces(x, cfg: DpConfig):
    """Cell end values on the DP lattice; a coarser or finer lattice resamples node values."""
    grid = x.grid
    n = cfg.lattice_n or grid.n_samples
    if n == grid.n_samples:
        return (*_pieces(x), grid)
    lat = Grid(n)
    nodal = x.nodal().values if isinstance(x, CellSrvf) else x.values
    v = np.interp(lat.t, grid.t, nodal)
    return v[:-1], v[1:], lat


def dp_penalized(q1, q2, lam: float, cfg: DpConfig | None = None) -> AlignOutcome:
    """Minimise ||q1 - (q2 * gamma)||^2 + lam * ||sqrt(gamma') - 1||^2 over lattice paths.

    q1 and q2 may be :class:`Srvf` or :class:`CellSrvf`.
    """
    cfg = cfg or DpConfig()
    lam = _check_lambda(lam)
    if q1.grid != q2.grid:
        raise ValueError("dp_penalized needs q1 and q2 on one grid")
    if np.isinf(lam):
        # unit slope exactly: the diagonal lattice path, without rounding in the identity's slopes
        (al, ar), (bl, br) = _pieces(q1), _pieces(q2)
        cost = 0.5 * q1.grid.dt * np.sum((al - bl) ** 2 + (ar - br) ** 2)
        return AlignOutcome(Warp.identity(q1.grid), float(cost))
    al, ar, lat = _lattice_pieces(q1, cfg)
    bl, br, _ = _lattice_pieces(q2, cfg)
    sp, sq = cfg.step_arrays()
    pen = lam * (np.sqrt(sq / sp) - 1.0) ** 2
    cost, pred = _dp_first_order(al, ar, bl, br, sp, sq, cfg.tables, pen, True, lat.dt)
    warp = _path_to_warp(_backtrack(pred, sp, sq), lat)
    if lat != q1.grid:
        warp = warp.resample(q1.grid.n_samples)
        cost = objective_eval(q1, q2, warp, lam)
    return AlignOutcome(warp, float(cost))


def dp_unconstrained(q1, q2, cfg: DpConfig | None = None) -> AlignOutcome:
    """Minimise ||q1 - (q2 * gamma)||^2; the warp carries q2 onto q1."""
    return dp_penalized(q1, q2, 0.0, cfg)


def baseline_objective(f1: SampledFunction, f2: SampledFunction, gamma: Warp, lam: float, order: int) -> float:
    """Data term weighted by (dt + dgamma)/2 plus lam * R(gamma), as discretised by the baseline DP."""
    grid = gamma.grid
    slopes = gamma.slopes
    data = _merged_quadrature(_pieces(f1), _pieces(f2), gamma, np.ones(grid.n_samples - 1), 0.5 * (1.0 + slopes))
    if order == 1:
        return float(data + lam * grid.dt * np.sum(slopes**2))
    # slope changes only at path vertices; cells inside an edge share a slope
    return float(data + lam * np.sum(np.diff(slopes) ** 2) / grid.dt)


def penalized_l2_baseline(
    f1: SampledFunction,
    f2: SampledFunction,
    lam: float,
    order: int = 1,
    cfg: DpConfig | None = None,
) -> AlignOutcome:
    """Classical penalised-L2 time warping of f2 onto f1 with a roughness penalty.

    order=1 penalises the integral of gamma'^2, order=2 the integral of
    gamma''^2 (squared slope jumps over the lattice spacing). The data term
    uses the symmetric DTW weighting (dt + dgamma)/2, so at lam = 0 aligning
    f1 to f2 and f2 to f1 are transposed problems.
    """
    cfg = cfg or DpConfig()
    lam = _check_lambda(lam)
    if order not in (1, 2):
        raise ValueError(f"roughness penalty order must be 1 or 2, got {order!r}")
    if f1.grid != f2.grid:
        raise ValueError("baseline needs f1 and f2 on one grid")
    al, ar, lat = _lattice_pieces(f1, cfg)
    bl, br, _ = _lattice_pieces(f2, cfg)
    sp, sq = cfg.step_arrays()
    if order == 1:
        pen = lam * (sq / sp) ** 2
        cost, pred = _dp_first_order(al, ar, bl, br, sp, sq, cfg.tables, pen, False, lat.dt)
        nodes = _backtrack(pred, sp, sq)
    else:
        cost, s, pred = _dp_second_order(al, ar, bl, br, sp, sq, cfg.tables, lam, lat.dt)
        n = lat.n_samples
        i = j = n - 1
        nodes = [(i, j)]
        while s >= 0:
            prev = pred[i, j, s]
            i -= sp[s]
            j -= sq[s]
            nodes.append((i, j))
            s = prev
        nodes = nodes[::-1]
    warp = _path_to_warp(nodes, lat)
    if lat != f1.grid:
        warp = warp.resample(f1.grid.n_samples)
        cost = baseline_objective(f1, f2, warp, lam, order)
    return AlignOutcome(warp, float(cost))


__all__ = [
    "AlignOutcome",
    "DpConfig",
    "baseline_objective",
    "dp_penalized",
    "dp_unconstrained",
    "objective_eval",
    "penalized_l2_baseline",
    "penalty_term",
    "quadrature_mean",
]
