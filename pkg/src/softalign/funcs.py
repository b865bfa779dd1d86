"""Sampled functions, SRVFs and warping functions on a uniform grid over [0, 1].

Everything here is a pure function of immutable values. Arrays held by the
containers are flagged read-only after validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

EPS_MONO = 1e-8


class DegenerateWarpError(ValueError):
    """A warp lost strict monotonicity (or its mean did)."""


def _frozen(values, n: int | None = None, what: str = "values") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.size != n:
        raise ValueError(f"{what} has {arr.size} entries, grid has {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contain NaN or Inf")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid:
    n_samples: int

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 3:
            raise ValueError(f"a grid needs at least 3 samples, got {self.n_samples}")

    @cached_property
    def t(self) -> np.ndarray:
        t = np.linspace(0.0, 1.0, self.n_samples)
        t.flags.writeable = False
        return t

    @property
    def dt(self) -> float:
        return 1.0 / (self.n_samples - 1)

    def snap(self, x):
        """Nearest grid index for each location in ``x``."""
        return np.rint(np.asarray(x, dtype=float) * (self.n_samples - 1)).astype(int)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.n_samples))

    @classmethod
    def from_callable(cls, fn, n_samples: int = 201) -> "SampledFunction":
        grid = Grid(n_samples)
        return cls(grid, fn(grid.t))

    def resample(self, n_samples: int) -> "SampledFunction":
        if n_samples == self.grid.n_samples:
            return self
        grid = Grid(n_samples)
        return SampledFunction(grid, np.interp(grid.t, self.grid.t, self.values))


@dataclass(frozen=True, eq=False)
class Srvf:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.n_samples))

    def resample(self, n_samples: int) -> "Srvf":
        if n_samples == self.grid.n_samples:
            return self
        grid = Grid(n_samples)
        return Srvf(grid, np.interp(grid.t, self.grid.t, self.values))

    def norm(self) -> float:
        return float(np.sqrt(np.trapezoid(self.values**2, dx=self.grid.dt)))


@dataclass(frozen=True, eq=False)
class CellSrvf:
    """An SRVF stored cell by cell: linear on each grid cell, free to jump at nodes.

    ``left[c]`` and ``right[c]`` are the limits at the two ends of cell c.
    This holds q * gamma exactly at the nodes for a piecewise-linear gamma,
    whose sqrt(gamma') changes from cell to cell.
    """

    grid: Grid
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.n_samples - 1
        object.__setattr__(self, "left", _frozen(self.left, n, "left limits"))
        object.__setattr__(self, "right", _frozen(self.right, n, "right limits"))

    @classmethod
    def of(cls, q: "Srvf | CellSrvf") -> "CellSrvf":
        if isinstance(q, CellSrvf):
            return q
        return cls(q.grid, q.values[:-1], q.values[1:])

    @classmethod
    def acted(cls, q: "Srvf", gamma: "Warp") -> "CellSrvf":
        """q * gamma with the exact slope of gamma on each cell."""
        if q.grid != gamma.grid:
            raise ValueError(f"grid mismatch: {q.grid.n_samples} vs {gamma.grid.n_samples} samples")
        qy = np.interp(gamma.values, q.grid.t, q.values)
        root = np.sqrt(gamma.slopes)
        return cls(q.grid, qy[:-1] * root, qy[1:] * root)

    def nodal(self) -> "Srvf":
        """Node values, averaging the two one-sided limits inside the grid."""
        v = np.empty(self.grid.n_samples)
        v[0], v[-1] = self.left[0], self.right[-1]
        v[1:-1] = 0.5 * (self.right[:-1] + self.left[1:])
        return Srvf(self.grid, v)

    def norm(self) -> float:
        sq = self.left**2 + self.left * self.right + self.right**2
        return float(np.sqrt(np.sum(sq) * self.grid.dt / 3.0))


@dataclass(frozen=True, eq=False)
class Warp:
    """Strictly increasing map of [0, 1] onto itself, sampled at the grid.

    Endpoints are exactly 0 and 1 and every increment is at least ``eps``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)
    eps: float = EPS_MONO

    def __post_init__(self):
        v = _frozen(self.values, self.grid.n_samples, "warp values")
        if v[0] != 0.0 or v[-1] != 1.0:
            raise DegenerateWarpError(f"warp endpoints must be 0 and 1, got {v[0]!r} and {v[-1]!r}")
        steps = np.diff(v)
        # increments may sit a rounding error below the floor after renormalisation
        if steps.min() < self.eps * (1.0 - 1e-6):
            raise DegenerateWarpError(
                f"warp increment {steps.min():.3e} below monotonicity floor {self.eps:.1e}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls, grid: Grid | int) -> "Warp":
        grid = grid if isinstance(grid, Grid) else Grid(grid)
        return cls(grid, grid.t)

    @classmethod
    def from_callable(cls, fn, grid: Grid | int) -> "Warp":
        grid = grid if isinstance(grid, Grid) else Grid(grid)
        return cls(grid, project_monotone(fn(grid.t)))

    @property
    def slopes(self) -> np.ndarray:
        """Constant slope of the piecewise-linear warp on each grid cell."""
        return np.diff(self.values) / self.grid.dt

    def __call__(self, x):
        return np.interp(x, self.grid.t, self.values)

    def inverse_at(self, y):
        return np.interp(y, self.values, self.grid.t)

    def resample(self, n_samples: int) -> "Warp":
        if n_samples == self.grid.n_samples:
            return self
        grid = Grid(n_samples)
        return Warp(grid, project_monotone(np.interp(grid.t, self.grid.t, self.values)), self.eps)

    def deviation(self) -> float:
        """Sup-norm distance from the identity warp."""
        return float(np.max(np.abs(self.values - self.grid.t)))


def project_monotone(values, eps: float = EPS_MONO) -> np.ndarray:
    """Rescale to [0, 1] endpoints and lift increments below ``eps`` to the floor.

    Raises DegenerateWarpError when any increment is non-positive: that is a
    genuine fold, not an interpolation near-tie.
    """
    v = np.asarray(values, dtype=float)
    if v[0] == 0.0 and v[-1] == 1.0 and np.diff(v).min() >= eps:
        return v.copy()
    span = v[-1] - v[0]
    if not span > 0:
        raise DegenerateWarpError("warp does not increase from start to end")
    d = np.diff(v) / span
    if d.min() <= 0.0:
        raise DegenerateWarpError(f"warp is not strictly increasing (increment {d.min():.3e})")
    if d.min() < eps:
        d = np.maximum(d, eps)
        excess = d - eps
        d = eps + excess * (1.0 - eps * d.size) / excess.sum()
    out = np.empty(v.size)
    out[0] = 0.0
    np.cumsum(d, out=out[1:])
    out[-1] = 1.0
    return out


def _check_grid(a, b) -> Grid:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid.n_samples} vs {b.grid.n_samples} samples")
    return a.grid


def to_srvf(f: SampledFunction) -> Srvf:
    """sign(f') * sqrt(|f'|) with central differences inside, one-sided at the ends."""
    d = np.gradient(f.values, f.grid.dt)
    return Srvf(f.grid, np.sign(d) * np.sqrt(np.abs(d)))


def from_srvf(q: Srvf, f0: float = 0.0) -> SampledFunction:
    """Integrate q|q| with the cumulative trapezoid rule, starting from ``f0``."""
    g = q.values * np.abs(q.values)
    out = np.empty(g.size)
    out[0] = 0.0
    np.cumsum(0.5 * (g[1:] + g[:-1]) * q.grid.dt, out=out[1:])
    return SampledFunction(q.grid, out + f0)


def group_action(q: Srvf, gamma: Warp) -> Srvf:
    """(q o gamma) * sqrt(gamma'), the SRVF of f o gamma."""
    if q.grid != gamma.grid:
        q = q.resample(gamma.grid.n_samples)
    grid = gamma.grid
    dgam = np.gradient(gamma.values, grid.dt)
    return Srvf(grid, np.interp(gamma.values, grid.t, q.values) * np.sqrt(dgam))


def warp_apply(f: SampledFunction, gamma: Warp) -> SampledFunction:
    if f.grid != gamma.grid:
        f = f.resample(gamma.grid.n_samples)
    return SampledFunction(gamma.grid, np.interp(gamma.values, f.grid.t, f.values))


def compose(gamma1: Warp, gamma2: Warp) -> Warp:
    """gamma1 o gamma2."""
    grid = _check_grid(gamma1, gamma2)
    return Warp(grid, project_monotone(np.interp(gamma2.values, grid.t, gamma1.values), gamma1.eps), gamma1.eps)


def invert(gamma: Warp) -> Warp:
    grid = gamma.grid
    return Warp(grid, project_monotone(np.interp(grid.t, gamma.values, grid.t), gamma.eps), gamma.eps)


def mean_warp(warps: Sequence[Warp]) -> Warp:
    if not warps:
        raise ValueError("need at least one warp")
    grid = warps[0].grid
    for w in warps[1:]:
        _check_grid(warps[0], w)
    return Warp(grid, project_monotone(np.mean([w.values for w in warps], axis=0)))


def center_warps(warps: Sequence[Warp]) -> list[Warp]:
    """Compose each warp with the inverse of the pointwise mean warp."""
    inv = invert(mean_warp(warps))
    return [compose(w, inv) for w in warps]


def l2_dist(a: Srvf, b: Srvf) -> float:
    grid = _check_grid(a, b)
    return float(np.sqrt(np.trapezoid((a.values - b.values) ** 2, dx=grid.dt)))


def mean_srvf(qs: Sequence[Srvf]) -> Srvf:
    return Srvf(qs[0].grid, np.mean([q.values for q in qs], axis=0))
