"""Independent reference computations used by the tests.

Nothing here imports the DP kernels: paths are enumerated exhaustively and
each edge is integrated from scratch with exact rational breakpoints.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


def coprime_steps(cap: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(1, cap + 1) for q in range(1, cap + 1) if math.gcd(p, q) == 1]


def enumerate_paths(n: int, cap: int) -> list[tuple[tuple[int, int, int, int], ...]]:
    """Every lattice path (0,0) -> (n-1,n-1) as a tuple of edges (k, l, p, q)."""
    steps = coprime_steps(cap)
    end = n - 1

    @lru_cache(maxsize=None)
    def tails(i, j):
        if i == end and j == end:
            return ((),)
        out = []
        for p, q in steps:
            if i + p <= end and j + q <= end:
                out.extend(((i, j, p, q),) + t for t in tails(i + p, j + q))
        return tuple(out)

    return list(tails(0, 0))


def _breakpoints(p: int, q: int) -> list[Fraction]:
    """Fractions x of an edge where either the time or the warped index is a grid node."""
    return sorted({Fraction(r, p) for r in range(p + 1)} | {Fraction(s, q) for s in range(q + 1)})


def edge_integral(a: np.ndarray, b: np.ndarray, k: int, l: int, p: int, q: int, root: float, weight: float = 1.0) -> float:
    """Trapezoid of (a(t) - root * b(y))^2 over one straight edge, in absolute time units."""
    n = a.size
    grid = np.linspace(0.0, 1.0, n)
    dt = 1.0 / (n - 1)
    xs = _breakpoints(p, q)
    t = np.array([(k + float(x) * p) * dt for x in xs])
    y = np.array([(l + float(x) * q) * dt for x in xs])
    g = (np.interp(t, grid, a) - root * np.interp(y, grid, b)) ** 2
    return float(weight * np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(t)))


class PathTable:
    """All lattice paths of an n-node lattice, stored as rows of edge ids (padded with a zero-cost id)."""

    def __init__(self, n: int, cap: int):
        self.n = n
        self.paths = enumerate_paths(n, cap)
        self.edges = sorted({e for path in self.paths for e in path})
        ids = {e: i for i, e in enumerate(self.edges)}
        width = max(len(p) for p in self.paths)
        self.index = np.full((len(self.paths), width), len(self.edges))
        for r, path in enumerate(self.paths):
            self.index[r, : len(path)] = [ids[e] for e in path]

    def totals(self, edge_costs: np.ndarray) -> np.ndarray:
        return np.append(edge_costs, 0.0)[self.index].sum(axis=1)


def brute_force_min(a: np.ndarray, b: np.ndarray, lam: float, table: PathTable):
    """Minimum over all lattice paths of ||a - (b * gamma)||^2 + lam ||sqrt(gamma') - 1||^2."""
    dt = 1.0 / (a.size - 1)
    costs = np.empty(len(table.edges))
    for i, (k, l, p, q) in enumerate(table.edges):
        root = math.sqrt(q / p)
        costs[i] = edge_integral(a, b, k, l, p, q, root) + lam * p * dt * (root - 1.0) ** 2
    totals = table.totals(costs)
    best = int(np.argmin(totals))
    return float(totals[best]), table.paths[best], totals


def baseline_brute_force(a, b, lam, order, table: PathTable):
    """Same enumeration for the symmetric-weight penalised L2 objective."""
    dt = 1.0 / (a.size - 1)
    data = np.array([edge_integral(a, b, k, l, p, q, 1.0, 0.5 * (1.0 + q / p)) for k, l, p, q in table.edges])
    totals = table.totals(data)
    for r, path in enumerate(table.paths):
        slopes = [q / p for _, _, p, q in path]
        if order == 1:
            totals[r] += lam * sum(p * dt * s * s for (_, _, p, _), s in zip(path, slopes))
        else:
            totals[r] += lam * sum((s1 - s0) ** 2 for s0, s1 in zip(slopes[:-1], slopes[1:])) / dt
    return float(totals.min()), totals


def path_values(path, n: int) -> np.ndarray:
    """Sampled warp of a lattice path."""
    vals = np.empty(n)
    for k, l, p, q in path:
        for r in range(p + 1):
            vals[k + r] = (l + r * q / p) / (n - 1)
    return vals


def srvf_numeric(f: np.ndarray, dt: float) -> np.ndarray:
    d = np.gradient(f, dt)
    return np.sign(d) * np.sqrt(np.abs(d))
