"""Seeded synthetic scenarios built from Gaussian bumps and smooth random warps."""
from __future__ import annotations

import numpy as np

from .bundle import FunctionBundle
from .funcs import Grid
from .landmarks import LandmarkSet

SCENARIOS = (
    "arbitrary_landmarks",
    "precise_landmarks_noisy",
    "gaussian_bumps_pair",
    "two_landmark_family",
    "noisy_tall_peak_pair",
)


def bumps(t, centers, heights, widths) -> np.ndarray:
    t = np.asarray(t, dtype=float)[:, None]
    c = np.asarray(centers, dtype=float)[None, :]
    w = np.broadcast_to(np.asarray(widths, dtype=float), c.shape)
    h = np.broadcast_to(np.asarray(heights, dtype=float), c.shape)
    return np.sum(h * np.exp(-0.5 * ((t - c) / w) ** 2), axis=1)


def random_warp(rng: np.random.Generator, strength: float = 0.6):
    """gamma(t) = t + sum_k c_k sin(k pi t) / (k pi); gamma' >= 1 - strength > 0."""
    c = rng.uniform(-1.0, 1.0, size=2)
    c *= strength / max(np.abs(c).sum(), 1e-12) * rng.uniform(0.5, 1.0)
    k = np.arange(1, 3)

    def gamma(t):
        t = np.asarray(t, dtype=float)
        return t + np.sum(c[:, None] * np.sin(np.pi * k[:, None] * t[None, :]) / (np.pi * k[:, None]), axis=0)

    return gamma


def _invert(fn, y, n: int = 4001):
    s = np.linspace(0.0, 1.0, n)
    return np.interp(y, fn(s), s)


def _arbitrary_landmarks(rng, grid):
    # the middle peak drifts across 0.5, so pinning 0.5 mis-registers it
    base = dict(centers=[0.25, 0.5, 0.75], heights=[0.8, 1.0, 0.6], widths=[0.06, 0.06, 0.06])
    vals = []
    for _ in range(5):
        g = random_warp(rng, 0.6)
        vals.append(bumps(g(grid.t), **base))
    return vals, [LandmarkSet([0.5]) for _ in vals]


def _precise_landmarks_noisy(rng, grid):
    centers = np.array([0.14, 0.3, 0.47, 0.64, 0.82])
    vals, sets = [], []
    for _ in range(6):
        g = random_warp(rng, 0.6)
        heights = rng.uniform(0.6, 1.4, size=centers.size)
        clean = bumps(g(grid.t), centers, heights, 0.035)
        vals.append(clean + rng.normal(0.0, 0.05, size=grid.n_samples))
        sets.append(LandmarkSet([_invert(g, centers[2])]))
    return vals, sets


def _gaussian_bumps_pair(rng, grid):
    c1 = np.array([0.14, 0.31, 0.48, 0.65, 0.82]) + rng.uniform(-0.01, 0.01, size=5)
    h1 = np.array([0.8, 1.0, 0.7, 0.9, 1.1]) * rng.uniform(0.95, 1.05, size=5)
    c2 = 0.42 + rng.uniform(-0.01, 0.01)
    f1 = bumps(grid.t, c1, h1, 0.04)
    f2 = bumps(grid.t, [c2], [1.2], 0.06)
    return [f1, f2], [LandmarkSet([c1[-1]]), LandmarkSet([c2])]


def _two_landmark_family(rng, grid):
    centers = [0.18, 0.42, 0.62, 0.85]
    heights = [0.7, 1.0, 0.8, 0.6]
    marks = np.array([0.3, 0.73])
    vals, sets = [], []
    for _ in range(5):
        g = random_warp(rng, 0.5)
        amp = rng.uniform(0.9, 1.1)
        vals.append(amp * bumps(g(grid.t), centers, heights, 0.05))
        pos = _invert(g, marks) + rng.normal(0.0, 0.04, size=2)
        sets.append(LandmarkSet(np.clip(pos, 0.05, 0.95)))
    return vals, sets


def _noisy_tall_peak_pair(rng, grid):
    vals, sets = [], []
    for peak in (0.4, 0.58):
        small_c = rng.uniform(0.08, 0.92, size=6)
        small_h = rng.uniform(0.12, 0.3, size=6)
        f = bumps(grid.t, [peak], [1.0], 0.05) + bumps(grid.t, small_c, small_h, 0.02)
        vals.append(f + rng.normal(0.0, 0.01, size=grid.n_samples))
        sets.append(LandmarkSet([peak]))
    return vals, sets


_GENERATORS = {
    "arbitrary_landmarks": _arbitrary_landmarks,
    "precise_landmarks_noisy": _precise_landmarks_noisy,
    "gaussian_bumps_pair": _gaussian_bumps_pair,
    "two_landmark_family": _two_landmark_family,
    "noisy_tall_peak_pair": _noisy_tall_peak_pair,
}


def synth_scenario(name: str, seed: int = 0, n_samples: int = 201) -> FunctionBundle:
    """Generate one of the named scenarios; identical seeds give identical bundles."""
    try:
        gen = _GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    grid = Grid(n_samples)
    rng = np.random.default_rng(seed)
    vals, sets = gen(rng, grid)
    names = tuple(f"f{i + 1}" for i in range(len(vals)))
    return FunctionBundle(grid, names, np.array(vals), tuple(sets))
