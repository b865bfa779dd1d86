"""Landmark sets, reference selection and hard (exact) landmark registration."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dp import DpConfig, dp_unconstrained
from .funcs import (
    Grid,
    SampledFunction,
    Srvf,
    Warp,
    center_warps,
    from_srvf,
    group_action,
    mean_srvf,
    mean_warp,
    project_monotone,
    to_srvf,
)


class LandmarkError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    positions: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        if not np.all(np.isfinite(pos)):
            raise LandmarkError("landmarks must be finite")
        if pos.size and (pos[0] <= 0.0 or pos[-1] >= 1.0):
            raise LandmarkError(f"landmarks must lie strictly inside (0, 1), got {pos.tolist()}")
        if np.any(np.diff(pos) <= 0.0):
            raise LandmarkError(f"landmarks must be strictly increasing, got {pos.tolist()}")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.size

    def __eq__(self, other) -> bool:
        return isinstance(other, LandmarkSet) and np.array_equal(self.positions, other.positions)

    def check_gaps(self, grid: Grid, min_gap: float | None = None) -> None:
        gap = 2.0 / grid.n_samples if min_gap is None else min_gap
        padded = np.concatenate([[0.0], self.positions, [1.0]])
        if np.any(np.diff(padded) < gap):
            raise LandmarkError(
                f"landmarks {self.positions.tolist()} are closer than {gap:.4g} to each other or to the ends"
            )


@dataclass(frozen=True)
class ReferencePolicy:
    """How to pick the reference landmarks.

    kind is one of ``fixed`` (value = positions), ``from_function`` (value =
    index into the landmark list), ``mean`` or ``medoid``. ``medoid`` only has
    meaning inside multiple alignment, where it means the landmarks of the
    medoid function; elsewhere it falls back to ``mean``.
    """

    kind: str = "mean"
    value: object = None

    def __post_init__(self):
        if self.kind not in ("fixed", "from_function", "mean", "medoid"):
            raise ValueError(f"unknown reference policy {self.kind!r}")
        if self.kind == "fixed":
            object.__setattr__(self, "value", LandmarkSet(self.value))
        if self.kind == "from_function" and not isinstance(self.value, (int, np.integer)):
            raise ValueError("from_function needs an integer index")

    @classmethod
    def fixed(cls, positions) -> "ReferencePolicy":
        return cls("fixed", positions)

    @classmethod
    def from_function(cls, index: int) -> "ReferencePolicy":
        return cls("from_function", int(index))


def choose_reference(sets: Sequence[LandmarkSet], policy: ReferencePolicy) -> LandmarkSet:
    counts = {len(s) for s in sets}
    if len(counts) > 1:
        raise LandmarkError(f"landmark sets have different sizes: {sorted(counts)}")
    if policy.kind == "fixed":
        ref = policy.value
        if sets and len(ref) != len(sets[0]):
            raise LandmarkError(f"fixed reference has {len(ref)} landmarks, data has {len(sets[0])}")
        return ref
    if policy.kind == "from_function":
        return sets[policy.value]
    return LandmarkSet(np.mean([s.positions for s in sets], axis=0))


def piecewise_linear_warp(ref: LandmarkSet, target: LandmarkSet, grid: Grid) -> Warp:
    """Warp that is affine between landmarks and sends ref (snapped) to target."""
    knots_x = np.concatenate([[0.0], grid.snap(ref.positions) * grid.dt, [1.0]])
    knots_y = np.concatenate([[0.0], target.positions, [1.0]])
    return Warp(grid, project_monotone(np.interp(grid.t, knots_x, knots_y)))


def _segment_srvf(values: np.ndarray, n_points: int) -> Srvf:
    """SRVF of a function segment rescaled to [0, 1] and resampled to n_points."""
    src = np.linspace(0.0, 1.0, values.size)
    dst = np.linspace(0.0, 1.0, n_points)
    return to_srvf(SampledFunction(Grid(n_points), np.interp(dst, src, values)))


def hard_register_to_reference(
    q: Srvf,
    tau: LandmarkSet,
    q_ref: Srvf,
    tau_ref: LandmarkSet,
    cfg: DpConfig | None = None,
) -> Warp:
    """Warp gamma with gamma(tau_ref) = tau such that q * gamma matches q_ref piecewise.

    Reference landmarks are snapped to grid nodes; the target landmarks stay
    exact, so gamma^-1(tau_j) is a grid node for every j. Between consecutive
    landmarks the segments of both functions are rescaled to [0, 1] and
    aligned with the unconstrained DP.
    """
    cfg = cfg or DpConfig()
    if q.grid != q_ref.grid:
        raise ValueError("hard registration needs both SRVFs on one grid")
    if len(tau) != len(tau_ref):
        raise LandmarkError(f"landmark count mismatch: {len(tau)} vs {len(tau_ref)}")
    grid = q.grid
    if len(tau) == 0:
        return dp_unconstrained(q_ref, q, cfg).warp

    n = grid.n_samples
    ref_idx = np.concatenate([[0], grid.snap(tau_ref.positions), [n - 1]])
    if np.any(np.diff(ref_idx) < 2):
        raise LandmarkError("a reference segment spans fewer than 3 grid points")
    tgt = np.concatenate([[0.0], tau.positions, [1.0]])
    if np.any(np.diff(tgt) < 2 * grid.dt * (1.0 - 1e-9)):
        raise LandmarkError("a landmark segment is shorter than two grid cells")

    f = from_srvf(q).values
    f_ref = from_srvf(q_ref).values
    t = grid.t
    out = np.zeros(n)
    hits = np.zeros(n)
    for j in range(len(ref_idx) - 1):
        i0, i1 = ref_idx[j], ref_idx[j + 1]
        k = i1 - i0 + 1
        a, b = tgt[j], tgt[j + 1]
        # target segment sampled on its own nodes plus its exact end points
        inner = (t > a) & (t < b)
        seg_t = np.concatenate([[a], t[inner], [b]])
        seg_f = np.interp(seg_t, t, f)
        n_seg = max(k, inner.sum() + 2)
        src_t = (seg_t - a) / (b - a)
        seg_vals = np.interp(np.linspace(0.0, 1.0, n_seg), src_t, seg_f)
        q_seg = _segment_srvf(seg_vals, n_seg)
        q_ref_seg = _segment_srvf(f_ref[i0 : i1 + 1], n_seg)
        w = dp_unconstrained(q_ref_seg, q_seg, cfg).warp
        s = np.linspace(0.0, 1.0, k)
        out[i0 : i1 + 1] += a + (b - a) * w(s)
        hits[i0 : i1 + 1] += 1
    out /= hits
    out[0], out[-1] = 0.0, 1.0
    out[ref_idx[1:-1]] = tau.positions
    return Warp(grid, project_monotone(out))


@dataclass(frozen=True, eq=False)
class HardPair:
    gamma1: Warp
    gamma2: Warp
    reference: LandmarkSet
    template: Srvf


def hard_register_pair(
    q1: Srvf,
    tau1: LandmarkSet,
    q2: Srvf,
    tau2: LandmarkSet,
    policy: ReferencePolicy | None = None,
    cfg: DpConfig | None = None,
    *,
    center: bool = False,
    rounds: int = 2,
) -> HardPair:
    """Register both functions to the reference partition through a shared template.

    The template starts as the mean of the two piecewise-linearly registered
    SRVFs and is refreshed ``rounds`` times; each function is registered to it
    independently, so swapping the inputs swaps the outputs exactly.
    """
    cfg = cfg or DpConfig()
    policy = policy or ReferencePolicy()
    tau_ref = choose_reference([tau1, tau2], policy)
    grid = q1.grid
    tau_ref.check_gaps(grid)
    qs, taus = (q1, q2), (tau1, tau2)
    warps = [piecewise_linear_warp(tau_ref, tau, grid) for tau in taus]
    template = mean_srvf([group_action(q, w) for q, w in zip(qs, warps)])
    for _ in range(rounds):
        warps = [hard_register_to_reference(q, tau, template, tau_ref, cfg) for q, tau in zip(qs, taus)]
        template = mean_srvf([group_action(q, w) for q, w in zip(qs, warps)])
    if center:
        centre = mean_warp(warps)
        warps = center_warps(warps)
        tau_ref = LandmarkSet(centre(grid.snap(tau_ref.positions) * grid.dt))
        template = mean_srvf([group_action(q, w) for q, w in zip(qs, warps)])
    return HardPair(warps[0], warps[1], tau_ref, template)


def landmark_dispersion(warps: Sequence[Warp], sets: Sequence[LandmarkSet]) -> np.ndarray:
    """Population standard deviation over functions of gamma_i^-1(tau_j^(i)), per landmark."""
    if len(warps) != len(sets):
        raise LandmarkError("need one landmark set per warp")
    if not sets or len(sets[0]) == 0:
        return np.empty(0)
    mapped = np.array([w.inverse_at(s.positions) for w, s in zip(warps, sets)])
    return mapped.std(axis=0)
