"""Soft landmark alignment: the penalised pseudometric, multiple alignment and LOOCV.

A soft alignment first hard-registers the landmarks, then lets a further warp
move away from the hard solution at a price ``lam * ||sqrt(gamma') - 1||^2``.
``lam = 0`` recovers unconstrained elastic alignment; a very large ``lam``
leaves the hard registration untouched.

The extra warp acts on q * h held cell by cell (:class:`CellSrvf`), so the
slope of the hard warp h enters exactly instead of through a smoothed
derivative. The identity extra warp then costs exactly ||q1*h1 - q2*h2||^2,
which is the hard-registration distance. With ``lam = 0`` the landmarks
carry no weight at all, and the routines run plain elastic alignment on the
original samples.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dp import AlignOutcome, DpConfig, _check_lambda, dp_penalized, dp_unconstrained, quadrature_mean
from .funcs import (
    CellSrvf,
    SampledFunction,
    Srvf,
    Warp,
    compose,
    from_srvf,
    l2_dist,
    to_srvf,
    warp_apply,
)
from .landmarks import (
    HardPair,
    LandmarkError,
    LandmarkSet,
    ReferencePolicy,
    choose_reference,
    hard_register_pair,
    hard_register_to_reference,
    landmark_dispersion,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SoftPairResult:
    d_lambda: float
    gamma_hard_1: Warp
    gamma_hard_2: Warp
    gamma_extra: Warp
    aligned_f1: SampledFunction
    aligned_f2: SampledFunction
    reference: LandmarkSet
    q1_hard: Srvf
    q2_hard: Srvf
    lam: float


@dataclass(frozen=True, eq=False)
class MultiAlignResult:
    consensus: Srvf
    consensus_function: SampledFunction
    reference: LandmarkSet
    warps_hard: list[Warp]
    warps_extra: list[Warp]
    warps_total: list[Warp]
    aligned: list[SampledFunction]
    aligned_srvfs: list[Srvf]
    dispersion: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    medoid: int
    d_lambda_matrix: np.ndarray
    lam: float


@dataclass(frozen=True, eq=False)
class LoocvResult:
    lambda_grid: np.ndarray
    errors: np.ndarray
    best_lambda: float
    fold_errors: np.ndarray = field(repr=False)
    dispersion_curve: np.ndarray | None = field(default=None, repr=False)
    tie_tol: float = 0.0

    @property
    def best_index(self) -> int:
        return int(np.flatnonzero(self.lambda_grid == self.best_lambda)[0])


def _map(fn, items, workers: int | None):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


class Workspace:
    """SRVFs, landmarks and caches shared by the pairwise and multiple routines.

    Hard registrations do not depend on ``lam``, so they are cached across a
    lambda sweep; pairwise soft distances are cached per ``lam``.
    """

    def __init__(
        self,
        qs: Sequence[Srvf],
        sets: Sequence[LandmarkSet],
        policy: ReferencePolicy | None = None,
        cfg: DpConfig | None = None,
        workers: int | None = None,
    ):
        if len(qs) != len(sets):
            raise LandmarkError(f"{len(qs)} functions but {len(sets)} landmark sets")
        counts = {len(s) for s in sets}
        if len(counts) > 1:
            raise LandmarkError(f"landmark sets have different sizes: {sorted(counts)}")
        grids = {q.grid for q in qs}
        if len(grids) > 1:
            raise ValueError("all functions must share one grid")
        self.qs = list(qs)
        self.sets = list(sets)
        self.policy = policy or ReferencePolicy("medoid")
        self.cfg = cfg or DpConfig()
        self.workers = workers
        self._pairs: dict[tuple[int, int], HardPair] = {}
        self._dist: dict[tuple[float, int, int], float] = {}
        self._hard: dict[tuple[int, int, bytes], Warp] = {}
        self._free: dict[tuple[int, int], Warp] = {}

    @property
    def pair_policy(self) -> ReferencePolicy:
        """Reference used for pairwise distances: the fixed one if given, else the pair mean."""
        return self.policy if self.policy.kind == "fixed" else ReferencePolicy("mean")

    def hard_pair(self, i: int, j: int) -> HardPair:
        key = (i, j)
        if key not in self._pairs:
            self._pairs[key] = hard_register_pair(
                self.qs[i], self.sets[i], self.qs[j], self.sets[j], self.pair_policy, self.cfg
            )
        return self._pairs[key]

    def distance(self, i: int, j: int, lam: float) -> float:
        if i == j:
            return 0.0
        key = (lam, i, j)
        if key not in self._dist:
            if lam == 0.0:
                cost = dp_unconstrained(self.qs[i], self.qs[j], self.cfg).cost
            else:
                cost = _soft_extra(self.qs[i], self.qs[j], self.hard_pair(i, j), lam, self.cfg).cost
            self._dist[key] = float(np.sqrt(cost))
        return self._dist[key]

    def distance_matrix(self, lam: float, subset: Sequence[int] | None = None) -> np.ndarray:
        idx = list(range(len(self.qs))) if subset is None else list(subset)
        pairs = [(a, b) for a in range(len(idx)) for b in range(a + 1, len(idx))]
        for a, b in pairs:
            self.hard_pair(idx[a], idx[b])
        vals = _map(lambda ab: self.distance(idx[ab[0]], idx[ab[1]], lam), pairs, self.workers)
        mat = np.zeros((len(idx), len(idx)))
        for (a, b), v in zip(pairs, vals):
            mat[a, b] = mat[b, a] = v
        return mat

    def hard_to(self, i: int, template: int, tau_ref: LandmarkSet) -> Warp:
        key = (i, template, tau_ref.positions.tobytes())
        if key not in self._hard:
            if i == template and self.sets[i] == tau_ref:
                self._hard[key] = Warp.identity(self.qs[i].grid)
            else:
                self._hard[key] = hard_register_to_reference(
                    self.qs[i], self.sets[i], self.qs[template], tau_ref, self.cfg
                )
        return self._hard[key]

    def free_to(self, i: int, template: int) -> Warp:
        """Unconstrained elastic warp of function i onto the template."""
        key = (i, template)
        if key not in self._free:
            if i == template:
                self._free[key] = Warp.identity(self.qs[i].grid)
            else:
                self._free[key] = dp_unconstrained(self.qs[template], self.qs[i], self.cfg).warp
        return self._free[key]


def _soft_extra(q1: Srvf, q2: Srvf, hp: HardPair, lam: float, cfg: DpConfig) -> AlignOutcome:
    """Penalised extra warp of q2 * h2 against q1 * h1; lam = inf keeps the identity."""
    return dp_penalized(CellSrvf.acted(q1, hp.gamma1), CellSrvf.acted(q2, hp.gamma2), lam, cfg)


def soft_pair(
    f1: SampledFunction,
    tau1: LandmarkSet,
    f2: SampledFunction,
    tau2: LandmarkSet,
    lam: float,
    policy: ReferencePolicy | None = None,
    cfg: DpConfig | None = None,
    *,
    center: bool = False,
) -> SoftPairResult:
    """Soft pairwise registration: hard registration, then a penalised elastic warp of f2."""
    cfg = cfg or DpConfig()
    lam = _check_lambda(lam)
    if f1.grid != f2.grid:
        raise ValueError("soft_pair needs f1 and f2 on one grid")
    q1, q2 = to_srvf(f1), to_srvf(f2)
    hp = hard_register_pair(q1, tau1, q2, tau2, policy, cfg, center=center)
    if lam == 0.0:
        # no weight on the landmarks: plain elastic alignment of f2 onto f1
        ident = Warp.identity(f1.grid)
        h1 = h2 = ident
        out = dp_unconstrained(q1, q2, cfg)
    else:
        h1, h2 = hp.gamma1, hp.gamma2
        out = _soft_extra(q1, q2, hp, lam, cfg)
    return SoftPairResult(
        d_lambda=float(np.sqrt(out.cost)),
        gamma_hard_1=h1,
        gamma_hard_2=h2,
        gamma_extra=out.warp,
        aligned_f1=warp_apply(f1, h1),
        aligned_f2=warp_apply(f2, compose(h2, out.warp)),
        reference=hp.reference,
        q1_hard=CellSrvf.acted(q1, h1).nodal(),
        q2_hard=CellSrvf.acted(q2, h2).nodal(),
        lam=lam,
    )


def d_lambda(
    q1: Srvf,
    tau1: LandmarkSet,
    q2: Srvf,
    tau2: LandmarkSet,
    lam: float,
    tau_ref: LandmarkSet | Sequence[float],
    cfg: DpConfig | None = None,
) -> float:
    """Soft landmark distance with a fixed reference partition."""
    cfg = cfg or DpConfig()
    lam = _check_lambda(lam)
    policy = ReferencePolicy.fixed(tau_ref.positions if isinstance(tau_ref, LandmarkSet) else tau_ref)
    hp = hard_register_pair(q1, tau1, q2, tau2, policy, cfg)
    if lam == 0.0:
        return float(np.sqrt(dp_unconstrained(q1, q2, cfg).cost))
    return float(np.sqrt(_soft_extra(q1, q2, hp, lam, cfg).cost))


def _as_sets(landmark_sets, m: int) -> list[LandmarkSet]:
    if landmark_sets is None:
        return [LandmarkSet() for _ in range(m)]
    return [s if isinstance(s, LandmarkSet) else LandmarkSet(s) for s in landmark_sets]


def _medoid(dmat: np.ndarray) -> int:
    # argmin keeps the lowest index on ties
    return int(np.argmin((dmat**2).sum(axis=1)))


def _multiple(
    ws: Workspace,
    funcs: Sequence[SampledFunction],
    lam: float,
    subset: Sequence[int],
    tol: float,
    max_iter: int,
) -> MultiAlignResult:
    idx = list(subset)
    qs = [ws.qs[i] for i in idx]
    sets = [ws.sets[i] for i in idx]
    dmat = ws.distance_matrix(lam, idx)
    med_local = _medoid(dmat)
    med = idx[med_local]
    if ws.policy.kind == "medoid":
        tau_ref = sets[med_local]
    elif ws.policy.kind == "from_function":
        tau_ref = ws.sets[ws.policy.value]
    else:
        tau_ref = choose_reference(sets, ws.policy)
    grid = qs[0].grid
    if len(tau_ref):
        tau_ref.check_gaps(grid)

    if lam == 0.0:
        # landmarks carry no weight: start from unconstrained warps onto the medoid
        base = [Warp.identity(grid)] * len(idx)
        reps = [CellSrvf.of(q) for q in qs]
        extra = _map(lambda i: ws.free_to(i, med), idx, ws.workers)
    else:
        base = _map(lambda i: ws.hard_to(i, med, tau_ref), idx, ws.workers)
        reps = [CellSrvf.acted(q, h) for q, h in zip(qs, base)]
        extra = [Warp.identity(grid)] * len(idx)
    mu = quadrature_mean(reps, extra)
    scale = max(mu.norm(), 1e-12)

    def step(k: int) -> AlignOutcome:
        return dp_penalized(mu, reps[k], lam, ws.cfg)

    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        outs = _map(step, range(len(idx)), ws.workers)
        extra = [o.warp for o in outs]
        trace.append(float(sum(o.cost for o in outs)))
        new_mu = quadrature_mean(reps, extra)
        change = l2_dist(new_mu, mu) / scale
        mu = new_mu
        if change < tol:
            converged = True
            break
    if not converged:
        log.warning("multiple alignment stopped after %d iterations without converging", max_iter)

    total = extra if lam == 0.0 else [compose(h, g) for h, g in zip(base, extra)]
    fs = [funcs[i] for i in idx]
    f0 = float(np.mean([f.values[0] for f in fs]))
    return MultiAlignResult(
        consensus=mu,
        consensus_function=from_srvf(mu, f0),
        reference=tau_ref,
        warps_hard=base,
        warps_extra=extra,
        warps_total=total,
        aligned=[warp_apply(f, w) for f, w in zip(fs, total)],
        aligned_srvfs=[CellSrvf.acted(q, w).nodal() for q, w in zip(qs, total)],
        dispersion=landmark_dispersion(total, sets),
        iterations=it,
        objective_trace=np.array(trace),
        converged=converged,
        medoid=med_local,
        d_lambda_matrix=dmat,
        lam=lam,
    )


def soft_multiple(
    funcs: Sequence[SampledFunction],
    landmark_sets=None,
    lam: float = 0.0,
    policy: ReferencePolicy | None = None,
    cfg: DpConfig | None = None,
    tol: float = 1e-4,
    max_iter: int = 20,
    *,
    workers: int | None = None,
    workspace: Workspace | None = None,
) -> MultiAlignResult:
    """Multiple soft alignment around a consensus SRVF.

    The medoid under d_lambda seeds the consensus; every function is hard
    registered to it once, then consensus updates and penalised DP
    alignments of the hard-registered SRVFs alternate until the consensus
    moves less than ``tol`` (relative L2) or ``max_iter`` rounds have run.
    With ``lam = 0`` the landmarks are ignored and the rounds are plain
    elastic alignments of the original SRVFs.
    """
    lam = _check_lambda(lam)
    if len(funcs) < 2:
        raise ValueError("multiple alignment needs at least two functions")
    ws = workspace or Workspace(
        [to_srvf(f) for f in funcs], _as_sets(landmark_sets, len(funcs)), policy, cfg, workers
    )
    return _multiple(ws, funcs, lam, range(len(funcs)), tol, max_iter)


def default_lambda_grid(qs: Sequence[Srvf], cfg: DpConfig | None = None, n_points: int = 20) -> np.ndarray:
    """{0} plus log-spaced points over [1e-3 s, 1e3 s], s the median pairwise elastic cost."""
    costs = [
        dp_unconstrained(qs[i], qs[j], cfg).cost for i in range(len(qs)) for j in range(i + 1, len(qs))
    ]
    s = float(np.median(costs))
    if not s > 0:
        s = 1.0
    return np.concatenate([[0.0], np.logspace(np.log10(1e-3 * s), np.log10(1e3 * s), n_points)])


def loocv_lambda(
    funcs: Sequence[SampledFunction],
    landmark_sets,
    lambda_grid: Sequence[float] | None = None,
    policy: ReferencePolicy | None = None,
    cfg: DpConfig | None = None,
    tol: float = 1e-4,
    max_iter: int = 20,
    *,
    full_runs: bool = False,
    workers: int | None = None,
    tie_tol: float | None = None,
) -> LoocvResult:
    """Pick lam by leave-one-out shape error.

    For each lam and each held-out function j, the others are soft-aligned and
    their consensus is compared with q_j through an unconstrained elastic
    alignment. A fold that fails contributes +inf. With ``full_runs`` the
    landmark dispersion of a full-data run is recorded for every lam.

    Each fold error is a DP residual, resolved only to about
    1e-3 * max ||q_i||^2, so errors within ``tie_tol`` of the minimum count as
    ties and the smallest such lam wins. The default is m times that
    resolution; pass 0 for the plain argmin.
    """
    m = len(funcs)
    if m < 3:
        raise ValueError("leave-one-out needs at least three functions")
    cfg = cfg or DpConfig()
    ws = Workspace([to_srvf(f) for f in funcs], _as_sets(landmark_sets, m), policy, cfg, workers)
    grid = default_lambda_grid(ws.qs, cfg) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if grid.size == 0 or np.any(~(grid >= 0)):
        raise ValueError("lambda grid must be non-empty and non-negative")

    fold_err = np.zeros((grid.size, m))
    disp = []
    for a, lam in enumerate(grid):
        for j in range(m):
            rest = [i for i in range(m) if i != j]
            try:
                res = _multiple(ws, funcs, float(lam), rest, tol, max_iter)
                fold_err[a, j] = dp_unconstrained(res.consensus, ws.qs[j], cfg).cost
            except (ValueError, FloatingPointError) as exc:
                log.warning("fold %d at lambda=%g failed: %s", j, lam, exc)
                fold_err[a, j] = np.inf
        if full_runs:
            disp.append(_multiple(ws, funcs, float(lam), range(m), tol, max_iter).dispersion)
    errors = fold_err.sum(axis=1)
    if tie_tol is None:
        tie_tol = m * 1e-3 * max(q.norm() ** 2 for q in ws.qs)
    floor = np.min(errors)
    if not np.isfinite(floor):
        raise ValueError("every lambda on the grid had a failing fold")
    best = min((a for a in range(grid.size) if errors[a] <= floor + tie_tol), key=lambda a: grid[a])
    return LoocvResult(
        lambda_grid=grid,
        errors=errors,
        best_lambda=float(grid[best]),
        fold_errors=fold_err,
        dispersion_curve=np.array(disp) if full_runs else None,
        tie_tol=float(tie_tol),
    )


def unconstrained_multiple(
    funcs: Sequence[SampledFunction], cfg: DpConfig | None = None, tol: float = 1e-4, max_iter: int = 20
) -> MultiAlignResult:
    """Plain elastic multiple alignment: no landmarks, no penalty."""
    return soft_multiple(funcs, None, 0.0, ReferencePolicy("mean"), cfg, tol, max_iter)


def hard_multiple(
    funcs: Sequence[SampledFunction],
    landmark_sets,
    policy: ReferencePolicy | None = None,
    cfg: DpConfig | None = None,
) -> MultiAlignResult:
    """Hard registration of every function to the medoid, without further alignment."""
    return soft_multiple(funcs, landmark_sets, np.inf, policy, cfg, max_iter=1)
