"""End-to-end acceptance checks; each prints one PASS/FAIL line through the ``criterion`` fixture."""
import time

import numpy as np
import pytest

from oracles import PathTable, brute_force_min

from softalign.dp import DpConfig, dp_penalized, dp_unconstrained, penalized_l2_baseline
from softalign.funcs import Grid, SampledFunction, Srvf, compose, from_srvf, to_srvf
from softalign.landmarks import LandmarkSet, hard_register_to_reference, landmark_dispersion
from softalign.soft import d_lambda, hard_multiple, loocv_lambda, soft_multiple, unconstrained_multiple
from softalign.synth import SCENARIOS, bumps, random_warp, synth_scenario

G = Grid(201)
LAMS = (0.0, 0.1, 1.0, 10.0)


def _random_bump_params(rng):
    c = np.sort(rng.uniform(0.12, 0.88, 3))
    h = rng.uniform(0.5, 1.5, 3)
    w = rng.uniform(0.04, 0.08, 3)
    return (c, h, w), c[1]


def _eps_dp(qs):
    return 1e-3 * max(q.norm() ** 2 for q in qs)


def test_c01_dp_matches_exhaustive_enumeration(criterion):
    table = PathTable(12, 3)
    cfg = DpConfig(lattice_n=12, slope_cap=3)
    g = Grid(12)
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        a, b = rng.normal(size=12), rng.normal(size=12)
        q1, q2 = Srvf(g, a), Srvf(g, b)
        for lam in LAMS:
            best = brute_force_min(a, b, lam, table)[0]
            got = [dp_penalized(q1, q2, lam, cfg).cost]
            if lam == 0.0:
                got.append(dp_unconstrained(q1, q2, cfg).cost)
            worst = max(worst, max(abs(c - best) / best for c in got))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 30.0
    criterion(1, "DP oracle equivalence", ok, f"50 pairs x 4 lambdas, worst rel diff {worst:.1e}, {elapsed:.1f} s")


def test_c02_pseudometric(criterion):
    rng = np.random.default_rng(11)
    ref = LandmarkSet([0.5])
    t0 = time.perf_counter()
    bad = []
    for i in range(100):
        items = []
        for _ in range(3):
            params, mark = _random_bump_params(rng)
            items.append((to_srvf(SampledFunction(G, bumps(G.t, *params))), LandmarkSet([mark])))
        (qa, ta), (qb, tb), (qc, tc) = items
        lam = LAMS[i % 4]
        eps = _eps_dp([qa, qb, qc])
        dab = d_lambda(qa, ta, qb, tb, lam, ref)
        dba = d_lambda(qb, tb, qa, ta, lam, ref)
        dbc = d_lambda(qb, tb, qc, tc, lam, ref)
        dac = d_lambda(qa, ta, qc, tc, lam, ref)
        daa = d_lambda(qa, ta, qa, ta, lam, ref)
        if daa != 0.0 or min(dab, dbc, dac) < 0.0:
            bad.append((i, "identity"))
        if abs(dab - dba) > eps:
            bad.append((i, "symmetry"))
        if max(dac - dab - dbc, dab - dac - dbc, dbc - dab - dac) > eps:
            bad.append((i, "triangle"))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 120.0
    criterion(2, "pseudometric suite", ok, f"100 triples, {len(bad)} violations {bad[:3]}, {elapsed:.1f} s")


def test_c03_isometry(criterion):
    rng = np.random.default_rng(7)
    ref = LandmarkSet([0.5])
    s = np.linspace(0.0, 1.0, 100001)
    rel = []
    for i in range(30):
        (sa, la), (sb, lb) = _random_bump_params(rng), _random_bump_params(rng)
        lam = LAMS[i % 4]
        qa, qb = to_srvf(SampledFunction(G, bumps(G.t, *sa))), to_srvf(SampledFunction(G, bumps(G.t, *sb)))
        d0 = d_lambda(qa, LandmarkSet([la]), qb, LandmarkSet([lb]), lam, ref)
        for _ in range(5):
            g0 = random_warp(rng, 0.5)
            ga = to_srvf(SampledFunction(G, bumps(g0(G.t), *sa)))
            gb = to_srvf(SampledFunction(G, bumps(g0(G.t), *sb)))
            # landmarks move with the warp: gamma0^-1(tau)
            inv = lambda y: float(np.interp(y, g0(s), s))  # noqa: E731
            d1 = d_lambda(ga, LandmarkSet([inv(la)]), gb, LandmarkSet([inv(lb)]), lam, ref)
            rel.append(abs(d1 - d0) / d0)
    rel = np.array(rel)
    n_bad = int((rel > 5e-2).sum())
    criterion(3, "isometry", n_bad == 0,
              f"{n_bad}/150 relative changes above 5e-2, max {rel.max():.3f}, median {np.median(rel):.4f}")


def test_c04_hard_registration_exactness(criterion):
    worst = 0.0
    identical = True
    for name in SCENARIOS:
        b = synth_scenario(name, 0)
        fs, sets = b.functions, b.landmark_sets()
        res = hard_multiple(fs, sets)
        for w, tau in zip(res.warps_hard, sets):
            worst = max(worst, float(np.max(np.abs(w.inverse_at(tau.positions) - res.reference.positions))))
        qs = [to_srvf(f) for f in fs]
        for q in qs[1:]:
            free = hard_register_to_reference(q, LandmarkSet(), qs[0], LandmarkSet())
            identical &= np.array_equal(free.values, dp_unconstrained(qs[0], q).warp.values)
    ok = worst <= G.dt and identical
    criterion(4, "hard registration exactness", ok,
              f"max |gamma^-1(tau) - tau_ref| = {worst / G.dt:.3f} cells; zero-landmark warps identical: {identical}")


def test_c05_baseline_asymmetry(criterion):
    f1, f2 = synth_scenario("gaussian_bumps_pair", 0).functions

    def asym(fwd, rev):
        return compose(fwd, rev).deviation()

    base = {lam: asym(penalized_l2_baseline(f1, f2, lam).warp, penalized_l2_baseline(f2, f1, lam).warp)
            for lam in (0.0, 0.5)}
    q1, q2 = to_srvf(f1), to_srvf(f2)
    srvf = max(asym(dp_penalized(q1, q2, lam).warp, dp_penalized(q2, q1, lam).warp) for lam in (0.0, 0.5))
    ok = base[0.5] > base[0.0] and srvf <= 3.0 / G.n_samples
    criterion(5, "penalised-L2 asymmetry", ok,
              f"baseline sup|g12 o g21 - id| {base[0.0]:.4f} -> {base[0.5]:.4f}; SRVF {srvf:.4f} (limit {3 / 201:.4f})")


def test_c06_lambda_sweep(criterion):
    b = synth_scenario("two_landmark_family", 0)
    fs, sets = b.functions, b.landmark_sets()
    free = landmark_dispersion(unconstrained_multiple(fs).warps_total, sets)
    at0 = soft_multiple(fs, sets, 0.0).dispersion
    top = soft_multiple(fs, sets, 1e9)
    curve = np.array([soft_multiple(fs, sets, lam).dispersion for lam in np.logspace(-3, 9, 10)])
    jitter = float(np.max(np.diff(curve, axis=0)))
    extra = max(w.deviation() for w in top.warps_extra)
    ok = (
        np.all(np.abs(at0 - free) <= G.dt)
        and np.all(top.dispersion <= 2.0 / G.n_samples)
        and extra <= 2.0 / G.n_samples
        and jitter <= G.dt
    )
    cells = lambda x: np.round(np.asarray(x) / G.dt, 2).tolist()  # noqa: E731
    criterion(6, "lambda sweep", ok,
              f"dispersion (cells) unconstrained {cells(free)}, lambda=0 {cells(at0)}, lambda=1e9 {cells(top.dispersion)}; "
              f"largest rise along the grid {jitter / G.dt:.2f} cells")


@pytest.mark.slow
def test_c07_loocv_arbitrary_landmarks(criterion):
    found = {}
    for seed in (0, 1, 2):
        b = synth_scenario("arbitrary_landmarks", seed)
        found[seed] = loocv_lambda(b.functions, b.landmark_sets()).best_lambda
    ok = all(v == 0.0 for v in found.values())
    criterion(7, "LOOCV picks lambda = 0 for arbitrary landmarks", ok, f"best lambda by seed {found}")


@pytest.mark.slow
def test_c08_loocv_precise_landmarks(criterion):
    b = synth_scenario("precise_landmarks_noisy", 0)
    fs, sets = b.functions, b.landmark_sets()
    res = loocv_lambda(fs, sets)
    k = res.lambda_grid.size
    upper = res.best_index >= k - k // 3
    soft = soft_multiple(fs, sets, res.best_lambda).dispersion
    hard = hard_multiple(fs, sets).dispersion
    close = bool(np.all(soft <= 2.0 * hard))
    criterion(8, "LOOCV picks a large lambda for precise landmarks", upper and close,
              f"best lambda {res.best_lambda:.4g} (index {res.best_index} of {k}, upper third: {upper}); "
              f"dispersion {soft[0] / G.dt:.3f} cells vs hard {hard[0] / G.dt:.3f} cells")


def test_c09_algorithm_stability(criterion):
    problems = []
    for name in SCENARIOS:
        b = synth_scenario(name, 0)
        fs, sets = b.functions, b.landmark_sets()
        eps = _eps_dp([to_srvf(f) for f in fs])
        for lam in (0.0, 1.0, 100.0):
            r = soft_multiple(fs, sets, lam)
            rise = float(np.max(np.diff(r.objective_trace), initial=0.0))
            if not r.converged or r.iterations > 20 or rise > eps:
                problems.append((name, lam, r.iterations, rise))

    rng = np.random.default_rng(3)
    fs, sets = [], []
    s = np.linspace(0.0, 1.0, 20001)
    for _ in range(10):
        w = random_warp(rng, 0.5)
        fs.append(SampledFunction(G, bumps(w(G.t), [0.25, 0.5, 0.75], [1.0, 0.7, 0.9], 0.06)))
        sets.append(LandmarkSet([np.interp(0.5, w(s), s)]))
    soft_multiple(fs[:3], sets[:3], 1.0)  # compile outside the timing
    times = []
    for lam in (0.0, 1.0):
        t0 = time.perf_counter()
        soft_multiple(fs, sets, lam)
        times.append(time.perf_counter() - t0)
    ok = not problems and max(times) < 10.0
    criterion(9, "multiple alignment stability", ok,
              f"15 runs, problems {problems}; m=10 alignment {max(times):.1f} s")


def test_c10_srvf_round_trip(criterion):
    errs = []
    for n in (51, 101, 201):
        f = SampledFunction.from_callable(lambda t: np.sin(2 * np.pi * t), n)
        back = from_srvf(to_srvf(f), f.values[0])
        errs.append(float(np.max(np.abs(back.values - f.values))))
    ok = errs[-1] <= 1e-3 and errs[0] > errs[1] > errs[2]
    criterion(10, "SRVF round trip", ok, "sup error at n = 51, 101, 201: " + ", ".join(f"{e:.2e}" for e in errs))
