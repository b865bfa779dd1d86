import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softalign.funcs import (
    EPS_MONO,
    DegenerateWarpError,
    Grid,
    SampledFunction,
    Srvf,
    Warp,
    center_warps,
    compose,
    from_srvf,
    group_action,
    invert,
    l2_dist,
    mean_warp,
    project_monotone,
    to_srvf,
    warp_apply,
)

increments = st.lists(st.floats(1e-3, 10.0), min_size=4, max_size=60)


def warp_from_increments(d) -> Warp:
    d = np.asarray(d)
    v = np.concatenate([[0.0], np.cumsum(d)]) / d.sum()
    return Warp(Grid(v.size), project_monotone(v))


def test_grid_basics():
    g = Grid(5)
    assert g.t.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.dt == 0.25
    assert g.snap([0.1, 0.13, 0.9]).tolist() == [0, 1, 4]
    with pytest.raises(ValueError):
        Grid(2)
    with pytest.raises(ValueError):
        g.t[0] = 1.0


def test_sampled_function_rejects_bad_values():
    g = Grid(5)
    with pytest.raises(ValueError, match="NaN"):
        SampledFunction(g, [0, 1, np.nan, 2, 3])
    with pytest.raises(ValueError, match="grid has 5"):
        SampledFunction(g, [0, 1, 2])


def test_srvf_of_a_line_is_constant():
    f = SampledFunction.from_callable(lambda t: 4.0 * t, 51)
    assert np.allclose(to_srvf(f).values, 2.0)
    f = SampledFunction.from_callable(lambda t: -9.0 * t, 51)
    assert np.allclose(to_srvf(f).values, -3.0)


def test_srvf_round_trip_sine():
    f = SampledFunction.from_callable(lambda t: np.sin(2 * np.pi * t), 201)
    back = from_srvf(to_srvf(f), f.values[0])
    assert np.max(np.abs(back.values - f.values)) < 1e-3


def test_warp_invariants():
    g = Grid(11)
    with pytest.raises(DegenerateWarpError, match="endpoints"):
        Warp(g, np.linspace(0.0, 0.9, 11))
    vals = g.t.copy()
    vals[5] = vals[4]
    with pytest.raises(DegenerateWarpError, match="floor"):
        Warp(g, vals)
    assert Warp.identity(g).deviation() == 0.0


def test_project_monotone_lifts_tiny_steps_and_rejects_folds():
    v = np.array([0.0, 0.5, 0.5 + 1e-12, 1.0])
    out = project_monotone(v)
    assert out[0] == 0.0 and out[-1] == 1.0
    assert np.diff(out).min() >= EPS_MONO * (1 - 1e-6)
    with pytest.raises(DegenerateWarpError, match="not strictly increasing"):
        project_monotone([0.0, 0.6, 0.4, 1.0])
    with pytest.raises(DegenerateWarpError):
        project_monotone([0.0, 0.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(increments)
def test_project_monotone_output_is_a_warp(d):
    g = warp_from_increments(d)
    assert g.values[0] == 0.0 and g.values[-1] == 1.0
    assert np.all(np.diff(g.values) > 0)


@settings(max_examples=40, deadline=None)
@given(increments, increments)
def test_compose_and_invert(d1, d2):
    n = min(len(d1), len(d2))
    g1, g2 = warp_from_increments(d1[:n]), warp_from_increments(d2[:n])
    ident = Warp.identity(g1.grid)
    # composing with the identity is exact on the grid
    assert np.allclose(compose(g1, ident).values, g1.values, atol=1e-12)
    assert np.allclose(compose(ident, g1).values, g1.values, atol=1e-12)
    # the sampled inverse is exact at the grid nodes of the piecewise-linear warp
    inv = invert(g1)
    assert np.allclose(g1(inv.values), g1.grid.t, atol=1e-9)
    h = compose(g1, g2)
    assert np.all(np.diff(h.values) > 0)


def test_group_action_matches_srvf_of_warped_function():
    g = Grid(401)
    f = SampledFunction(g, np.sin(3 * g.t) + g.t**2)
    gamma = Warp(g, project_monotone(g.t + 0.1 * np.sin(np.pi * g.t)))
    direct = to_srvf(warp_apply(f, gamma))
    acted = group_action(to_srvf(f), gamma)
    assert l2_dist(direct, acted) < 5e-3


def test_group_action_is_norm_preserving():
    g = Grid(401)
    q = Srvf(g, np.cos(5 * g.t))
    gamma = Warp(g, project_monotone(g.t + 0.15 * np.sin(np.pi * g.t) / np.pi))
    assert abs(group_action(q, gamma).norm() - q.norm()) < 1e-3


def test_center_warps_mean_is_identity():
    g = Grid(101)
    ws = [Warp(g, project_monotone(g.t + c * np.sin(np.pi * g.t) / np.pi)) for c in (-0.5, 0.2, 0.6)]
    centred = center_warps(ws)
    assert mean_warp(centred).deviation() < 5e-3
