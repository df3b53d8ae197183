import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delegsim.errors import DimensionError, DomainError, ParameterError
from delegsim.games import CoordinationMatrix, PdMatrix, SymmetricGame
from delegsim.population import (
    DEFAULT_REGIME_COEFFS,
    MacroState,
    PopulationDistribution,
    RegimeSet,
    aggregate_macro,
    find_rest_points,
    imitation_step,
    integrate_replicator,
    replicator_step,
)
from delegsim.strategy_core import Regime

PD = PdMatrix().as_game()
CO = CoordinationMatrix().as_game()


def oracle_step(x, A, dt):
    # textbook Euler step, written independently of the library loop
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    f = A @ x
    y = x + dt * x * (f - x @ f)
    return y / y.sum()


def P(*w):
    return PopulationDistribution(tuple(w))


def test_types():
    assert len(RegimeSet()) == 3
    assert RegimeSet().index(Regime.MIXED_ASSURANCE) == 2
    with pytest.raises(DomainError):
        RegimeSet(())
    with pytest.raises(DomainError):
        RegimeSet((Regime.MIXED_ASSURANCE, Regime.MIXED_ASSURANCE))
    with pytest.raises(DomainError):
        P(0.5, 0.6)
    with pytest.raises(DomainError):
        P(-0.1, 1.1)
    with pytest.raises(DomainError):
        MacroState(0.5, 1.2, 0.5)


# ---- macro projection


def test_macro_vertex_and_midpoint():
    assert aggregate_macro(P(1.0, 0.0, 0.0), DEFAULT_REGIME_COEFFS) == DEFAULT_REGIME_COEFFS[0]
    mid = aggregate_macro(P(0.5, 0.5, 0.0), DEFAULT_REGIME_COEFFS)
    a, b = DEFAULT_REGIME_COEFFS[0].as_tuple(), DEFAULT_REGIME_COEFFS[1].as_tuple()
    assert mid.as_tuple() == pytest.approx(tuple((x + y) / 2 for x, y in zip(a, b)), abs=1e-15)


def test_macro_frozen_convex_combination():
    # 0.2*(.85,.10,.80) + 0.5*(.70,.60,.20) + 0.3*(.88,.05,.60)
    out = aggregate_macro(P(0.2, 0.5, 0.3), DEFAULT_REGIME_COEFFS)
    assert out.as_tuple() == pytest.approx((0.784, 0.335, 0.44), abs=1e-12)


def test_macro_dimension_mismatch():
    with pytest.raises(DimensionError):
        aggregate_macro(P(0.5, 0.5), DEFAULT_REGIME_COEFFS)


# ---- replicator


def test_replicator_coordination_half():
    dt = 0.01
    out = replicator_step(P(0.5, 0.5), CO, dt)
    assert out[0] == pytest.approx(0.5 + dt * 0.125, abs=1e-15)


def test_replicator_matches_oracle():
    x = np.array([0.2, 0.3, 0.5])
    A = ((0.0, 2.0, -1.0), (1.0, 0.0, 3.0), (-2.0, 1.0, 0.5))
    g = SymmetricGame(A)
    pi = PopulationDistribution(tuple(x))
    for _ in range(50):
        pi = replicator_step(pi, g, 0.05)
        x = oracle_step(x, A, 0.05)
    assert np.allclose(pi.weights, x, atol=1e-13)


def test_replicator_errors():
    with pytest.raises(ParameterError):
        replicator_step(P(0.5, 0.5), PD, 0.0)
    with pytest.raises(DimensionError):
        replicator_step(P(0.2, 0.3, 0.5), PD, 0.01)
    with pytest.raises(ParameterError):
        integrate_replicator(P(0.5, 0.5), PD, steps=0)


@given(st.integers(0, 1), st.sampled_from([PD, CO]))
def test_vertex_absorption(k, g):
    v = PopulationDistribution.vertex(2, k)
    assert replicator_step(v, g, 0.01) == v


@settings(max_examples=60)
@given(st.floats(0.001, 0.999), st.sampled_from([PD, CO]), st.integers(1, 500))
def test_simplex_conservation(p, g, steps):
    tr = integrate_replicator(P(p, 1.0 - p), g, 0.01, steps)
    w = tr.weights
    assert np.all(w >= 0.0)
    assert np.all(np.abs(w.sum(axis=1) - 1.0) <= 1e-12)


@given(st.floats(0.01, 0.99), st.tuples(st.floats(3.1, 10), st.floats(1.1, 3.0), st.floats(0.1, 1.0)))
def test_pd_dominance_monotone(p, trp):
    t, r, pp = trp
    g = PdMatrix(t, r, pp, 0.0).as_game()
    d = integrate_replicator(P(1.0 - p, p), g, 0.01, 300).weights[:, 1]
    assert np.all(np.diff(d) >= 0.0)
    interior = d[:-1] < 1.0
    assert np.all(np.diff(d)[interior] > 0.0)


def test_pd_convergence_from_one_percent():
    tr = integrate_replicator(P(0.99, 0.01), PD, 0.01, 5000)
    hit = np.nonzero(tr.weights[:, 1] > 0.999)[0]
    assert hit.size and tr.steps[hit[0]] < 5000


def test_coordination_basins():
    assert integrate_replicator(P(0.6, 0.4), CO, 0.01, 5000).final[0] > 0.999
    assert integrate_replicator(P(0.3, 0.7), CO, 0.01, 5000).final[1] > 0.999
    assert integrate_replicator(P(0.4, 0.6), CO, 0.01, 5000).final[0] == pytest.approx(0.4, abs=1e-9)


def test_integrate_thinning_keeps_last():
    tr = integrate_replicator(P(0.5, 0.5), PD, 0.01, 25, thin=10)
    assert tr.steps.tolist() == [0, 10, 20, 25]
    assert len(tr) == 4


HAWK_DOVE = SymmetricGame(((-1.0, 2.0), (0.0, 1.0)))


@pytest.mark.parametrize("g,ess", [(PD, (0.0, 1.0)), (CO, (1.0, 0.0)), (CO, (0.0, 1.0)), (HAWK_DOVE, (0.5, 0.5))])
@pytest.mark.parametrize("toward", [0, 1])
def test_ess_stability(g, ess, toward):
    e = np.array(ess)
    target = np.eye(2)[toward]
    start = e + 0.01 * (target - e) / max(np.abs(target - e).max(), 1e-12)
    if np.allclose(start, e):
        start = e  # already at that vertex
    final = integrate_replicator(P(*start), g, 0.01, 5000).final
    assert np.max(np.abs(np.array(final.weights) - e)) <= 1e-3


# ---- imitation


def test_imitation_homogeneous_unchanged():
    pop = [1] * 50
    assert imitation_step(pop, PD, 1.0, 0).tolist() == pop


def test_imitation_two_agents():
    copied = 0
    for seed in range(200):
        out = imitation_step([0, 1], PD, 1.0, seed)
        assert out[1] == 1  # the defector never copies
        copied += out[0] == 1
    assert copied > 0


def test_imitation_errors():
    with pytest.raises(DomainError):
        imitation_step([], PD, 1.0, 0)
    with pytest.raises(ParameterError):
        imitation_step([0, 1], PD, 0.0, 0)
    with pytest.raises(DomainError):
        imitation_step([0, 2], PD, 1.0, 0)


def test_imitation_deterministic_given_seed():
    pop = np.arange(100) % 2
    assert np.array_equal(imitation_step(pop, PD, 0.5, 9), imitation_step(pop, PD, 0.5, 9))


def test_large_population_tracks_replicator_pd():
    rng = np.random.default_rng(11)
    pop = (np.arange(10_000) < 5_000).astype(np.int64)  # half defectors
    for _ in range(2000):
        pop = imitation_step(pop, PD, 1.0, rng)
    assert abs(pop.mean() - 1.0) <= 0.05


def test_large_population_tracks_replicator_coordination():
    rng = np.random.default_rng(11)
    pop = (np.arange(10_000) >= 6_000).astype(np.int64)  # 60% H
    for _ in range(2000):
        pop = imitation_step(pop, CO, 1.0, rng)
    rep = integrate_replicator(P(0.6, 0.4), CO, 0.01, 20_000).final[1]
    assert abs(pop.mean() - rep) <= 0.05


# ---- rest points


def test_rest_points_pd_vertices_only():
    pts = find_rest_points(PD)
    assert [p.weights for p in pts] == [(0.0, 1.0), (1.0, 0.0)]


def test_rest_points_coordination():
    pts = sorted(p[0] for p in find_rest_points(CO))
    assert len(pts) == 3
    assert pts[0] == 0.0 and pts[2] == 1.0
    assert pts[1] == pytest.approx(0.4, abs=1e-9)


def test_rest_points_identical_rows():
    g = SymmetricGame(((1.0, 2.0), (1.0, 2.0)))
    assert len(find_rest_points(g, grid_density=11)) == 11


def test_rest_points_hawk_dove():
    pts = sorted(p[0] for p in find_rest_points(HAWK_DOVE))
    assert pts[1] == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ParameterError):
        find_rest_points(PD, grid_density=1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4))
def test_rest_points_are_rest(vals):
    g = SymmetricGame((tuple(vals[:2]), tuple(vals[2:])))
    A = g.matrix
    for p in find_rest_points(g, grid_density=21):
        x = np.array(p.weights)
        f = A @ x
        assert np.max(np.abs(x * (f - x @ f))) < 1e-9
        assert math.isclose(sum(p.weights), 1.0, abs_tol=1e-12)
