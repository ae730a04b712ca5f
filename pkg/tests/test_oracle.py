"""Solvers against the exhaustive joint-grid search."""
import time

import numpy as np
import pytest

from tpmarket import APPopulation, DiscreteDistribution, TPSegment, build_population, canonicalize
from tpmarket.equilibrium import PriceGrid, solve, solve_ascending, verify

from oracle import equilibrium_set, greatest, least

N_INSTANCES = 60


def random_instance(rng):
    S = int(rng.integers(1, 4))
    n = int(rng.integers(1, 10))
    q = rng.choice(np.round(np.linspace(0.1, 5.0, 50), 3), size=S, replace=False)
    mu = rng.uniform(0.0, 1.2, size=S) * rng.choice([0.0, 1.0], size=S, p=[0.1, 0.9])
    floors = rng.choice([0.0, 0.0, 0.05, 0.1], size=S)
    market = canonicalize([TPSegment(float(a), float(b), float(c)) for a, b, c in zip(q, mu, floors)])
    pop = APPopulation(rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 2.0, n), rng.uniform(0.05, 1.0, n))
    step = float(rng.choice([0.01, 0.02, 0.05]))
    return market, pop, PriceGrid.for_system(market, pop, step)


def instances():
    rng = np.random.default_rng(20240611)
    return [random_instance(rng) for _ in range(N_INSTANCES)]


def test_random_instances_match_oracle():
    start = time.perf_counter()
    checked = 0
    for market, pop, grid in instances():
        assert np.all(grid.top <= 100)
        eq = equilibrium_set(market, pop, grid)
        assert len(eq) > 0
        hi, lo = greatest(eq), least(eq)
        assert hi is not None and lo is not None, "equilibrium set is not a lattice"
        np.testing.assert_array_equal(solve(market, pop, grid).grid_index, hi)
        np.testing.assert_array_equal(solve_ascending(market, pop, grid).grid_index, lo)
        checked += 1
    assert checked >= 50
    assert time.perf_counter() - start < 60


def test_ascending_and_descending_are_equilibria_of_the_oracle():
    for market, pop, grid in instances()[:20]:
        eq = {tuple(row) for row in equilibrium_set(market, pop, grid)}
        for result in (solve(market, pop, grid), solve_ascending(market, pop, grid)):
            assert tuple(result.grid_index) in eq
            assert verify(result, market, pop, grid).passed


@pytest.fixture(scope="module")
def two_tp_system():
    market = canonicalize([TPSegment(0.2, 0.05), TPSegment(1.0, 0.25)])
    pop = build_population(DiscreteDistribution("geometric"), DiscreteDistribution("uniform"), 50, 1.0)
    return market, pop, PriceGrid.for_system(market, pop, 0.01)


def test_geo_uni_two_segment_system_matches_oracle(two_tp_system):
    market, pop, grid = two_tp_system
    eq = equilibrium_set(market, pop, grid, block=500)
    result = solve(market, pop, grid)
    np.testing.assert_array_equal(result.grid_index, greatest(eq))
    assert result.feasible and result.competitive


def test_geo_uni_two_segment_ascending_cross_check(two_tp_system):
    market, pop, grid = two_tp_system
    down = solve(market, pop, grid)
    up = solve_ascending(market, pop, grid)
    assert np.all(up.grid_index <= down.grid_index)
    assert np.all(down.grid_index - up.grid_index <= 1)
