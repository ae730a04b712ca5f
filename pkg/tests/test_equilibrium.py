import math

import numpy as np
import pytest

from tpmarket import APPopulation, DiscreteDistribution, TPSegment, build_population, canonicalize
from tpmarket.equilibrium import EquilibriumResult, PriceGrid, demand, solve, solve_ascending, verify


@pytest.fixture(scope="module")
def fig7_system():
    market = canonicalize([TPSegment(0.2, 0.05, name="A"), TPSegment(1.0, 0.2, name="B"),
                           TPSegment(5.0, 0.25, name="C")])
    pop = build_population(DiscreteDistribution.parse("Geo"), DiscreteDistribution.parse("Uni"), 50, 1.0)
    return market, pop, PriceGrid.for_system(market, pop, 0.01)


def test_grid_layout():
    g = PriceGrid(0.1, [0.0, 0.25], 1.0)
    assert list(g.top) == [11, 8]
    assert g.points(0)[-1] > 1.0 >= g.points(0)[-2]
    assert g.price(1, 3) == pytest.approx(0.55)
    with pytest.raises(ValueError):
        PriceGrid(0.0, [0.0], 1.0)


def test_default_step_is_a_thousandth_of_the_span():
    market = canonicalize([TPSegment(1, 1, 0.2)])
    pop = APPopulation([1], [1], [2.2])
    assert PriceGrid.for_system(market, pop).step == pytest.approx(2e-3)


def test_demand_examples():
    market = canonicalize([TPSegment(1.0, 1.0)])
    pop = APPopulation([1.0], [1.0], [1.0])
    assert demand([0.0, 0.0], market, pop)[0] == pytest.approx(math.exp(-1))
    assert demand([1.5, 0.0], market, pop)[0] == 0


def test_abundant_capacity_prices_at_floors():
    market = canonicalize([TPSegment(0.5, 10, 0.1), TPSegment(2.0, 10, 0.05)])
    pop = build_population(DiscreteDistribution.parse("Uni"), DiscreteDistribution.parse("Uni"), 10, 1.0)
    down = solve(market, pop, step=0.01)
    up = solve_ascending(market, pop, step=0.01)
    np.testing.assert_allclose(down.real_prices, [0.1, 0.05])
    np.testing.assert_array_equal(down.grid_index, up.grid_index)


def test_zero_capacity_puts_everyone_on_the_dummy():
    market = canonicalize([TPSegment(0.5, 0.0), TPSegment(2.0, 0.0)])
    pop = build_population(DiscreteDistribution.parse("Uni"), DiscreteDistribution.parse("Uni"), 10, 1.0)
    grid = PriceGrid.for_system(market, pop, 0.01)
    down, up = solve(market, pop, grid), solve_ascending(market, pop, grid)
    assert np.all(down.assignment.choice == 2)
    # the first grid point above the richest AP; at v = p the AP still buys
    assert np.all(down.real_prices > pop.v_max)
    np.testing.assert_array_equal(down.grid_index, grid.top)
    np.testing.assert_array_equal(down.grid_index, up.grid_index)


def test_fig7_instance(fig7_system):
    market, pop, grid = fig7_system
    result = solve(market, pop, grid)
    assert result.feasible and result.competitive
    assert np.all(result.loads[:-1] <= market.mu + 1e-12)
    pA, pB, pC = result.real_prices
    assert pA >= pB >= pC
    assert verify(result, market, pop, grid).passed
    np.testing.assert_allclose(demand(result.prices, market, pop), result.loads)


def test_loads_match_the_sweep_driver(fig7_system):
    from tpmarket.sweep import SystemSpec
    market, pop, grid = fig7_system
    spec = SystemSpec(f_beta="Geo", f_v="Uni", mu=(0.05, 0.2, 0.25), shares=None, rho=None, grid_step=0.01)
    m2, p2 = spec.build()
    r2 = solve(m2, p2, spec.grid(m2, p2))
    np.testing.assert_array_equal(r2.loads, solve(market, pop, grid).loads)


def test_verify_flags_overload():
    market = canonicalize([TPSegment(1.0, 0.1)])
    pop = APPopulation([1.0], [0.1], [1.0])
    grid = PriceGrid.for_system(market, pop, 0.1)
    fake = solve(market, pop, grid)
    bad = EquilibriumResult(np.array([0.0, 0.0]), fake.assignment, fake.loads, True, True, 0, np.array([0]))
    cert = verify(bad, market, pop, grid)
    assert not cert.passed
    assert [v.clause for v in cert.violations] == ["feasible"]
    assert cert.violations[0].segment == 0
    assert "FAIL" in cert.summary()


def test_verify_flags_non_competitive_price(fig7_system):
    market, pop, grid = fig7_system
    result = solve(market, pop, grid)
    k = result.grid_index.copy()
    k[2] += 1  # one step above the competitive price; the old price is still feasible
    prices = np.append(grid.prices(k), 0.0)
    raised = EquilibriumResult(prices, result.assignment, demand(prices, market, pop), True, True, 0, k)
    cert = verify(raised, market, pop, grid)
    assert any(v.clause == "competitive" and v.segment == 2 for v in cert.violations)
    relaxed = verify(raised, market, pop, grid, competitive=False)
    assert all(v.clause != "competitive" for v in relaxed.violations)


def test_verify_rejects_a_priced_dummy(fig7_system):
    market, pop, grid = fig7_system
    r = solve(market, pop, grid)
    bad = EquilibriumResult(np.append(r.real_prices, 0.1), r.assignment, r.loads, True, True, 0, r.grid_index)
    assert verify(bad, market, pop, grid).violations[0].clause == "dummy"


def test_descending_and_ascending_bracket(fig7_system):
    market, pop, grid = fig7_system
    down, up = solve(market, pop, grid), solve_ascending(market, pop, grid)
    assert np.all(up.grid_index <= down.grid_index)
    assert verify(up, market, pop, grid).passed


def test_input_validation():
    market = canonicalize([TPSegment(1.0, 1.0)])
    with pytest.raises(ValueError):
        solve(market, APPopulation([], [], []))
    with pytest.raises(ValueError):
        solve(market, APPopulation([1], [1], [1]), PriceGrid(0.1, [0.0, 0.0], 1.0))
    from tpmarket import Market
    with pytest.raises(ValueError):
        solve(Market(market.segments[::-1]), APPopulation([1], [1], [1]))
