import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tpmarket import APPopulation, TPSegment, canonicalize, solve
from tpmarket.equilibrium import PriceGrid
from tpmarket.scaling import ScalingFactors, denormalize_price, normalize, scale_system

from strategies import systems


def _system(v_max=10.0, p_min=0.0):
    market = canonicalize([TPSegment(0.5, 2.0, p_min), TPSegment(2.0, 3.0, p_min + 0.5)])
    pop = APPopulation([2.0, 3.0, 5.0], [0.5, 2.0, 4.0], [1.0, v_max / 2, v_max])
    return market, pop


def test_factor_examples():
    _, _, f = normalize(*_system(10.0, 0.0))
    assert (f.k1, f.k2) == pytest.approx((0.1, 0.0))
    assert f.k3 == pytest.approx(0.25) and f.kappa == pytest.approx(0.1)
    _, _, f = normalize(*_system(10.0, 1.0))
    assert (f.k1, f.k2) == pytest.approx((1 / 9, 1 / 9))


def test_normalized_system_ranges():
    m, pop, f = normalize(*_system(10.0, 1.0))
    assert pop.total_alpha == pytest.approx(1.0)
    assert pop.beta.max() == pytest.approx(1.0) and pop.v.max() == pytest.approx(1.0)
    assert m.p_min.min() == pytest.approx(0.0)
    np.testing.assert_allclose(m.sigma * m.rho(pop), m.mu)


def test_denormalize_examples():
    f = ScalingFactors(1 / 9, 1 / 9, 1.0, 1.0, v_max=10.0, p_min=1.0)
    assert denormalize_price(0.0, f) == pytest.approx(1.0)
    assert denormalize_price(1.0, f) == pytest.approx(10.0)


def test_identity_factors_leave_the_system_unchanged():
    market, pop = _system()
    f = ScalingFactors.identity()
    m2, p2 = scale_system(market, pop, f.k1, -f.k2, f.k3, f.kappa)
    assert [s.q for s in m2.real] == [s.q for s in market.real]
    np.testing.assert_array_equal(p2.v, pop.v)
    np.testing.assert_array_equal(p2.alpha, pop.alpha)


def test_degenerate_systems_rejected():
    market = canonicalize([TPSegment(1.0, 1.0, 2.0)])
    with pytest.raises(ValueError):
        normalize(market, APPopulation([1.0], [1.0], [2.0]))
    with pytest.raises(ValueError):
        normalize(canonicalize([TPSegment(1.0, 1.0)]), APPopulation([1.0], [0.0], [2.0]))
    with pytest.raises(ValueError):
        ScalingFactors(0.0, 0.0, 1.0, 1.0)


@given(st.lists(st.floats(0, 50), min_size=1, max_size=20), st.floats(1, 100), st.floats(0, 0.9))
def test_normalize_round_trip(prices, v_max, frac):
    p_min = frac * v_max
    f = ScalingFactors(1 / (v_max - p_min), p_min / (v_max - p_min), 1.0, 1.0, v_max, p_min)
    back = denormalize_price(f.scale_price(prices), f)
    np.testing.assert_allclose(back, prices, rtol=1e-12, atol=1e-12 * v_max)


@given(systems(steps=(0.02, 0.05)))
def test_normalized_solve_matches_raw_solve_within_a_step(system):
    market, pop, grid = system
    assume(pop.beta_max > 0 and pop.v_max > market.p_min.min())
    raw = solve(market, pop, grid)
    m2, p2, f = normalize(market, pop)
    scaled = solve(m2, p2, grid.transformed(f.k1, -f.k2))
    back = denormalize_price(scaled.real_prices, f)
    assert np.all(np.abs(back - raw.real_prices) <= grid.step * (1 + 1e-9))
