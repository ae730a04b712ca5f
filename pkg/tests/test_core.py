import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from tpmarket import APPopulation, APType, DiscreteDistribution, Market, TPSegment, build_population, canonicalize
from tpmarket.core import distribution_pmf
from tpmarket.quality import MG1FIFO

ALL_KINDS = ["Geo", "Uni", "ReGeo", "BN(0.2)", "BN(0.5)", "BN(0.8)"]


def test_uniform_two_level_population():
    pop = build_population(DiscreteDistribution("uniform"), DiscreteDistribution("uniform"), 2, 1.0)
    assert np.allclose(pop.alpha, 0.25)
    pts = sorted(zip(pop.beta, pop.v))
    assert pts == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]


def test_geo_uni_has_2500_types_summing_to_one():
    pop = build_population(DiscreteDistribution.parse("Geo"), DiscreteDistribution.parse("Uni"), 50, 1.0)
    assert len(pop) == 2500
    assert pop.total_alpha == pytest.approx(1.0, rel=1e-12)


def test_binomial_masses_match_scipy():
    dist = DiscreteDistribution.parse("BN(0.5)", 50)
    expected = binom.pmf(np.arange(50), 49, 0.5)
    np.testing.assert_allclose(dist.masses(), expected, rtol=1e-12, atol=1e-300)
    pop = build_population(dist, dist, 50, 1.0)
    grid = pop.alpha.reshape(50, 50)
    k, m = np.unravel_index(np.argmax(grid), grid.shape)
    assert k in (24, 25) and m in (24, 25)
    np.testing.assert_allclose(grid, np.outer(expected, expected), rtol=1e-10)


@pytest.mark.parametrize("p", [0.2, 0.8])
def test_skewed_binomial_matches_scipy(p):
    np.testing.assert_allclose(DiscreteDistribution("binomial", 50, p).masses(),
                               binom.pmf(np.arange(50), 49, p), rtol=1e-10, atol=1e-300)


def test_pmf_examples():
    assert distribution_pmf(DiscreteDistribution("uniform", 50), 17) == pytest.approx(0.02)
    assert distribution_pmf(DiscreteDistribution("binomial", 3, 0.5), 2) == pytest.approx(0.5)
    geo, regeo = DiscreteDistribution("geometric", 50), DiscreteDistribution("reversed_geometric", 50)
    assert distribution_pmf(geo, 1) == distribution_pmf(regeo, 50)
    with pytest.raises(IndexError):
        distribution_pmf(geo, 51)


@pytest.mark.parametrize("label", ALL_KINDS)
def test_masses_sum_to_one(label):
    assert math.fsum(DiscreteDistribution.parse(label).masses()) == pytest.approx(1.0, abs=1e-12)


def test_reversed_geometric_is_exact_reversal():
    geo = DiscreteDistribution("geometric", 50).masses()
    assert np.array_equal(DiscreteDistribution("reversed_geometric", 50).masses(), geo[::-1])


def test_parse_labels_round_trip():
    for label in ALL_KINDS:
        assert DiscreteDistribution.parse(label).label == label
    for bad in ["Gauss", "BN", "Geo(0.3)", "BN(1.5)", ""]:
        with pytest.raises(ValueError):
            DiscreteDistribution.parse(bad)


@pytest.mark.parametrize("fb", ALL_KINDS)
@pytest.mark.parametrize("fv", ALL_KINDS)
def test_population_mass_conservation(fb, fv):
    pop = build_population(DiscreteDistribution.parse(fb), DiscreteDistribution.parse(fv), 50, 3.7)
    assert pop.total_alpha == pytest.approx(3.7, rel=1e-12)


def test_canonicalize_examples():
    m = canonicalize([TPSegment(1.0, 3.0), TPSegment(1.0, 4.0)])
    assert len(m.real) == 1 and m.real[0].mu == 7.0
    empty = canonicalize([])
    assert len(empty.segments) == 1 and empty.segments[0].is_dummy
    m = canonicalize([TPSegment(5, 1), TPSegment(1, 1), TPSegment(3, 1)])
    assert [s.q for s in m.segments] == [1, 3, 5, math.inf]
    assert m.is_canonical


def test_canonicalize_keeps_quality_model_when_shared():
    m = canonicalize([TPSegment(1.0, 4.0, quality_model=MG1FIFO()), TPSegment(1.0, 6.0, quality_model=MG1FIFO())])
    assert m.real[0].capacity == 10.0
    assert m.real[0].mu == pytest.approx(5.0)


def test_merged_floor_is_the_lower_one():
    m = canonicalize([TPSegment(1.0, 1.0, 0.3), TPSegment(1.0, 1.0, 0.1)])
    assert m.real[0].p_min == 0.1


@given(st.lists(st.tuples(st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.floats(0, 10)), max_size=8))
def test_canonicalize_preserves_capacity_and_orders_qualities(pairs):
    m = canonicalize([TPSegment(q, mu) for q, mu in pairs])
    assert m.is_canonical
    assert m.total_mu == pytest.approx(math.fsum(mu for _, mu in pairs), rel=1e-12, abs=1e-12)
    assert len(set(m.q)) == len(m.q)


def test_dummy_segment_contract():
    d = TPSegment.dummy()
    assert math.isinf(d.q) and d.p_min == 0 and math.isinf(d.capacity)
    with pytest.raises(ValueError):
        TPSegment(1.0, 1.0, is_dummy=True)


@pytest.mark.parametrize("kwargs", [dict(q=-1, capacity=1), dict(q=1, capacity=-1), dict(q=1, capacity=1, p_min=-1)])
def test_segment_validation(kwargs):
    with pytest.raises(ValueError):
        TPSegment(**kwargs)


def test_ap_validation_and_merge():
    with pytest.raises(ValueError):
        APType(-1, 1, 1)
    with pytest.raises(ValueError):
        APPopulation([1], [1], [-0.5])
    pop = APPopulation([1, 2, 3], [0.5, 0.1, 0.5], [0.2, 0.3, 0.2])
    merged = pop.merged()
    assert list(merged.alpha) == [4, 2]
    assert list(merged.beta) == [0.5, 0.1]


def test_market_summaries():
    m = canonicalize([TPSegment(1, 1.0), TPSegment(2, 3.0)])
    pop = APPopulation([2.0, 6.0], [1, 1], [1, 1])
    assert np.allclose(m.sigma, [0.25, 0.75])
    assert m.rho(pop) == pytest.approx(0.5)
    assert not Market(m.segments[::-1]).is_canonical
