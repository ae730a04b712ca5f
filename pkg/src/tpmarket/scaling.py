"""Affine rescaling of a market/population pair.

A system is rescaled by mapping prices and revenues ``x -> k1 * x + offset``,
qualities ``q -> q / k3``, sensitivities ``beta -> k3 * beta`` and traffic and
effective capacities by ``kappa``. AP choices are invariant under the first
three; equilibrium prices transform with the same affine map when traffic
and capacity scale together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import APPopulation, Market, TPSegment

__all__ = [
    "ScalingFactors",
    "scale_system",
    "normalize",
    "denormalize_price",
]


@dataclass(frozen=True)
class ScalingFactors:
    """``k1 = 1/(v_max - p_min)``, ``k2 = p_min/(v_max - p_min)``, ``k3 = 1/beta_max``, ``kappa = 1/alpha``.

    Normalized prices are ``k1 * p - k2``.
    """

    k1: float
    k2: float
    k3: float
    kappa: float
    v_max: float = 1.0
    p_min: float = 0.0
    beta_max: float = 1.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k3 > 0 and self.kappa > 0):
            raise ValueError("k1, k3 and kappa must be positive")

    @classmethod
    def identity(cls) -> "ScalingFactors":
        return cls(1.0, 0.0, 1.0, 1.0)

    def scale_price(self, p):
        return self.k1 * np.asarray(p, dtype=float) - self.k2


def denormalize_price(p_scaled, f: ScalingFactors):
    """Map a normalized price back to currency units."""
    return (np.asarray(p_scaled, dtype=float) + f.k2) / f.k1


def scale_system(market: Market, population: APPopulation, k1: float = 1.0, offset: float = 0.0,
                 k3: float = 1.0, kappa: float = 1.0) -> tuple[Market, APPopulation]:
    """Transformed copies; segments come out with effective capacities.

    ``offset`` may be negative. Price floors are mapped like prices.
    """
    if not (k1 > 0 and k3 > 0 and kappa > 0):
        raise ValueError("k1, k3 and kappa must be positive")
    segments = []
    for seg in market.segments:
        if seg.is_dummy:
            segments.append(seg)
            continue
        segments.append(TPSegment(seg.q / k3, kappa * seg.mu, k1 * seg.p_min + offset, None, seg.name))
    pop = APPopulation(kappa * population.alpha, k3 * population.beta, k1 * population.v + offset,
                       allow_negative_v=True)
    return Market(tuple(segments)), pop


def normalize(market: Market, population: APPopulation) -> tuple[Market, APPopulation, ScalingFactors]:
    """Rescale so revenues and sensitivities fall in ``[0, 1]`` and total traffic is 1.

    APs earning less than the lowest price floor end up with negative revenue;
    they can never afford a segment either way.
    """
    real = market.real
    p_min = min((s.p_min for s in real), default=0.0)
    v_max = population.v_max
    beta_max = population.beta_max
    if not v_max > p_min:
        raise ValueError(f"degenerate system: v_max ({v_max:g}) must exceed the lowest floor ({p_min:g})")
    if not beta_max > 0:
        raise ValueError("degenerate system: every AP has zero quality sensitivity")
    k1 = 1.0 / (v_max - p_min)
    if not (math.isfinite(k1) and math.isfinite(1.0 / beta_max)):
        raise ValueError("degenerate system: revenue span or sensitivity too small to rescale")
    f = ScalingFactors(k1, p_min * k1, 1.0 / beta_max, 1.0 / population.total_alpha, v_max, p_min, beta_max)
    m, pop = scale_system(market, population, f.k1, -f.k2, f.k3, f.kappa)
    return m, pop, f
