"""AP utility, best-TP selection and market-share partitioning.

Every AP picks the segment with the highest utility ``alpha (v - p) exp(-beta q)``.
Utilities within ``TIE_RTOL`` of the best are ties, resolved toward the
better-quality segment; the dummy segment is last in the order and so only
wins when every real segment is strictly worse. The tolerance is relative to
the size of the terms, ``(|v| + |p|) exp(-beta q)``, not to the utility itself,
so an AP whose revenue equals a price ties with the dummy regardless of
rounding in ``v - p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import APPopulation, APType, Market

__all__ = [
    "TIE_RTOL",
    "Assignment",
    "throughput",
    "utility",
    "best_tp",
    "partition",
    "indifference_price",
    "decay_matrix",
    "choose",
    "choices",
    "utility_scale",
]

TIE_RTOL = 1e-12


def _check_q(q: float) -> None:
    if q < 0 or math.isnan(q):
        raise ValueError(f"quality must be >= 0 or inf, got {q}")


def throughput(ap: APType, q: float) -> float:
    """``alpha * exp(-beta * q)``; exactly 0 at ``q = inf``."""
    _check_q(q)
    if math.isinf(q):
        return 0.0
    return ap.alpha * math.exp(-ap.beta * q)


def utility(ap: APType, p: float, q: float) -> float:
    return (ap.v - p) * throughput(ap, q)


def indifference_price(ap: APType, normalized_utility: float, q: float) -> float:
    """Price at which ``utility(ap, p, q) / alpha`` equals ``normalized_utility``."""
    if normalized_utility < 0:
        raise ValueError("normalized utility must be >= 0")
    return ap.v - normalized_utility * math.exp(ap.beta * q)


def decay_matrix(beta: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``exp(-beta_i q_I)`` for finite ``q``; infinite qualities give 0."""
    beta = np.asarray(beta, dtype=float)
    q = np.asarray(q, dtype=float)
    finite = np.isfinite(q)
    out = np.zeros((len(beta), len(q)))
    out[:, finite] = np.exp(-np.outer(beta, q[finite]))
    return out


def utility_scale(v, prices, E: np.ndarray) -> np.ndarray:
    """Row-wise ``max_J (|v| + |p_J|) E_J``, the magnitude behind each utility row."""
    v = np.abs(np.asarray(v, dtype=float))
    prices = np.abs(np.asarray(prices, dtype=float))
    return ((v[:, None] + prices[None, :]) * E).max(axis=1, initial=0.0)


def choose(U: np.ndarray, scale: np.ndarray | None = None) -> np.ndarray:
    """Row-wise index of the first column within the tie tolerance of the row max.

    The tolerance is ``TIE_RTOL * max(|row max|, scale)``.
    """
    M = U.max(axis=1)
    size = np.abs(M) if scale is None else np.maximum(np.abs(M), scale)
    return np.argmax(U >= (M - TIE_RTOL * size)[:, None], axis=1)


def choices(beta, v, prices, q) -> np.ndarray:
    """Chosen column per AP for prices and qualities aligned column by column."""
    E = decay_matrix(beta, q)
    v = np.asarray(v, dtype=float)
    U = (v[:, None] - np.asarray(prices, dtype=float)[None, :]) * E
    return choose(U, utility_scale(v, prices, E))


def _utilities(beta, v, prices, q) -> np.ndarray:
    # per-unit-alpha utilities; alpha never changes a choice
    E = decay_matrix(beta, q)
    return (np.asarray(v, dtype=float)[:, None] - np.asarray(prices, dtype=float)[None, :]) * E


def _check_prices(prices, market: Market) -> np.ndarray:
    prices = np.asarray(prices, dtype=float)
    if prices.shape != (len(market.segments),):
        raise ValueError(f"expected {len(market.segments)} prices, got shape {prices.shape}")
    if not np.all(np.isfinite(prices)):
        raise ValueError("prices must be finite")
    for seg, p in zip(market.segments, prices):
        if seg.is_dummy and p != 0:
            raise ValueError("the dummy segment's price is 0")
    return prices


def best_tp(ap: APType, prices, market: Market) -> int:
    """Index into ``market.segments`` of the AP's preferred segment."""
    if not market.is_canonical:
        raise ValueError("best_tp requires a canonical market (see canonicalize)")
    prices = _check_prices(prices, market)
    q = np.array([s.q for s in market.segments])
    return int(choices([ap.beta], [ap.v], prices, q)[0])


@dataclass(frozen=True)
class Assignment:
    """Segment chosen by every AP (``choice``) and the APs in each segment (``shares``)."""

    choice: np.ndarray
    shares: tuple[np.ndarray, ...]

    @classmethod
    def from_choice(cls, choice: np.ndarray, n_segments: int) -> "Assignment":
        choice = np.asarray(choice, dtype=int)
        shares = tuple(np.flatnonzero(choice == s) for s in range(n_segments))
        return cls(choice, shares)

    def share_sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.shares])


def partition(population: APPopulation, prices, market: Market) -> Assignment:
    """Apply the best-TP rule to every AP type."""
    if not market.is_canonical:
        raise ValueError("partition requires a canonical market (see canonicalize)")
    prices = _check_prices(prices, market)
    q = np.array([s.q for s in market.segments])
    choice = choices(population.beta, population.v, prices, q)
    return Assignment.from_choice(choice, len(market.segments))
