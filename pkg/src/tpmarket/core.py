"""Domain types: AP types and populations, TP segments and markets.

AP populations are stored column-wise (``alpha``, ``beta``, ``v`` arrays) so
the choice and equilibrium code can vectorize over them; ``APType`` is the
scalar view used at the API boundary.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quality import QualityModel, max_throughput

__all__ = [
    "APType",
    "APPopulation",
    "TPSegment",
    "Market",
    "DiscreteDistribution",
    "GEOMETRIC_RATIO",
    "build_population",
    "canonicalize",
    "distribution_pmf",
]

GEOMETRIC_RATIO = 0.9

_KINDS = ("geometric", "uniform", "reversed_geometric", "binomial")
_ALIASES = {
    "geo": "geometric",
    "geometric": "geometric",
    "uni": "uniform",
    "uniform": "uniform",
    "regeo": "reversed_geometric",
    "reversed_geometric": "reversed_geometric",
    "bn": "binomial",
    "binomial": "binomial",
}


@dataclass(frozen=True)
class APType:
    """One AP market segment: traffic ceiling, quality sensitivity, unit revenue."""

    alpha: float
    beta: float
    v: float

    def __post_init__(self):
        for name in ("alpha", "beta", "v"):
            val = getattr(self, name)
            if not (val >= 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")


class APPopulation:
    """An ordered collection of AP types held as parallel arrays."""

    def __init__(self, alpha, beta, v, *, allow_negative_v: bool = False):
        alpha = np.array(alpha, dtype=float).ravel()
        beta = np.array(beta, dtype=float).ravel()
        v = np.array(v, dtype=float).ravel()
        if not (alpha.shape == beta.shape == v.shape):
            raise ValueError("alpha, beta and v must have the same length")
        for name, arr in (("alpha", alpha), ("beta", beta), ("v", v)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            if np.any(arr < 0) and not (name == "v" and allow_negative_v):
                raise ValueError(f"{name} must be >= 0")
        for arr in (alpha, beta, v):
            arr.flags.writeable = False
        self.alpha = alpha
        self.beta = beta
        self.v = v

    @classmethod
    def from_types(cls, types: Iterable[APType]) -> "APPopulation":
        types = list(types)
        return cls([t.alpha for t in types], [t.beta for t in types], [t.v for t in types])

    @property
    def types(self) -> list[APType]:
        return [APType(float(a), float(b), float(v)) for a, b, v in zip(self.alpha, self.beta, self.v)]

    @property
    def total_alpha(self) -> float:
        return math.fsum(self.alpha)

    @property
    def v_max(self) -> float:
        return float(self.v.max()) if len(self) else 0.0

    @property
    def beta_max(self) -> float:
        return float(self.beta.max()) if len(self) else 0.0

    def __len__(self) -> int:
        return len(self.alpha)

    def __repr__(self) -> str:
        return f"APPopulation(n={len(self)}, total_alpha={self.total_alpha:g})"

    def merged(self) -> "APPopulation":
        """Merge types sharing ``(beta, v)`` by summing ``alpha``; order of first appearance kept."""
        keys = np.stack([self.beta, self.v], axis=1)
        _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.ravel()
        alpha = np.zeros(len(first))
        np.add.at(alpha, inverse, self.alpha)
        order = np.argsort(first, kind="stable")
        return APPopulation(alpha[order], self.beta[first[order]], self.v[first[order]], allow_negative_v=True)


@dataclass(frozen=True)
class TPSegment:
    """A transport-service market segment.

    ``capacity`` is the effective capacity (max acceptable throughput) unless a
    ``quality_model`` is attached, in which case it is the raw capacity and the
    effective one is derived from the model and ``q``.
    """

    q: float
    capacity: float
    p_min: float = 0.0
    quality_model: QualityModel | None = None
    name: str | None = None
    is_dummy: bool = False

    def __post_init__(self):
        if self.is_dummy:
            if not (math.isinf(self.q) and self.p_min == 0):
                raise ValueError("the dummy segment has q = inf and p_min = 0")
            return
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValueError(f"q must be finite and >= 0, got {self.q}")
        if not self.capacity >= 0:
            raise ValueError(f"capacity must be >= 0, got {self.capacity}")
        if not (self.p_min >= 0 and math.isfinite(self.p_min)):
            raise ValueError(f"p_min must be finite and >= 0, got {self.p_min}")

    @classmethod
    def dummy(cls) -> "TPSegment":
        return cls(q=math.inf, capacity=math.inf, p_min=0.0, name="dummy", is_dummy=True)

    @property
    def mu(self) -> float:
        """Effective capacity."""
        if self.is_dummy or self.quality_model is None or self.capacity == 0:
            return self.capacity
        return max_throughput(self.quality_model, self.q, self.capacity)


@dataclass(frozen=True)
class Market:
    """TP segments; canonical markets are sorted by ``q`` with the dummy last."""

    segments: tuple[TPSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def real(self) -> tuple[TPSegment, ...]:
        return tuple(s for s in self.segments if not s.is_dummy)

    @property
    def q(self) -> np.ndarray:
        return np.array([s.q for s in self.real], dtype=float)

    @property
    def mu(self) -> np.ndarray:
        return np.array([s.mu for s in self.real], dtype=float)

    @property
    def p_min(self) -> np.ndarray:
        return np.array([s.p_min for s in self.real], dtype=float)

    @property
    def names(self) -> list[str]:
        return [s.name or f"TP{i + 1}" for i, s in enumerate(self.real)]

    @property
    def total_mu(self) -> float:
        return math.fsum(self.mu)

    @property
    def sigma(self) -> np.ndarray:
        """Capacity shares of the non-dummy segments."""
        total = self.total_mu
        mu = self.mu
        return mu / total if total > 0 else np.zeros_like(mu)

    def rho(self, population: APPopulation) -> float:
        return self.total_mu / population.total_alpha

    @property
    def is_canonical(self) -> bool:
        segs = self.segments
        if not segs or not segs[-1].is_dummy or sum(s.is_dummy for s in segs) != 1:
            return False
        q = self.q
        return bool(np.all(np.diff(q) > 0))

    def __len__(self) -> int:
        return len(self.segments)


def _merge(a: TPSegment, b: TPSegment) -> TPSegment:
    name = "+".join(n for n in (a.name, b.name) if n) or None
    p_min = min(a.p_min, b.p_min)
    if a.quality_model is not None and a.quality_model == b.quality_model:
        return TPSegment(a.q, a.capacity + b.capacity, p_min, a.quality_model, name)
    return TPSegment(a.q, a.mu + b.mu, p_min, None, name)


def canonicalize(market: Market | Sequence[TPSegment]) -> Market:
    """Merge equal-``q`` segments, sort by ``q`` and append the dummy segment.

    Merged segments keep the lower of the two price floors.
    """
    segments = market.segments if isinstance(market, Market) else tuple(market)
    merged: dict[float, TPSegment] = {}
    for seg in segments:
        if seg.is_dummy:
            continue
        merged[seg.q] = _merge(merged[seg.q], seg) if seg.q in merged else seg
    ordered = [merged[q] for q in sorted(merged)]
    return Market(tuple(ordered) + (TPSegment.dummy(),))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Discrete distribution over ``levels`` equally spaced support points.

    ``ratio`` is the per-level decay of the (reversed) geometric family and
    ``p`` the success probability of the binomial family, which is taken over
    ``levels - 1`` trials shifted onto levels ``1..levels``.
    """

    kind: str
    levels: int = 50
    p: float | None = None
    ratio: float = GEOMETRIC_RATIO

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind)
        if kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not (isinstance(self.levels, (int, np.integer)) and self.levels >= 1):
            raise ValueError(f"levels must be a positive integer, got {self.levels}")
        if kind == "binomial":
            if self.p is None or not 0 <= self.p <= 1:
                raise ValueError(f"binomial p must lie in [0, 1], got {self.p}")
        if kind in ("geometric", "reversed_geometric"):
            if not (self.ratio > 0 and math.isfinite(self.ratio)):
                raise ValueError(f"geometric ratio must be positive, got {self.ratio}")

    @classmethod
    def parse(cls, text: str, levels: int = 50, ratio: float = GEOMETRIC_RATIO) -> "DiscreteDistribution":
        """Build from a short label: ``Geo``, ``Uni``, ``ReGeo`` or ``BN(0.5)``."""
        m = re.fullmatch(r"\s*([A-Za-z_]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse distribution {text!r}")
        kind, arg = m.group(1), m.group(2)
        kind = _ALIASES.get(kind.lower())
        if kind is None:
            raise ValueError(f"unknown distribution {text!r}")
        if kind == "binomial":
            if arg is None:
                raise ValueError("binomial distribution needs a parameter, e.g. BN(0.5)")
            return cls(kind, levels, p=float(arg), ratio=ratio)
        if arg is not None:
            raise ValueError(f"{text!r}: only BN takes a parameter")
        return cls(kind, levels, ratio=ratio)

    @property
    def label(self) -> str:
        if self.kind == "binomial":
            return f"BN({self.p:g})"
        return {"geometric": "Geo", "uniform": "Uni", "reversed_geometric": "ReGeo"}[self.kind]

    def masses(self) -> np.ndarray:
        L = self.levels
        k = np.arange(L)
        if self.kind == "uniform":
            return np.full(L, 1.0 / L)
        if self.kind == "binomial":
            n, p = L - 1, self.p
            w = np.array([math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(L)])
        else:
            w = self.ratio ** k.astype(float)
            if self.kind == "reversed_geometric":
                w = w[::-1]
        total = math.fsum(w)
        if not (total > 0 and math.isfinite(total)):
            raise ValueError(f"{self!r} is not normalizable")
        return w / total


def distribution_pmf(dist: DiscreteDistribution, level: int) -> float:
    """Probability mass at ``level`` (1-based)."""
    if not 1 <= level <= dist.levels:
        raise IndexError(f"level {level} outside 1..{dist.levels}")
    return float(dist.masses()[level - 1])


def build_population(
    f_beta: DiscreteDistribution,
    f_v: DiscreteDistribution,
    levels: int = 50,
    total_alpha: float = 1.0,
    beta_max: float = 1.0,
    v_max: float = 1.0,
) -> APPopulation:
    """Grid population on cell midpoints of ``(0, beta_max] x (0, v_max]``.

    The traffic ceiling of cell ``(k, m)`` is ``total_alpha * f_beta(k) * f_v(m)``.
    Rows are ordered beta-major.
    """
    if not (isinstance(levels, (int, np.integer)) and levels >= 1):
        raise ValueError(f"levels must be a positive integer, got {levels}")
    if not total_alpha > 0:
        raise ValueError(f"total_alpha must be positive, got {total_alpha}")
    fb = _with_levels(f_beta, levels).masses()
    fv = _with_levels(f_v, levels).masses()
    mid = (np.arange(1, levels + 1) - 0.5) / levels
    beta = np.repeat(mid * beta_max, levels)
    v = np.tile(mid * v_max, levels)
    alpha = total_alpha * np.outer(fb, fv).ravel()
    return APPopulation(alpha, beta, v)


def _with_levels(dist: DiscreteDistribution, levels: int) -> DiscreteDistribution:
    if dist.levels == levels:
        return dist
    return DiscreteDistribution(dist.kind, levels, dist.p, dist.ratio)
