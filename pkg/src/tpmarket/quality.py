"""Quality models mapping carried load and raw capacity to achieved quality.

Two models are supported. ``MG1FIFO`` is the mean queueing delay of an M/G/1
FIFO server (Pollaczek-Khinchine), ``DirectEta`` is a fixed raw-to-effective
capacity factor used when calibrating against capacity data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

__all__ = [
    "MG1FIFO",
    "DirectEta",
    "QualityModel",
    "achieved_quality",
    "max_throughput",
    "eta",
]


@dataclass(frozen=True)
class MG1FIFO:
    """Mean queueing delay ``lam * er / (nu - lam)``.

    ``er`` is the expected residual service time, in the same time unit as
    the segment qualities.
    """

    er: float = 1.0

    def __post_init__(self):
        if not (self.er > 0 and math.isfinite(self.er)):
            raise ValueError(f"expected residual time must be positive, got {self.er}")


@dataclass(frozen=True)
class DirectEta:
    """Effective capacity is ``eta * nu`` regardless of the quality target."""

    eta: float

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


QualityModel = Union[MG1FIFO, DirectEta]


def _check_nu(nu: float) -> None:
    if not nu > 0:
        raise ValueError(f"raw capacity must be positive, got {nu}")


def achieved_quality(model: QualityModel, lam: float, nu: float, q: float | None = None) -> float:
    """Quality delivered when ``lam`` units of traffic cross capacity ``nu``.

    For ``DirectEta`` there is no delay curve; the nominal quality ``q`` is
    returned while ``lam <= eta * nu`` and ``inf`` beyond it.
    """
    _check_nu(nu)
    if lam < 0:
        raise ValueError(f"throughput must be non-negative, got {lam}")
    if isinstance(model, MG1FIFO):
        if lam >= nu:
            return math.inf
        return lam * model.er / (nu - lam)
    if q is None:
        raise ValueError("DirectEta needs the segment's nominal quality")
    return q if lam <= model.eta * nu else math.inf


def eta(model: QualityModel, q: float) -> float:
    """Fraction of raw capacity usable while still delivering quality ``q``."""
    if isinstance(model, DirectEta):
        return model.eta
    if not q > 0:
        raise ValueError(f"M/G/1 quality target must be positive, got {q}")
    if math.isinf(q):
        return 1.0
    return q / (model.er + q)


def max_throughput(model: QualityModel, q: float, nu: float) -> float:
    """Largest load whose achieved quality does not exceed ``q`` (effective capacity)."""
    _check_nu(nu)
    return eta(model, q) * nu
