"""Parameter sweeps over normalized systems and fixed price menus.

A normalized system is described by its segment qualities, either explicit
effective capacities or capacity shares plus the supply/demand ratio ``rho``,
and the two marginal distributions over the ``(beta, v)`` grid. Total
traffic is 1 and revenues/sensitivities lie in ``(0, 1)``, so equilibrium
prices come out in normalized units directly.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .choice import partition
from .core import (
    GEOMETRIC_RATIO,
    APPopulation,
    DiscreteDistribution,
    Market,
    TPSegment,
    build_population,
    canonicalize,
)
from .equilibrium import PriceGrid, solve

__all__ = [
    "SystemSpec",
    "SweepSpec",
    "SweepRow",
    "SweepTable",
    "MenuSpec",
    "PartitionSweepSpec",
    "PartitionRaster",
    "SWEEP_AXES",
    "PARTITION_AXES",
    "run_sweep",
    "run_partition_sweep",
]

log = logging.getLogger(__name__)

SWEEP_AXES = ("mu", "rho", "quality_scale", "quality_ratio", "f_v", "f_beta", "beta_bn_p", "v_bn_p",
              "p_min", "capacity_scale")
PARTITION_AXES = ("price", "quality_scale")
_CATEGORICAL = ("f_v", "f_beta")
DEFAULT_POINTS = 50


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, str):
        return x
    return f"{x:.10g}"


@dataclass(frozen=True)
class SystemSpec:
    qualities: tuple[float, ...] = (0.2, 1.0, 5.0)
    names: tuple[str, ...] = ("A", "B", "C")
    mu: tuple[float, ...] | None = None
    shares: tuple[float, ...] | None = (1.0, 3.0, 5.0)
    rho: float | None = 0.5
    f_beta: str = "Geo"
    f_v: str = "BN(0.5)"
    levels: int = 50
    geometric_ratio: float = GEOMETRIC_RATIO
    p_min: float | tuple[float, ...] = 0.0
    grid_step: float | None = None
    total_alpha: float = 1.0
    beta_max: float = 1.0
    v_max: float = 1.0

    def __post_init__(self):
        if not isinstance(self.p_min, (int, float)):
            object.__setattr__(self, "p_min", tuple(self.p_min))
        for name in ("qualities", "names", "mu", "shares"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))
        n = len(self.qualities)
        if len(self.names) != n:
            raise ValueError("names and qualities must have the same length")
        if self.mu is not None:
            if len(self.mu) != n:
                raise ValueError("mu and qualities must have the same length")
        elif self.shares is None or self.rho is None:
            raise ValueError("give either mu or both shares and rho")
        elif len(self.shares) != n:
            raise ValueError("shares and qualities must have the same length")
        if isinstance(self.p_min, tuple) and len(self.p_min) != n:
            raise ValueError("p_min and qualities must have the same length")

    def floors(self) -> tuple[float, ...]:
        if isinstance(self.p_min, tuple):
            return self.p_min
        return (float(self.p_min),) * len(self.qualities)

    def capacities(self) -> np.ndarray:
        if self.mu is not None:
            return np.array(self.mu, dtype=float)
        shares = np.array(self.shares, dtype=float)
        return shares / shares.sum() * self.rho * self.total_alpha

    def distributions(self) -> tuple[DiscreteDistribution, DiscreteDistribution]:
        fb = DiscreteDistribution.parse(self.f_beta, self.levels, self.geometric_ratio)
        fv = DiscreteDistribution.parse(self.f_v, self.levels, self.geometric_ratio)
        return fb, fv

    def build(self) -> tuple[Market, APPopulation]:
        segments = [TPSegment(q, mu, p, name=name)
                    for q, mu, p, name in zip(self.qualities, self.capacities(), self.floors(), self.names)]
        fb, fv = self.distributions()
        pop = build_population(fb, fv, self.levels, self.total_alpha, self.beta_max, self.v_max)
        return canonicalize(segments), pop

    def grid(self, market: Market, population: APPopulation) -> PriceGrid:
        return PriceGrid.for_system(market, population, self.grid_step)

    def with_axis(self, axis: str, value, segment: str | None = None) -> "SystemSpec":
        """Copy of this spec with one sweep parameter set to ``value``."""
        if axis == "mu":
            idx = self._segment_index(segment)
            mu = list(self.capacities())
            mu[idx] = float(value)
            return replace(self, mu=tuple(mu))
        if axis == "rho":
            if self.mu is not None:
                caps = self.capacities()
                return replace(self, mu=None, shares=tuple(caps / caps.sum()), rho=float(value))
            return replace(self, rho=float(value))
        if axis == "p_min":
            idx = self._segment_index(segment)
            floors = list(self.floors())
            floors[idx] = float(value)
            return replace(self, p_min=tuple(floors))
        if axis == "capacity_scale":
            return replace(self, mu=tuple(float(value) * self.capacities()), shares=None, rho=None)
        if axis == "quality_scale":
            return replace(self, qualities=tuple(float(value) * q for q in self.qualities))
        if axis == "quality_ratio":
            mid = len(self.qualities) // 2
            base = self.qualities[mid]
            return replace(self, qualities=tuple(base * float(value) ** (i - mid) for i in range(len(self.qualities))))
        if axis == "f_v":
            return replace(self, f_v=str(value))
        if axis == "f_beta":
            return replace(self, f_beta=str(value))
        if axis == "beta_bn_p":
            return replace(self, f_beta=f"BN({float(value):g})")
        if axis == "v_bn_p":
            return replace(self, f_v=f"BN({float(value):g})")
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")

    def _segment_index(self, segment: str | None) -> int:
        if segment is None:
            raise ValueError("this axis needs a segment name")
        try:
            return self.names.index(segment)
        except ValueError:
            raise ValueError(f"unknown segment {segment!r}; known: {self.names}") from None


def _check_points(axis: str, points: Sequence, categorical: bool) -> tuple:
    points = tuple(points)
    if not points:
        raise ValueError("a sweep needs at least one point")
    if categorical:
        if len(set(points)) != len(points):
            raise ValueError("sweep points must be distinct")
        return tuple(str(p) for p in points)
    pts = np.array(points, dtype=float)
    d = np.diff(pts)
    if len(pts) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError(f"points along {axis!r} must be strictly monotone")
    return tuple(float(p) for p in pts)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    points: tuple
    base: SystemSpec = field(default_factory=SystemSpec)
    segment: str | None = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {SWEEP_AXES}")
        object.__setattr__(self, "points", _check_points(self.axis, self.points, self.axis in _CATEGORICAL))
        if self.axis in ("mu", "p_min"):
            self.base._segment_index(self.segment)


@dataclass(frozen=True)
class SweepRow:
    value: object
    prices: np.ndarray
    failed: bool = False
    error: str = ""


@dataclass
class SweepTable:
    axis: str
    names: list[str]
    rows: list[SweepRow]

    def prices(self) -> np.ndarray:
        """``(points, segments)`` array; failed rows are NaN."""
        return np.array([r.prices for r in self.rows], dtype=float)

    def values(self) -> list:
        return [r.value for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        return self.prices()[:, self.names.index(name)]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.axis, *self.names])
        for r in self.rows:
            w.writerow([_fmt(r.value), *(_fmt(float(p)) for p in r.prices)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _solve_point(args) -> SweepRow:
    spec, value = args
    system = spec.base.with_axis(spec.axis, value, spec.segment)
    n = len(system.qualities)
    try:
        market, pop = system.build()
        result = solve(market, pop, system.grid(market, pop))
        order = [market.names.index(name) for name in system.names]
        return SweepRow(value, result.real_prices[order])
    except Exception as exc:  # recorded per point, the sweep carries on
        log.warning("sweep point %s=%r failed: %s", spec.axis, value, exc)
        return SweepRow(value, np.full(n, np.nan), True, str(exc))


def run_sweep(spec: SweepSpec, n_jobs: int = 1) -> SweepTable:
    """One competitive equilibrium per sweep point; rows follow ``spec.points``."""
    tasks = [(spec, v) for v in spec.points]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_solve_point, tasks))
    else:
        rows = [_solve_point(t) for t in tasks]
    return SweepTable(spec.axis, list(spec.base.names), rows)


@dataclass(frozen=True)
class MenuSpec:
    """A fixed price/quality menu evaluated over a ``(beta, v)`` raster."""

    qualities: tuple[float, ...] = (1.0, 3.0, 5.0, 7.0)
    prices: tuple[float, ...] = (0.7, 0.4, 0.25, 0.1)
    names: tuple[str, ...] = ("1", "2", "3", "4")
    beta_max: float = 1.0
    v_max: float = 1.0
    resolution: int = 100

    def __post_init__(self):
        for name in ("qualities", "prices", "names"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not len(self.qualities) == len(self.prices) == len(self.names):
            raise ValueError("qualities, prices and names must have the same length")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")

    def with_axis(self, axis: str, value, segment: str | None = None) -> "MenuSpec":
        if axis == "price":
            if segment not in self.names:
                raise ValueError(f"unknown segment {segment!r}; known: {self.names}")
            prices = list(self.prices)
            prices[self.names.index(segment)] = float(value)
            return replace(self, prices=tuple(prices))
        if axis == "quality_scale":
            return replace(self, qualities=tuple(float(value) * q for q in self.qualities))
        raise ValueError(f"unknown partition axis {axis!r}; expected one of {PARTITION_AXES}")

    def market(self) -> tuple[Market, np.ndarray, list[str]]:
        """Canonical market with its aligned price vector (dummy last) and names."""
        menu: dict[float, tuple[float, str]] = {}
        for q, p, name in zip(self.qualities, self.prices, self.names):
            if q in menu:
                if menu[q][0] != p:
                    raise ValueError(f"two segments share quality {q:g} at different prices")
                menu[q] = (p, f"{menu[q][1]}+{name}")
            else:
                menu[q] = (p, name)
        qs = sorted(menu)
        market = canonicalize([TPSegment(q, 0.0, name=menu[q][1]) for q in qs])
        prices = np.array([menu[q][0] for q in qs] + [0.0])
        return market, prices, [menu[q][1] for q in qs]

    def population(self) -> APPopulation:
        n = self.resolution
        mid = (np.arange(1, n + 1) - 0.5) / n
        beta = np.repeat(mid * self.beta_max, n)
        v = np.tile(mid * self.v_max, n)
        return APPopulation(np.full(n * n, 1.0 / (n * n)), beta, v)


@dataclass(frozen=True)
class PartitionSweepSpec:
    axis: str
    points: tuple
    base: MenuSpec = field(default_factory=MenuSpec)
    segment: str | None = None

    def __post_init__(self):
        if self.axis not in PARTITION_AXES:
            raise ValueError(f"unknown partition axis {self.axis!r}; expected one of {PARTITION_AXES}")
        object.__setattr__(self, "points", _check_points(self.axis, self.points, False))
        if self.axis == "price" and self.segment not in self.base.names:
            raise ValueError(f"unknown segment {self.segment!r}; known: {self.base.names}")


@dataclass(frozen=True, eq=False)
class PartitionRaster:
    """Choices on a ``resolution x resolution`` grid, beta-major.

    ``choice`` holds indices into the canonical market; ``len(names)`` is
    the dummy.
    """

    value: float
    names: tuple[str, ...]
    beta: np.ndarray
    v: np.ndarray
    choice: np.ndarray
    resolution: int

    @property
    def dummy_index(self) -> int:
        return len(self.names)

    def grid(self) -> np.ndarray:
        """Choices as a ``(beta, v)`` matrix."""
        return self.choice.reshape(self.resolution, self.resolution)

    def share_sizes(self) -> np.ndarray:
        return np.bincount(self.choice, minlength=len(self.names) + 1)

    def skipped_transitions(self) -> int:
        """Adjacent raster cells on two real segments that are not neighbours in quality order.

        Zero means every share is a band bordered only by the next better
        and next worse segment.
        """
        g = self.grid()
        count = 0
        for a, b in ((g[1:, :], g[:-1, :]), (g[:, 1:], g[:, :-1])):
            real = (a != self.dummy_index) & (b != self.dummy_index)
            count += int(np.sum(real & (np.abs(a - b) > 1)))
        return count

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta", "v", "segment_index"])
        for b, v, c in zip(self.beta, self.v, self.choice):
            w.writerow([_fmt(float(b)), _fmt(float(v)), int(c)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def run_partition_sweep(spec: PartitionSweepSpec) -> list[PartitionRaster]:
    """Choice rasters for each menu along the sweep; no equilibrium is solved."""
    out = []
    for value in spec.points:
        menu = spec.base.with_axis(spec.axis, value, spec.segment)
        market, prices, names = menu.market()
        pop = menu.population()
        assignment = partition(pop, prices, market)
        out.append(PartitionRaster(value, tuple(names), pop.beta, pop.v, assignment.choice, menu.resolution))
    return out
