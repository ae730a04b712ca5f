"""Yearly projection of CDN (A) and IP transit (B) prices.

The calibrated system has two services and three AP classes (video,
web, inelastic). Raw capacities grow geometrically from an anchor year,
total demand and the class weights grow geometrically from the start year,
and revenues are spread uniformly over ``(0, v_max]`` within each class.
Prices are in $/Mbps-month; capacities and demand in Tbps.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import APPopulation, Market, TPSegment, canonicalize
from .equilibrium import EquilibriumResult, PriceGrid, solve
from .quality import DirectEta

__all__ = [
    "TERABITS_PER_MBPS_MONTH",
    "Scenario",
    "YearlyState",
    "Projection",
    "build_year",
    "project",
    "convert_price",
    "sensitivity",
    "decision_scenarios",
    "SENSITIVITY_KNOBS",
]

log = logging.getLogger(__name__)

SECONDS_PER_MONTH = 30 * 24 * 3600
# 1 Mbps sustained over a 30-day month, in terabits
TERABITS_PER_MBPS_MONTH = 1e6 * SECONDS_PER_MONTH / 1e12

SENSITIVITY_KNOBS = ("alpha_start", "r_alpha", "eta_A", "eta_B")
SERVICES = ("A", "B")
CLASSES = ("a", "b", "c")


def convert_price(p: float) -> float:
    """$/Mbps-month to $/terabit at full 24/7 utilization."""
    if p < 0:
        raise ValueError(f"price must be >= 0, got {p}")
    return p / TERABITS_PER_MBPS_MONTH


@dataclass(frozen=True)
class Scenario:
    """Growth model behind a projection; defaults are the calibrated benchmark.

    All growth rates are yearly multipliers. ``r_nu_future`` replaces
    ``r_nu`` after the anchor year. ``horizon_split`` is the A:B raw-capacity
    ratio reached in the last projected year; the A share moves linearly from
    its anchor value to it while the total keeps its growth path.
    """

    start_year: int = 2007
    anchor_year: int = 2011
    end_year: int = 2014
    nu_anchor: tuple[float, float] = (14.0, 7.0)
    r_nu: float = 1.5
    r_nu_future: float | None = None
    horizon_split: tuple[float, float] | None = None
    eta: tuple[float, float] = (0.3, 0.9)
    alpha_start: float = 10.0
    r_alpha: float = 1.22
    weights_start: tuple[float, float, float] = (0.02, 0.75, 0.23)
    weight_growth: tuple[float, float, float] = (2.5, 1.5, 1.2)
    betas: tuple[float, float, float] = (10.0, 1.0, 0.1)
    qualities: tuple[float, float] = (0.01, 1.0)
    v_max: float = 10.0
    v_levels: int = 100
    p_min: tuple[float, float] = (0.0, 0.0)
    grid_step: float | None = None

    def __post_init__(self):
        for name in ("nu_anchor", "eta", "weights_start", "weight_growth", "betas", "qualities", "p_min"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if self.horizon_split is not None:
            object.__setattr__(self, "horizon_split", tuple(float(x) for x in self.horizon_split))
        if self.end_year < self.start_year:
            raise ValueError("end_year precedes start_year")
        rates = [self.r_nu, self.r_alpha, *self.weight_growth]
        if self.r_nu_future is not None:
            rates.append(self.r_nu_future)
        if any(not r > 0 for r in rates):
            raise ValueError("growth multipliers must be positive")
        if any(not w > 0 for w in self.weights_start):
            raise ValueError("starting weights must be positive")
        if not self.qualities[0] < self.qualities[1]:
            raise ValueError("service A must offer better quality (smaller q) than B")
        if any(not 0 < e <= 1 for e in self.eta):
            raise ValueError("utilization factors must lie in (0, 1]")
        if any(n < 0 for n in self.nu_anchor) or self.alpha_start <= 0:
            raise ValueError("capacities must be >= 0 and starting demand positive")
        if self.v_levels < 1 or self.v_max <= 0:
            raise ValueError("revenue grid needs v_levels >= 1 and v_max > 0")
        if self.horizon_split is not None and (len(self.horizon_split) != 2 or min(self.horizon_split) < 0
                                               or sum(self.horizon_split) <= 0):
            raise ValueError("horizon_split must be two non-negative numbers")

    @property
    def years(self) -> range:
        return range(self.start_year, self.end_year + 1)

    def raw_capacity(self, year: int) -> tuple[float, float]:
        total_anchor = sum(self.nu_anchor)
        share_anchor = self.nu_anchor[0] / total_anchor if total_anchor > 0 else 0.5
        dt = year - self.anchor_year
        rate = self.r_nu if dt <= 0 or self.r_nu_future is None else self.r_nu_future
        total = total_anchor * rate**dt
        share = share_anchor
        if self.horizon_split is not None and dt > 0:
            target = self.horizon_split[0] / sum(self.horizon_split)
            span = self.end_year - self.anchor_year
            frac = min(dt / span, 1.0) if span > 0 else 1.0
            share = share_anchor + (target - share_anchor) * frac
        return total * share, total * (1 - share)

    def class_demand(self, year: int) -> np.ndarray:
        dt = year - self.start_year
        total = self.alpha_start * self.r_alpha**dt
        w = np.array(self.weights_start) * np.array(self.weight_growth) ** dt
        return w / w.sum() * total


@dataclass(frozen=True)
class YearlyState:
    year: int
    nu_A: float
    nu_B: float
    mu_A: float
    mu_B: float
    alpha_a: float
    alpha_b: float
    alpha_c: float
    p_A: float
    p_B: float
    failed: bool = False
    error: str = ""

    @property
    def prices(self) -> tuple[float, float]:
        return self.p_A, self.p_B

    @property
    def alpha(self) -> float:
        return self.alpha_a + self.alpha_b + self.alpha_c


def build_year(s: Scenario, year: int) -> tuple[Market, APPopulation]:
    """Market (A, B, dummy) and AP population for one year."""
    if year not in s.years:
        raise ValueError(f"year {year} outside {s.start_year}..{s.end_year}")
    nu = s.raw_capacity(year)
    segments = [
        TPSegment(q, n, p, DirectEta(e), name)
        for q, n, p, e, name in zip(s.qualities, nu, s.p_min, s.eta, SERVICES)
    ]
    L = s.v_levels
    v_grid = np.arange(1, L + 1) * (s.v_max / L)
    demand = s.class_demand(year)
    pop = APPopulation(np.repeat(demand / L, L), np.repeat(s.betas, L), np.tile(v_grid, 3))
    return canonicalize(segments), pop


@dataclass
class Projection:
    scenario: Scenario
    states: list[YearlyState]
    label: str = ""

    def __getitem__(self, year: int) -> YearlyState:
        for st in self.states:
            if st.year == year:
                return st
        raise KeyError(year)

    @property
    def years(self) -> list[int]:
        return [st.year for st in self.states]

    def prices(self, service: str) -> np.ndarray:
        attr = {"A": "p_A", "B": "p_B"}[service]
        return np.array([getattr(st, attr) for st in self.states])

    def pct_change(self, service: str) -> np.ndarray:
        """Year-over-year change in percent; NaN for the first year or a zero base."""
        p = self.prices(service)
        out = np.full(len(p), np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            prev = p[:-1]
            out[1:] = np.where(prev > 0, 100.0 * (p[1:] - prev) / prev, np.nan)
        return out

    def mean_annual_drop(self, service: str, start: int, end: int) -> float:
        """Arithmetic mean of the yearly fractional drops between ``start`` and ``end``."""
        drops = []
        for y in range(start + 1, end + 1):
            prev, cur = self[y - 1].prices, self[y].prices
            i = SERVICES.index(service)
            drops.append(1.0 - cur[i] / prev[i])
        return float(np.mean(drops))

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["year", "mu_A", "mu_B", "alpha_a", "alpha_b", "alpha_c", "p_A", "p_B",
                    "pct_change_A", "pct_change_B", "p_A_usd_per_terabit", "p_B_usd_per_terabit"])
        pa, pb = self.pct_change("A"), self.pct_change("B")
        for st, ca, cb in zip(self.states, pa, pb):
            w.writerow([st.year, *(_fmt(x) for x in (st.mu_A, st.mu_B, st.alpha_a, st.alpha_b, st.alpha_c,
                                                       st.p_A, st.p_B, ca, cb)),
                        _fmt(_convert_or_nan(st.p_A)), _fmt(_convert_or_nan(st.p_B))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> str:
        s = self.scenario
        lines = []
        anchor = s.anchor_year
        if anchor in self.years:
            st = self[anchor]
            lines.append(f"{anchor} CDN price (A): {st.p_A:.4g} $/Mbps-month = {convert_price(st.p_A):.4g} $/Tb")
            lines.append(f"{anchor} transit price (B): {st.p_B:.4g} $/Mbps-month = {convert_price(st.p_B):.4g} $/Tb")
            if s.start_year < anchor:
                for svc in SERVICES:
                    drop = self.mean_annual_drop(svc, s.start_year, anchor)
                    lines.append(f"mean annual drop {svc} {s.start_year}-{anchor}: {100 * drop:.2f}%")
        last = self.years[-1] if self.states else None
        if last is not None and last != anchor:
            st = self[last]
            lines.append(f"{last} prices: CDN (A) {st.p_A:.4g}, transit (B) {st.p_B:.4g} $/Mbps-month")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.10g}"


def _convert_or_nan(p: float) -> float:
    return math.nan if math.isnan(p) else convert_price(p)


def _state(s: Scenario, year: int, market: Market, result: EquilibriumResult | None) -> YearlyState:
    nu = s.raw_capacity(year)
    mu = market.mu
    a = s.class_demand(year)
    if result is None:
        return YearlyState(year, *nu, *mu, *a, math.nan, math.nan, True)
    p = result.real_prices
    return YearlyState(year, *nu, *mu, *a, float(p[0]), float(p[1]))


def project(s: Scenario, label: str = "") -> Projection:
    """One competitive equilibrium per year."""
    states = []
    for year in s.years:
        market, pop = build_year(s, year)
        try:
            result = solve(market, pop, PriceGrid.for_system(market, pop, s.grid_step))
        except Exception as exc:
            log.warning("year %d failed: %s", year, exc)
            st = _state(s, year, market, None)
            states.append(replace(st, error=str(exc)))
            continue
        states.append(_state(s, year, market, result))
    return Projection(s, states, label)


def _with_knob(s: Scenario, knob: str, value: float) -> Scenario:
    if knob == "alpha_start":
        return replace(s, alpha_start=value)
    if knob == "r_alpha":
        return replace(s, r_alpha=value)
    if knob == "eta_A":
        return replace(s, eta=(value, s.eta[1]))
    if knob == "eta_B":
        return replace(s, eta=(s.eta[0], value))
    raise ValueError(f"unknown sensitivity knob {knob!r}; expected one of {SENSITIVITY_KNOBS}")


def sensitivity(s: Scenario, knob: str, values: Sequence[float]) -> dict[str, Projection]:
    """One projection per knob value, keyed ``"<knob>=<value>"`` in input order."""
    out = {}
    for value in values:
        label = f"{knob}={value:g}"
        out[label] = project(_with_knob(s, knob, float(value)), label)
    return out


def decision_scenarios(s: Scenario, variant: str, values: Sequence | None = None) -> dict[str, Projection]:
    """Capacity-growth (``growth``) or peering-ratio (``ratio``) scenario families.

    ``growth`` values are post-anchor capacity multipliers; ``ratio`` values
    are A:B splits reached in the last projected year.
    """
    out = {}
    if variant == "growth":
        for r in values if values is not None else (1.4, 1.5, 1.6):
            label = f"r_nu={r:g}"
            out[label] = project(replace(s, r_nu_future=float(r)), label)
    elif variant == "ratio":
        for split in values if values is not None else ((3, 1), (2, 1), (3, 2)):
            a, b = split
            label = f"split={a:g}:{b:g}"
            out[label] = project(replace(s, horizon_split=(float(a), float(b))), label)
    else:
        raise ValueError(f"unknown decision variant {variant!r}; expected 'growth' or 'ratio'")
    return out
