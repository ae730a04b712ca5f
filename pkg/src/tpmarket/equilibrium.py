"""Demand aggregation, equilibrium certificates and the price-equilibrium solvers.

Prices live on a per-segment grid ``floor_I + k * step``. The last grid point
of every segment sits strictly above the highest AP revenue, so at that price
nobody buys and any capacity (even zero) is feasible.

``solve`` runs the descending scheme: every price starts at the top of its
grid and, round-robin in quality order, drops to the lowest grid price that
keeps the segment's load within its effective capacity. Own-segment load is
non-increasing in own price, so each drop is found by bisection. Lowering a
price only pulls APs away from the other segments, so every iterate stays
feasible and prices never rise; the limit is the largest competitive
equilibrium on the grid. ``solve_ascending`` starts at the floors and raises
overloaded segments, converging to the smallest one.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .choice import TIE_RTOL, Assignment, choose, decay_matrix, partition, utility_scale
from .core import APPopulation, Market

__all__ = [
    "FEAS_ATOL",
    "PriceGrid",
    "EquilibriumResult",
    "Violation",
    "Certificate",
    "demand",
    "verify",
    "solve",
    "solve_ascending",
]

log = logging.getLogger(__name__)

# loads within FEAS_ATOL * total_alpha of capacity count as feasible
FEAS_ATOL = 1e-12
DEFAULT_STEP_FRACTION = 1e-3


@dataclass(frozen=True, eq=False)
class PriceGrid:
    """Candidate prices ``floor[I] + k * step`` for ``k = 0..top[I]``.

    ``top[I]`` is the first index whose price lies strictly above ``ceiling``
    (or 0 when the floor already does).
    """

    step: float
    floor: np.ndarray
    ceiling: float
    top: np.ndarray = field(default=None)

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"grid step must be positive, got {self.step}")
        floor = np.asarray(self.floor, dtype=float)
        object.__setattr__(self, "floor", floor)
        if self.top is None:
            span = (self.ceiling - floor) / self.step
            top = np.where(span >= 0, np.floor(span + 1e-9) + 1, 0).astype(int)
        else:
            top = np.asarray(self.top, dtype=int)
            if top.shape != floor.shape:
                raise ValueError("top must align with floor")
        object.__setattr__(self, "top", top)

    @classmethod
    def for_system(cls, market: Market, population: APPopulation, step: float | None = None) -> "PriceGrid":
        """Grid from the segments' floors up to the highest AP revenue.

        The default step is a thousandth of the span between the lowest floor
        and the highest revenue.
        """
        floor = market.p_min
        ceiling = population.v_max
        if step is None:
            lowest = float(floor.min()) if len(floor) else 0.0
            span = ceiling - lowest
            step = DEFAULT_STEP_FRACTION * span if span > 0 else 1e-3
        return cls(step, floor, ceiling)

    def price(self, segment: int, k: int) -> float:
        return float(self.floor[segment] + k * self.step)

    def prices(self, k) -> np.ndarray:
        return self.floor + np.asarray(k) * self.step

    def points(self, segment: int) -> np.ndarray:
        return self.floor[segment] + np.arange(self.top[segment] + 1) * self.step

    def transformed(self, k1: float, offset: float) -> "PriceGrid":
        """The grid seen after mapping every price ``p`` to ``k1 * p + offset``."""
        return PriceGrid(k1 * self.step, k1 * self.floor + offset, k1 * self.ceiling + offset, self.top.copy())


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    prices: np.ndarray
    assignment: Assignment
    loads: np.ndarray
    feasible: bool
    competitive: bool
    iterations: int
    grid_index: np.ndarray

    @property
    def real_prices(self) -> np.ndarray:
        return self.prices[:-1]


@dataclass(frozen=True)
class Violation:
    segment: int
    price: float
    clause: str
    detail: str


@dataclass(frozen=True)
class Certificate:
    violations: tuple[Violation, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return "certificate: PASS"
        lines = [f"certificate: FAIL ({len(self.violations)} violations)"]
        lines += [f"  segment {v.segment} @ {v.price:.6g} [{v.clause}] {v.detail}" for v in self.violations]
        return "\n".join(lines)


def _require_canonical(market: Market) -> None:
    if not market.is_canonical:
        raise ValueError("market must be canonical (see canonicalize)")


def _loads_from_choice(choice: np.ndarray, W: np.ndarray) -> np.ndarray:
    S = W.shape[1]
    loads = np.zeros(S + 1)
    for I in range(S):
        loads[I] = W[choice == I, I].sum()
    return loads


def demand(prices, market: Market, population: APPopulation) -> np.ndarray:
    """Carried throughput per segment (dummy included, always 0) at the given prices."""
    _require_canonical(market)
    assignment = partition(population, prices, market)
    W = population.alpha[:, None] * decay_matrix(population.beta, market.q)
    return _loads_from_choice(assignment.choice, W)


class _Evaluator:
    """Load evaluation on the real segments with the dummy as an implicit 0 column."""

    def __init__(self, market: Market, population: APPopulation, grid: PriceGrid):
        self.grid = grid
        self.E = decay_matrix(population.beta, market.q)
        self.W = population.alpha[:, None] * self.E
        self.v = population.v
        self.mu = market.mu
        self.tol = FEAS_ATOL * population.total_alpha
        self.S = len(self.mu)

    def utilities(self, prices: np.ndarray) -> np.ndarray:
        return (self.v[:, None] - prices[None, :]) * self.E

    def loads(self, k: np.ndarray) -> np.ndarray:
        prices = self.grid.prices(k)
        U = self.utilities(prices)
        U = np.concatenate([U, np.zeros((len(self.v), 1))], axis=1)
        return _loads_from_choice(choose(U, utility_scale(self.v, prices, self.E)), self.W)

    def own_load(self, I: int, k: np.ndarray):
        """Load of segment ``I`` as a function of its own price, others fixed at ``k``."""
        prices = self.grid.prices(k)
        U = self.utilities(prices)
        n = len(self.v)
        before = U[:, :I].max(axis=1) if I > 0 else np.full(n, -np.inf)
        after = np.zeros(n)
        if I + 1 < self.S:
            after = np.maximum(U[:, I + 1:].max(axis=1), after)
        others = np.delete(np.arange(self.S), I)
        scale_others = utility_scale(self.v, prices[others], self.E[:, others])
        EI, WI, v = self.E[:, I], self.W[:, I], self.v
        absv = np.abs(v)

        def load(p: float) -> float:
            # same comparisons as choice.choose, restricted to column I
            u = (v - p) * EI
            M = np.maximum(np.maximum(u, before), after)
            size = np.maximum(np.maximum(np.abs(M), scale_others), (absv + abs(p)) * EI)
            thr = M - TIE_RTOL * size
            return WI[(u >= thr) & (before < thr)].sum()

        return load

    def feasible(self, I: int, load: float) -> bool:
        return load <= self.mu[I] + self.tol

    def lowest_feasible(self, I: int, k: np.ndarray, lo: int, hi: int) -> int:
        """Lowest index in ``[lo, hi]`` keeping segment ``I`` feasible; ``hi`` is assumed feasible."""
        load = self.own_load(I, k)
        floor, step = self.grid.floor[I], self.grid.step
        while lo < hi:
            mid = (lo + hi) // 2
            if self.feasible(I, load(floor + mid * step)):
                hi = mid
            else:
                lo = mid + 1
        return hi


def _finish(market, population, grid, ev, k, passes) -> EquilibriumResult:
    prices = np.append(grid.prices(k), 0.0)
    assignment = partition(population, prices, market)
    W = population.alpha[:, None] * decay_matrix(population.beta, market.q)
    loads = _loads_from_choice(assignment.choice, W)
    tol = FEAS_ATOL * population.total_alpha
    feasible = bool(np.all(loads[:-1] <= market.mu + tol))
    competitive = True
    for I in range(len(k)):
        if k[I] > 0:
            kk = k.copy()
            kk[I] -= 1
            if ev.feasible(I, ev.own_load(I, k)(grid.price(I, kk[I]))):
                competitive = False
    return EquilibriumResult(prices, assignment, loads, feasible, competitive, passes, k.copy())


def _prepare(market, population, grid, step):
    _require_canonical(market)
    if len(population) == 0:
        raise ValueError("empty AP population")
    grid = grid if grid is not None else PriceGrid.for_system(market, population, step)
    if len(grid.floor) != len(market.real):
        raise ValueError("price grid does not match the market's segments")
    return grid, _Evaluator(market, population.merged(), grid)


def solve(market: Market, population: APPopulation, grid: PriceGrid | None = None,
          step: float | None = None) -> EquilibriumResult:
    """Competitive price equilibrium by descending round-robin price updates."""
    grid, ev = _prepare(market, population, grid, step)
    k = grid.top.copy()
    passes = 0
    changed = True
    while changed:
        passes += 1
        changed = False
        for I in range(ev.S):
            new = ev.lowest_feasible(I, k, 0, int(k[I]))
            if new != k[I]:
                k[I] = new
                changed = True
    log.debug("descending solve converged after %d passes", passes)
    return _finish(market, population, grid, ev, k, passes)


def solve_ascending(market: Market, population: APPopulation, grid: PriceGrid | None = None,
                    step: float | None = None) -> EquilibriumResult:
    """Start at the floors and raise each overloaded segment until it fits."""
    grid, ev = _prepare(market, population, grid, step)
    k = np.zeros(ev.S, dtype=int)
    passes = 0
    changed = True
    while changed:
        passes += 1
        changed = False
        for I in range(ev.S):
            if ev.feasible(I, ev.own_load(I, k)(grid.price(I, k[I]))):
                continue
            k[I] = ev.lowest_feasible(I, k, int(k[I]) + 1, int(grid.top[I]))
            changed = True
    log.debug("ascending solve converged after %d passes", passes)
    return _finish(market, population, grid, ev, k, passes)


def verify(result: EquilibriumResult, market: Market, population: APPopulation,
           grid: PriceGrid, competitive: bool = True) -> Certificate:
    """Check the equilibrium conditions by scanning every grid price of every segment.

    Clauses: ``feasible`` (load within effective capacity), ``utilization``
    (no other price at or above the floor carries strictly more feasible load)
    and, when ``competitive`` is set, ``competitive`` (no lower feasible price).
    Loads are recomputed from scratch with ``demand``.
    """
    _require_canonical(market)
    prices = np.asarray(result.prices, dtype=float)
    mu = market.mu
    tol = FEAS_ATOL * population.total_alpha
    violations: list[Violation] = []
    if prices[-1] != 0:
        violations.append(Violation(len(prices) - 1, prices[-1], "dummy", "dummy price must be 0"))
        return Certificate(tuple(violations))
    loads = demand(prices, market, population)
    for I, seg in enumerate(market.real):
        p_I = prices[I]
        if p_I < seg.p_min:
            violations.append(Violation(I, p_I, "floor", f"price below floor {seg.p_min:g}"))
        if loads[I] > mu[I] + tol:
            violations.append(Violation(I, p_I, "feasible", f"load {loads[I]:.6g} exceeds capacity {mu[I]:.6g}"))
            continue
        # report at most one violation per clause and segment
        pending = {"utilization", "competitive"} if competitive else {"utilization"}
        for p in grid.points(I):
            if not pending:
                break
            if p == p_I:
                continue
            trial = prices.copy()
            trial[I] = p
            load = demand(trial, market, population)[I]
            if load > mu[I] + tol:
                continue
            if "utilization" in pending and load > loads[I] + tol:
                pending.discard("utilization")
                violations.append(Violation(
                    I, p, "utilization", f"feasible load {load:.6g} > {loads[I]:.6g} at the equilibrium price"))
            if "competitive" in pending and p < p_I:
                pending.discard("competitive")
                violations.append(Violation(I, p, "competitive", f"lower price {p:.6g} is feasible"))
    return Certificate(tuple(violations))
