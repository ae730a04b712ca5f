"""scikit-learn style wrappers.

AP types are rows of ``X = [[beta, v], ...]`` with their traffic ceilings
``alpha`` passed as ``sample_weight``. ``predict`` returns the index of
the chosen segment in quality order, with ``n_segments`` meaning the dummy
(no provider).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .choice import _utilities, choices
from .core import APPopulation, TPSegment, canonicalize
from .equilibrium import Certificate, PriceGrid, solve, verify
from .validation import check_ap_matrix, check_ap_weights, check_menu

__all__ = ["PriceEquilibrium", "MenuChoice"]


class _ChoiceMixin:
    def _prices_and_market(self):
        raise NotImplementedError

    def transform(self, X) -> np.ndarray:
        """Utility per unit of traffic ceiling, one column per segment plus the dummy."""
        beta, v = check_ap_matrix(X)
        prices, market = self._prices_and_market()
        return _utilities(beta, v, prices, np.append(market.q, np.inf))

    def predict(self, X) -> np.ndarray:
        beta, v = check_ap_matrix(X)
        prices, market = self._prices_and_market()
        return choices(beta, v, prices, np.append(market.q, np.inf))


class PriceEquilibrium(_ChoiceMixin, BaseEstimator):
    """Competitive equilibrium prices for a set of transport segments.

    ``fit`` solves for prices on the AP population given by ``X`` and
    ``sample_weight``; segments are sorted by quality and segments with equal
    quality are merged.

    >>> import numpy as np
    >>> X = np.array([[0.5, 0.8], [0.1, 0.4]])
    >>> est = PriceEquilibrium(qualities=[1.0], capacities=[1.0], grid_step=0.01).fit(X)
    >>> est.prices_.round(2).tolist()
    [0.41, 0.0]
    >>> est.predict(X).tolist()
    [0, 1]
    """

    def __init__(self, qualities=(0.2, 1.0, 5.0), capacities=(0.05, 0.2, 0.25), price_floors=None,
                 grid_step=None):
        self.qualities = qualities
        self.capacities = capacities
        self.price_floors = price_floors
        self.grid_step = grid_step

    def _population(self, X, sample_weight) -> APPopulation:
        beta, v = check_ap_matrix(X)
        alpha = check_ap_weights(sample_weight, len(beta))
        return APPopulation(alpha, beta, v, allow_negative_v=True)

    def fit(self, X, y=None, sample_weight=None):
        q, mu = check_menu(self.qualities, self.capacities, "capacities")
        floors = np.zeros_like(q) if self.price_floors is None else self.price_floors
        q, floors = check_menu(q, floors, "price_floors")
        pop = self._population(X, sample_weight)
        self.market_ = canonicalize([TPSegment(*row) for row in zip(q, mu, floors)])
        self.grid_ = PriceGrid.for_system(self.market_, pop, self.grid_step)
        self.result_ = solve(self.market_, pop, self.grid_)
        self.prices_ = self.result_.prices.copy()
        self.loads_ = self.result_.loads.copy()
        self.n_features_in_ = 2
        return self

    def _prices_and_market(self):
        check_is_fitted(self, "prices_")
        return self.prices_, self.market_

    def certify(self, X, sample_weight=None, competitive: bool = True) -> Certificate:
        """Brute-force equilibrium check of the fitted prices on a population."""
        check_is_fitted(self, "prices_")
        return verify(self.result_, self.market_, self._population(X, sample_weight), self.grid_, competitive)


class MenuChoice(_ChoiceMixin, BaseEstimator):
    """AP choices for a fixed price/quality menu; ``fit`` only validates the menu."""

    def __init__(self, qualities=(1.0, 3.0, 5.0, 7.0), prices=(0.7, 0.4, 0.25, 0.1)):
        self.qualities = qualities
        self.prices = prices

    def fit(self, X=None, y=None):
        q, p = check_menu(self.qualities, self.prices, "prices")
        if len(np.unique(q)) != len(q):
            raise ValueError("menu qualities must be distinct")
        order = np.argsort(q, kind="stable")
        self.market_ = canonicalize([TPSegment(qq, 0.0) for qq in q[order]])
        self.prices_ = np.append(p[order], 0.0)
        self.order_ = order
        self.n_features_in_ = 2
        return self

    def _prices_and_market(self):
        check_is_fitted(self, "prices_")
        return self.prices_, self.market_
