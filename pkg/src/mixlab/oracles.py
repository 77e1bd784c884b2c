"""Exact laws and Monte Carlo checks for the lower-bound constructions.

Two constructions are covered: the one-dimensional quadratic
``f(x) = (lam/2) x^2`` run without constraints, whose iterates are exactly
Gaussian, and the zero potential on an interval, whose iterates form a
projected Gaussian random walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import ChainConfig, run_ensemble
from .divergences import Gaussian1D, log_ratio_gap
from .geometry import Interval
from .potentials import FiniteSumPotential, Zero


@dataclass(frozen=True)
class QuadraticChainLaw:
    """The chain on ``f(x) = (lam/2) x^2`` over the real line, started at 0.

    ``T`` may be ``math.inf`` for the stationary law.
    """

    lam: float
    eta: float
    T: float = 1

    def __post_init__(self):
        if self.lam < 0 or self.eta <= 0:
            raise ValueError("need lam >= 0 and eta > 0")
        if self.lam * self.eta > 2:
            raise ValueError("eta * lam > 2: the chain is not contractive")
        if self.T < 0 or (self.T != math.inf and self.T != int(self.T)):
            raise ValueError("T must be a nonnegative integer or math.inf")

    @classmethod
    def from_regularity(cls, m: float, M: float, eta: float, T=1) -> "QuadraticChainLaw":
        """Pick ``lam`` in ``{m, M}`` maximizing ``|1 - eta lam|``; ties go to ``M``."""
        lam = M if abs(1 - eta * M) >= abs(1 - eta * m) else m
        return cls(lam, eta, T)

    @property
    def c(self) -> float:
        return abs(1.0 - self.eta * self.lam)


def exact_iterate_law(q: QuadraticChainLaw) -> Gaussian1D:
    """Law of ``X_T``: ``N(0, 2 eta (1 - c^{2T}) / (1 - c^2))``.

    Raises
    ------
    ValueError
        For ``T = inf`` with ``c = 1`` (there is no stationary law).
    """
    c, eta, T = q.c, q.eta, q.T
    if T == 0:
        return Gaussian1D(0.0, 0.0)
    if c == 1.0:
        if T == math.inf:
            raise ValueError("no stationary law when c = 1")
        return Gaussian1D(0.0, 2.0 * eta * T)
    if c == 0.0:
        return Gaussian1D(0.0, 2.0 * eta)
    if T == math.inf:
        return Gaussian1D(0.0, 2.0 * eta / (1.0 - c * c))
    log_c = math.log(c)
    return Gaussian1D(0.0, 2.0 * eta * math.expm1(2 * T * log_c) / math.expm1(2 * log_c))


def _check_gap_args(alpha, c, T):
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if T < 1:
        raise ValueError("T must be >= 1")


def exact_renyi_gap(alpha: float, c: float, T: int) -> float:
    """``D_alpha(X_T || pi_eta)`` for the quadratic chain started at 0.

    With ``x = c^{2T}`` and ``beta = 1 - alpha`` this is
    ``log(1 - beta x) / (2 beta) - log(1 - x) / 2`` (order 1:
    ``(-x - log(1 - x)) / 2``). It does not depend on ``eta``. Evaluated by
    :func:`~mixlab.divergences.log_ratio_gap`, which stays accurate for tiny ``x``.
    """
    _check_gap_args(alpha, c, T)
    return log_ratio_gap(1.0 - alpha, -(c ** (2 * T)))


def sc_lower_bound_value(alpha: float, c: float, T: int) -> float:
    """``alpha c^{4T} / 4``."""
    if alpha < 1 or not 0 <= c <= 1 or T < 0:
        raise ValueError("need alpha >= 1, c in [0, 1], T >= 0")
    return alpha * c ** (4 * T) / 4.0


class EscapeEstimate(NamedTuple):
    estimate: float
    stderr: float
    ceiling: float
    respected: bool


def _mc(hits: np.ndarray) -> tuple[float, float]:
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 0.0) / hits.size)


def random_walk_escape(D: float, eta: float, T: int, start=None, trials: int = 100_000,
                       seed: int = 0, workers: int = 1) -> EscapeEstimate:
    """Probability that the projected walk on ``[-D/2, D/2]`` ends at or above 0.

    The walk is the zero-potential chain started at ``start`` (default
    ``-D/4``). The ceiling is ``exp(-D^2 / (64 T eta))``; ``respected`` means
    the estimate is within three standard errors of it.
    """
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials")
    start = -D / 4.0 if start is None else float(start)
    cfg = ChainConfig(Interval(-D / 2.0, D / 2.0), FiniteSumPotential([Zero(1)]), eta, 1, T,
                      init=np.array([start]), master_seed=seed)
    final = run_ensemble(cfg, trials, [T], workers=workers)[T][:, 0]
    p, se = _mc(final >= 0)
    ceiling = math.exp(-D * D / (64.0 * T * eta)) if T > 0 else 0.0
    return EscapeEstimate(p, se, ceiling, p <= ceiling + 3 * se)


def walk_supremum_probability(a: float, T: int, trials: int = 100_000, seed: int = 0,
                              two_sided: bool = True, chunk: int = 20_000) -> EscapeEstimate:
    """Monte Carlo for ``P(max_{t<=T} S_t >= a)`` with standard normal increments.

    ``two_sided`` uses ``|S_t|``. The ceiling is ``exp(-a^2 / (2T))`` in
    both cases. That holds for the one-sided maximum; the two-sided event
    can exceed it once ``T`` is large, and ``2 exp(-a^2 / (2T))`` is then
    the valid ceiling.
    """
    if a <= 0 or T < 1:
        raise ValueError("need a > 0 and T >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    hits = np.empty(trials, dtype=bool)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        S = np.cumsum(rng.standard_normal((hi - lo, T)), axis=1)
        peak = np.abs(S).max(axis=1) if two_sided else S.max(axis=1)
        hits[lo:hi] = peak >= a
    p, se = _mc(hits)
    ceiling = math.exp(-a * a / (2.0 * T))
    return EscapeEstimate(p, se, ceiling, p <= ceiling + 3 * se)
