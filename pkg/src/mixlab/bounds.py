"""Mixing-time and divergence bound calculators.

All iteration counts are ceilings (upper bounds) or certified integer lower
bounds. Nothing here simulates anything.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import INFINITE, ConvexBody, diameter
from .potentials import contraction_coefficient

# continuous-mode PABI switches to its c -> 1 limit inside this band
_C_ONE_BAND = 1e-12
# relative snap for ceilings of values that are integers up to round-off
_SNAP = 1e-9

METRICS = ("tv", "kl", "renyi", "chi2", "hellinger")


class UnboundedDomain(ValueError):
    """A bound needs a finite diameter but the body is unbounded."""


def _ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def _finite_diameter(D) -> float:
    if D is INFINITE or not math.isfinite(float(D)):
        raise UnboundedDomain(
            "diameter is infinite; supply a diameter proxy via unconstrained_diameter_adapter")
    D = float(D)
    if D < 0:
        raise ValueError("diameter must be nonnegative")
    return D


@dataclass
class BoundInputs:
    """Parameters shared by the bound calculators."""

    alpha: float = 1.0
    D: float = 1.0
    sigma2: Optional[float] = None
    c: float = 1.0
    T: int = 1
    eta: float = 0.01
    m: float = 0.0
    M: float = 0.0
    eps: float = 0.25

    def __post_init__(self):
        if self.sigma2 is None:
            self.sigma2 = 2.0 * self.eta
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if not 0 <= self.c <= 1:
            raise ValueError("contraction coefficient must lie in [0, 1]")


@dataclass
class BoundReport:
    value: float
    formula_id: str
    metric: str = ""
    alpha: Optional[float] = None
    D: Optional[float] = None
    eta: Optional[float] = None
    m: Optional[float] = None
    M: Optional[float] = None
    eps: Optional[float] = None
    allocation: Optional[list] = field(default=None, repr=False)
    beta_alloc: Optional[float] = None
    note: str = ""

    CSV_COLUMNS = ("formula_id", "metric", "alpha", "D", "eta", "m", "M", "eps", "value")

    def row(self) -> dict:
        d = asdict(self)
        return {k: ("" if d[k] is None else d[k]) for k in self.CSV_COLUMNS}


# --- PABI ---------------------------------------------------------------------

def _geometric_ratio(c: float, T: int) -> float:
    """``(c^2 - 1) / (1 - c^{-2T})`` evaluated without overflow.

    Rewritten as ``(1 - c^2) c^{2T} / (1 - c^{2T})``; equals ``1/T`` at c = 1.
    """
    if abs(1.0 - c) < _C_ONE_BAND:
        return 1.0 / T
    if c == 0.0:
        return 0.0
    log_c = math.log(c)
    return math.expm1(2 * log_c) / math.expm1(2 * T * log_c) * math.exp(2 * T * log_c)


def pabi_divergence_bound(alpha: float, D: float, sigma2: float, c: float, T: int,
                          mode: str = "piecewise") -> float:
    """Diameter-aware bound on the Rényi divergence between two c-CNIs.

    Two contractive noisy iterations sharing their updates and Gaussian noise
    of variance ``sigma2``, started at most ``D`` apart, end within
    ``alpha D^2 / (2 sigma2) * rate`` of each other, where ``rate`` is
    ``1/T`` (c = 1) or ``c^{2T}`` (c < 1) in ``piecewise`` mode, and the
    optimal-allocation rate ``(c^2-1)/(1-c^{-2T})`` in ``continuous`` mode.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0 <= c <= 1:
        raise ValueError("c must lie in [0, 1]")
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    D = _finite_diameter(D)
    scale = alpha * D * D / (2.0 * sigma2)
    if mode == "piecewise":
        rate = 1.0 / T if c == 1 else c ** (2 * T)
    elif mode == "continuous":
        rate = _geometric_ratio(c, T)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return scale * rate


def optimal_shift_allocation(c: float, D: float, T: int) -> np.ndarray:
    """Shifts ``a_1..a_T`` minimizing ``sum a_t^2`` s.t. ``sum c^{-t} a_t = D``.

    The minimizer is ``a_t = c^{-t} beta D`` with
    ``beta = (c^2 - 1)/(1 - c^{-2T})``, i.e. ``D / T`` for c = 1.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    if D < 0:
        raise ValueError("D must be nonnegative")
    t = np.arange(1, T + 1)
    if abs(1.0 - c) < _C_ONE_BAND:
        return np.full(T, D / T)
    log_c = math.log(c)
    # c^{-t} beta = (1 - c^2) c^{2T - t} / (1 - c^{2T})
    factor = -math.expm1(2 * log_c) / -math.expm1(2 * T * log_c)
    return D * factor * np.exp((2 * T - t) * log_c)


def allocation_beta(c: float, T: int) -> float:
    """The allocation scale ``beta = (c^2 - 1)/(1 - c^{-2T})``; also the continuous PABI rate."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return _geometric_ratio(c, T)


# --- mixing times: log-concave ------------------------------------------------

def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"target error must lie in (0, 1), got {eps}")


def tv_block_length(D: float, eta: float) -> int:
    """Iterations after which TV between any two initializations is <= 1/4."""
    D = _finite_diameter(D)
    return _ceil(2.0 * D * D / eta)


def mixing_time_upper_convex(D: float, eta: float, eps: float, metric: str = "tv",
                             alpha: float = 1.0) -> int:
    """Iterations sufficient to mix to ``eps`` for convex smooth potentials.

    ``tv``: blocks of ``2 D^2 / eta`` iterations each shrink the worst-case
    TV by a factor 4, so ``ceil(log4(1/eps))`` blocks suffice.

    ``renyi`` (order ``alpha``): a first phase of ``alpha D^2 / (4 eta)``
    iterations brings the divergence below 1, hence the Hellinger-alpha
    divergence below ``2 e^{alpha - 1}``; a second phase of
    ``ceil(log2(2 e^{alpha-1} / eps))`` blocks then contracts it to ``eps``.
    ``kl`` is the order-1 case, ``chi2`` the order-2 case (the second phase
    controls ``H_2 = chi^2`` directly) and ``hellinger`` goes through KL with
    target ``eps^2``.
    """
    _check_eps(eps)
    D = _finite_diameter(D)
    if eta <= 0:
        raise ValueError("stepsize must be positive")
    block = tv_block_length(D, eta)
    metric = metric.lower()
    if metric == "tv":
        return block * max(1, _ceil(math.log(1.0 / eps, 4)))
    if metric == "kl":
        alpha, target = 1.0, eps
    elif metric == "renyi":
        target = eps
    elif metric == "chi2":
        alpha, target = 2.0, eps
    elif metric == "hellinger":
        alpha, target = 1.0, eps * eps
    else:
        raise ValueError(f"unknown metric {metric!r}")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    phase1 = _ceil(alpha * D * D / (4.0 * eta))
    blocks = _ceil(math.log2(2.0 * math.exp(alpha - 1.0) / target))
    return phase1 + block * blocks


def mixing_time_lower_convex(D: float, eta: float) -> int:
    """Certified TV-1/4 lower bound ``ceil(D^2 / (100 eta))`` (zero potential, interval)."""
    if D <= 0 or eta <= 0:
        raise ValueError("D and eta must be positive")
    x = D * D / (100.0 * eta)
    # round toward the safe (smaller) side when x is an integer up to round-off
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, x):
        return int(r)
    return int(math.ceil(x))


def tv_upper_bound_at(T: int, D: float, eta: float) -> float:
    """Worst-case TV to stationarity after ``T`` iterations (log-concave case).

    The smaller of the Pinsker bound on the KL decay ``D^2 / (4 eta T)`` and the
    block-boosting bound ``4^{-floor(T / block)}``.
    """
    D = _finite_diameter(D)
    if T <= 0:
        return 1.0
    pinsker = math.sqrt(D * D / (8.0 * eta * T))
    boosted = 4.0 ** -(T // tv_block_length(D, eta))
    return min(1.0, pinsker, boosted)


# --- mixing times: strongly log-concave ---------------------------------------

def _sc_threshold(metric: str, eps: float, alpha: float) -> tuple[float, float]:
    metric = metric.lower()
    if metric == "renyi":
        return alpha, eps
    if metric == "kl":
        return 1.0, eps
    if metric == "tv":
        return 1.0, 2.0 * eps * eps
    if metric == "chi2":
        return 2.0, math.log1p(eps)
    if metric == "hellinger":
        return 1.0, eps * eps
    raise ValueError(f"unknown metric {metric!r}")


def mixing_time_upper_strongly_convex(D: float, eta: float, m: float, M: float, eps: float,
                                      alpha: float = 1.0, metric: str = "renyi") -> int:
    """Smallest T with ``(alpha D^2 / (4 eta)) c^{2T} <= threshold``.

    ``c = max(|1 - eta m|, |1 - eta M|)``. Thresholds per metric: Rényi and KL
    ``eps``; TV ``2 eps^2`` (Pinsker); chi-squared ``log(1 + eps)`` at order 2;
    Hellinger ``eps^2`` through KL. With ``m = 0`` the log-concave calculator
    is used instead.
    """
    if eps <= 0:
        raise ValueError("target error must be positive")
    D = _finite_diameter(D)
    if m == 0:
        return mixing_time_upper_convex(D, eta, eps, metric, alpha)
    if eta * M >= 2:
        from .potentials import StepsizeTooLarge
        raise StepsizeTooLarge(f"need eta < 2/M, got eta={eta}, M={M}")
    c = contraction_coefficient(m, M, eta)
    alpha, thr = _sc_threshold(metric, eps, alpha)
    start = alpha * D * D / (4.0 * eta)
    if start <= thr or c == 0.0:
        return 1
    T = math.log(start / thr) / (2.0 * math.log(1.0 / c))
    return max(1, _ceil(T))


def mixing_time_lower_strongly_convex(alpha: float, c: float, eps: float) -> int:
    """Largest T with ``alpha c^{4T} / 4 > eps``; 0 when ``eps >= alpha / 4``."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps >= alpha / 4.0:
        return 0
    x = math.log(alpha / (4.0 * eps)) / (4.0 * math.log(1.0 / c))
    return max(0, int(math.ceil(x)) - 1)


# --- unconstrained setting ----------------------------------------------------

@dataclass(frozen=True)
class DiameterPatch:
    """Diameter to use in the calculators, and how to read their TV target."""

    D: float
    tv_target_factor: float = 1.0
    proxied: bool = False

    def tv_target(self, eps: float) -> float:
        return self.tv_target_factor * eps


def unconstrained_diameter_adapter(body: ConvexBody, eps: float,
                                   D_proxy: Optional[float] = None) -> DiameterPatch:
    """Swap an unbounded body's diameter for a user-supplied mass-capturing proxy.

    ``D_proxy`` must be a radius around a mode of the potential capturing all
    but ``eps`` of the stationary mass (computed elsewhere). The chain must
    then start at that mode, and a TV guarantee of ``eps`` from the
    calculators weakens to ``3 eps`` against the true stationary law.
    Bounded bodies pass through unchanged.
    """
    D = diameter(body)
    if D is not INFINITE:
        return DiameterPatch(D=float(D))
    if D_proxy is None:
        raise UnboundedDomain("unbounded body needs an externally supplied D_proxy")
    if D_proxy <= 0:
        raise ValueError("D_proxy must be positive")
    return DiameterPatch(D=float(D_proxy), tv_target_factor=3.0, proxied=True)


def bound_reports(D, eta: float, eps: float, alphas: Sequence[float] = (1.0,),
                  m: float = 0.0, M: float = 0.0) -> list[BoundReport]:
    """Every applicable upper/lower mixing bound for one parameter set."""
    D = _finite_diameter(D)
    common = dict(D=D, eta=eta, m=m, M=M)
    out = [BoundReport(mixing_time_upper_convex(D, eta, eps, "tv"), "convex-upper",
                       "tv", None, eps=eps, **common),
           BoundReport(mixing_time_lower_convex(D, eta), "convex-lower", "tv", None,
                       eps=0.25, **common)]
    for metric in ("kl", "chi2", "hellinger"):
        out.append(BoundReport(mixing_time_upper_convex(D, eta, eps, metric), "convex-upper",
                               metric, None, eps=eps, **common))
    for a in alphas:
        out.append(BoundReport(mixing_time_upper_convex(D, eta, eps, "renyi", a),
                               "convex-upper", "renyi", a, eps=eps, **common))
    if m > 0:
        c = contraction_coefficient(m, M, eta)
        for metric in ("tv", "kl", "chi2", "hellinger"):
            out.append(BoundReport(
                mixing_time_upper_strongly_convex(D, eta, m, M, eps, metric=metric),
                "strongly-convex-upper", metric, None, eps=eps, **common))
        for a in alphas:
            out.append(BoundReport(
                mixing_time_upper_strongly_convex(D, eta, m, M, eps, a, "renyi"),
                "strongly-convex-upper", "renyi", a, eps=eps, **common))
            if 0 < c < 1:
                out.append(BoundReport(mixing_time_lower_strongly_convex(a, c, eps),
                                       "strongly-convex-lower", "renyi", a, eps=eps, **common))
    return out
