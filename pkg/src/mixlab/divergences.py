"""Rényi-family divergences on Gaussians and finite 1D distributions.

Order 1 is always the KL divergence computed from its own closed form, never
by dividing by ``alpha - 1``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp, xlogy

logger = logging.getLogger(__name__)

INF = math.inf
MAX_ORACLE_SUPPORT = 16


class OrderTooLargeForVariancePair(ValueError):
    """``(1 - alpha) s0^2 + alpha s1^2 <= 0``: the Gaussian divergence is infinite."""


class DegenerateReference(ValueError):
    """The reference Gaussian has zero variance."""


class OracleScaleExceeded(ValueError):
    """Support too large for the exact shifted-divergence program."""


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be >= 0")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


class DiscreteDist:
    """Finitely supported distribution on the real line.

    Parameters
    ----------
    support : array_like
        Strictly increasing atom locations.
    weights : array_like
        Nonnegative masses summing to one within 1e-12.
    """

    def __init__(self, support, weights):
        x = np.asarray(support, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if x.shape != w.shape or x.size == 0:
            raise ValueError("support and weights must be nonempty and of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        self.support = x
        self.weights = w

    @classmethod
    def from_atoms(cls, points, masses=None) -> "DiscreteDist":
        """Build from unsorted, possibly repeated atoms; masses are merged and normalized."""
        pts = np.asarray(points, dtype=float).ravel()
        m = np.ones_like(pts) if masses is None else np.asarray(masses, dtype=float).ravel()
        uniq, inv = np.unique(pts, return_inverse=True)
        w = np.bincount(inv, weights=m, minlength=uniq.size)
        return cls(uniq, w / w.sum())

    @classmethod
    def dirac(cls, x: float) -> "DiscreteDist":
        return cls([x], [1.0])

    def pushforward(self, fn: Callable[[np.ndarray], np.ndarray]) -> "DiscreteDist":
        """Law of ``fn(X)``; atoms landing on the same point merge."""
        return DiscreteDist.from_atoms(fn(self.support), self.weights)

    def convolve(self, other: "DiscreteDist") -> "DiscreteDist":
        """Law of ``X + Y`` for independent ``X ~ self``, ``Y ~ other``."""
        pts = (self.support[:, None] + other.support[None, :]).ravel()
        w = (self.weights[:, None] * other.weights[None, :]).ravel()
        return DiscreteDist.from_atoms(pts, w)

    def __len__(self):
        return self.support.size

    def __repr__(self):
        return f"DiscreteDist(support={self.support.tolist()}, weights={self.weights.tolist()})"


@dataclass(frozen=True)
class DivergenceValue:
    kind: str
    value: float
    alpha: Optional[float] = None

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError("divergence values are nonnegative")

    def row(self) -> dict:
        return {"kind": self.kind, "alpha": "" if self.alpha is None else self.alpha,
                "value": "inf" if self.value == INF else self.value}


# --- Gaussians ----------------------------------------------------------------

def renyi_gaussian(alpha: float, g0: Gaussian1D, g1: Gaussian1D) -> float:
    """``D_alpha(g0 || g1)`` in closed form; order 1 is the KL divergence.

    A Dirac ``g0`` (zero variance) against a proper Gaussian is infinitely
    far in every order.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    v0, v1 = g0.variance, g1.variance
    if v1 <= 0:
        raise DegenerateReference("reference Gaussian must have positive variance")
    if v0 == 0:
        return INF
    dm2 = (g1.mean - g0.mean) ** 2
    beta = 1.0 - alpha
    u = v0 / v1 - 1.0
    va = 1.0 + beta * u  # ((1 - alpha) v0 + alpha v1) / v1
    if va <= 0:
        raise OrderTooLargeForVariancePair(
            f"alpha={alpha} too large for variances ({v0}, {v1})")
    return alpha * dm2 / (2.0 * va * v1) + log_ratio_gap(beta, u)


# the power series is used while its ratio test is below this
_SERIES_RATIO = 0.1


def log_ratio_gap(beta: float, u: float) -> float:
    """``(log1p(beta u) / beta - log1p(u)) / 2``, with ``beta = 0`` as ``(u - log1p(u)) / 2``.

    This is the variance part of the order ``1 - beta`` divergence between
    centred Gaussians with variance ratio ``1 + u``. For small ``u`` the
    logarithms nearly cancel, so the series
    ``sum_{k>=2} (-u)^k (1 - beta^{k-1}) / (2k)`` is summed instead.
    """
    if u == 0.0:
        return 0.0
    if max(1.0, abs(beta)) * abs(u) < _SERIES_RATIO:
        total = 0.0
        uk = -u
        bk = 1.0  # beta^{k-1}
        for k in range(2, 200):
            uk *= -u
            bk *= beta
            term = uk * (1.0 - bk) / (2 * k)
            total += term
            # odd terms vanish when beta = -1, so test the term's magnitude bound
            if abs(uk) * (1.0 + abs(bk)) <= 1e-17 * abs(total):
                break
        return max(total, 0.0)
    if beta == 0.0:
        return 0.5 * (u - math.log1p(u))
    return max(0.5 * (math.log1p(beta * u) / beta - math.log1p(u)), 0.0)


# --- discrete -----------------------------------------------------------------

def _aligned(mu: DiscreteDist, nu: DiscreteDist) -> tuple[np.ndarray, np.ndarray]:
    grid = np.union1d(mu.support, nu.support)
    p = np.zeros(grid.size)
    q = np.zeros(grid.size)
    p[np.searchsorted(grid, mu.support)] = mu.weights
    q[np.searchsorted(grid, nu.support)] = nu.weights
    return p, q


def renyi_vectors(alpha: float, p: np.ndarray, q: np.ndarray) -> float:
    """Rényi divergence between two mass vectors on a common grid."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    pos_p = p > 0
    if np.any(pos_p & (q <= 0)):
        return INF
    sel = pos_p
    if alpha == 1:
        return float(max(0.0, np.sum(xlogy(p[sel], p[sel]) - xlogy(p[sel], q[sel]))))
    # log sum p^alpha q^{1-alpha}
    lse = logsumexp(alpha * np.log(p[sel]) + (1.0 - alpha) * np.log(q[sel]))
    return float(max(0.0, lse / (alpha - 1.0)))


def renyi_discrete(alpha: float, mu: DiscreteDist, nu: DiscreteDist) -> float:
    """``D_alpha(mu || nu)`` on the merged support; ``inf`` unless ``mu << nu``."""
    p, q = _aligned(mu, nu)
    return renyi_vectors(alpha, p, q)


def tv_discrete(mu: DiscreteDist, nu: DiscreteDist) -> float:
    """Total variation distance ``sum |p - q| / 2``."""
    p, q = _aligned(mu, nu)
    return 0.5 * float(np.abs(p - q).sum())


def hellinger_discrete(mu: DiscreteDist, nu: DiscreteDist) -> float:
    """Hellinger distance ``sqrt(sum (sqrt p - sqrt q)^2)`` (no factor 1/2)."""
    p, q = _aligned(mu, nu)
    return float(np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def chi2_discrete(mu: DiscreteDist, nu: DiscreteDist) -> float:
    """``sum (p - q)^2 / q``; infinite unless ``mu << nu``."""
    p, q = _aligned(mu, nu)
    if np.any((p > 0) & (q <= 0)):
        return INF
    sel = q > 0
    return float(np.sum((p[sel] - q[sel]) ** 2 / q[sel]))


class ComparisonBounds(NamedTuple):
    tv_bound: float
    hellinger_bound: float
    chi2: float


def comparison_bounds(kl: float, d2: float) -> ComparisonBounds:
    """Pinsker TV bound, Hellinger bound from KL, and chi-squared from order 2."""
    if kl < 0 or d2 < 0:
        raise ValueError("divergences are nonnegative")
    return ComparisonBounds(math.sqrt(kl / 2.0), math.sqrt(kl), math.expm1(d2))


def hellinger_alpha_from_renyi(alpha: float, d_alpha: float) -> float:
    """``H_alpha = (exp((alpha-1) D_alpha) - 1) / (alpha - 1)``."""
    if alpha <= 1:
        raise ValueError("alpha must be > 1")
    return math.expm1((alpha - 1.0) * d_alpha) / (alpha - 1.0)


def renyi_from_hellinger_alpha(alpha: float, h_alpha: float) -> float:
    """Inverse of :func:`hellinger_alpha_from_renyi`."""
    if alpha <= 1:
        raise ValueError("alpha must be > 1")
    return math.log1p((alpha - 1.0) * h_alpha) / (alpha - 1.0)


# --- shifted Rényi ------------------------------------------------------------

@dataclass
class ShiftedResult:
    value: float
    mu_shifted: Optional[np.ndarray]
    coupling: Optional[np.ndarray]
    gap: float
    iterations: int


def _project_scaled_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{w >= 0, sum w = total}``."""
    if v.size == 1:
        return np.array([total])
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class _ShiftedProgram:
    """min over couplings P (rows = atoms of mu, columns = atoms of nu) of
    ``g(mu')`` with ``mu' = P^T 1``, row sums fixed to ``mu`` and entries
    zero wherever the displacement exceeds the shift.

    ``g`` is ``KL(mu'||nu)`` for order 1 and ``sum mu'^alpha nu^{1-alpha}``
    otherwise (the divergence is a monotone transform of the latter).
    """

    def __init__(self, alpha, mass, allowed, q):
        self.alpha = alpha
        self.mass = mass
        self.allowed = allowed
        self.q = q
        self.rows = [np.nonzero(a)[0] for a in allowed]

    def objective(self, mu_p):
        if self.alpha == 1:
            return float(np.sum(xlogy(mu_p, mu_p) - xlogy(mu_p, self.q)))
        return float(np.sum(mu_p ** self.alpha * self.q ** (1.0 - self.alpha)))

    def grad(self, mu_p):
        if self.alpha == 1:
            return np.log(np.maximum(mu_p, 1e-300) / self.q) + 1.0
        return self.alpha * np.maximum(mu_p, 0.0) ** (self.alpha - 1.0) * self.q ** (1.0 - self.alpha)

    def project(self, P):
        out = np.zeros_like(P)
        for i, cols in enumerate(self.rows):
            out[i, cols] = _project_scaled_simplex(P[i, cols], self.mass[i])
        return out

    def fw_vertex(self, g):
        """Linear minimizer over the feasible set (each row to its cheapest column)."""
        S = np.zeros((len(self.rows), self.q.size))
        for i, cols in enumerate(self.rows):
            S[i, cols[np.argmin(g[cols])]] = self.mass[i]
        return S

    def gap(self, P, g):
        S = self.fw_vertex(g)
        return float(np.sum(g[None, :] * (P - S)))

    def feasible_start(self):
        P = np.zeros((len(self.rows), self.q.size))
        for i, cols in enumerate(self.rows):
            P[i, cols] = self.mass[i] / cols.size
        return P

    def interior_point(self):
        """Solve the program with an interior-point conic solver; None on failure."""
        import cvxpy as cp

        ii, jj = np.nonzero(self.allowed)
        k = ii.size
        p = cp.Variable(k, nonneg=True)
        cols = np.zeros((self.q.size, k))
        cols[jj, np.arange(k)] = 1.0
        rows = np.zeros((len(self.rows), k))
        rows[ii, np.arange(k)] = 1.0
        mu_p = cols @ p
        if self.alpha == 1:
            obj = cp.sum(cp.rel_entr(mu_p, self.q))
        else:
            obj = cp.sum(cp.multiply(self.q ** (1.0 - self.alpha), cp.power(mu_p, self.alpha)))
        prob = cp.Problem(cp.Minimize(obj), [rows @ p == self.mass])
        try:
            with warnings.catch_warnings():
                # accuracy is checked afterwards by the gap certificate
                warnings.simplefilter("ignore")
                prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10,
                           tol_feas=1e-10, max_iter=500)
        except cp.error.SolverError:
            return None
        if p.value is None:
            return None
        P = np.zeros(self.allowed.shape)
        P[ii, jj] = np.maximum(p.value, 0.0)
        # restore exact row sums
        sums = P.sum(axis=1)
        P *= (self.mass / np.where(sums > 0, sums, 1.0))[:, None]
        empty = sums <= 0
        if np.any(empty):
            P[empty] = self.feasible_start()[empty]
        return P

    def polish(self, P, max_iter=300, tol=1e-10):
        """Projected gradient with backtracking, stopped by the Frank-Wolfe gap."""
        mu_p = P.sum(axis=0)
        f = self.objective(mu_p)
        g = self.grad(mu_p)
        gap = self.gap(P, g)
        step = 1.0
        it = 0
        for it in range(1, max_iter + 1):
            if gap <= tol * max(1.0, abs(f)):
                break
            step = min(step * 2.0, 1e6)
            while True:
                P_new = self.project(P - step * g[None, :])
                mu_new = P_new.sum(axis=0)
                f_new = self.objective(mu_new)
                D = P_new - P
                if f_new <= f + np.sum(g[None, :] * D) + np.sum(D * D) / (2.0 * step):
                    break
                step *= 0.5
                if step < 1e-18:
                    return P, mu_p, f, gap, it
            rel_change = abs(f - f_new) / max(1.0, abs(f))
            P, mu_p, f = P_new, mu_new, f_new
            g = self.grad(mu_p)
            gap = self.gap(P, g)
            if rel_change < 1e-15:
                break
        return P, mu_p, f, gap, it

    def solve(self):
        P = self.interior_point()
        if P is None:
            logger.info("interior-point solve failed; starting from a uniform coupling")
            P = self.feasible_start()
        P, mu_p, f, gap, it = self.polish(P)
        if gap > 1e-8:
            P, mu_p, f, gap, extra = self._frank_wolfe(P, mu_p, f, max_iter=500)
            it += extra
            if gap > 1e-7:
                logger.warning("shifted divergence certified only to gap %.3g", gap)
        return P, mu_p, f, gap, it

    def _frank_wolfe(self, P, mu_p, f, max_iter=100_000):
        """Fallback with exact line search by golden section on [0, 1]."""
        gap = INF
        for k in range(max_iter):
            g = self.grad(mu_p)
            S = self.fw_vertex(g)
            gap = float(np.sum(g[None, :] * (P - S)))
            if gap <= 1e-10:
                break
            d_mu = S.sum(axis=0) - mu_p
            lo, hi = 0.0, 1.0
            for _ in range(60):
                a = lo + 0.382 * (hi - lo)
                b = lo + 0.618 * (hi - lo)
                if self.objective(mu_p + a * d_mu) <= self.objective(mu_p + b * d_mu):
                    hi = b
                else:
                    lo = a
            gamma = 0.5 * (lo + hi)
            P = P + gamma * (S - P)
            mu_p = P.sum(axis=0)
            f = self.objective(mu_p)
        return P, mu_p, f, gap, k


def shifted_renyi_discrete(alpha: float, mu: DiscreteDist, nu: DiscreteDist, z: float,
                           *, full: bool = False):
    """Shifted Rényi divergence ``inf { D_alpha(mu' || nu) : W_inf(mu, mu') <= z }``.

    Only ``mu'`` supported on the atoms of ``nu`` can be finite, so the
    infimum is a convex program over couplings between the atoms of ``mu``
    and of ``nu`` with displacement at most ``z``. It is solved with an
    interior-point conic solver, polished by projected gradient, and
    certified by the Frank-Wolfe duality gap, which bounds the objective's
    distance to optimal (typically below 1e-8). Frank-Wolfe takes over if the
    polish stalls.

    Returns the value, or a :class:`ShiftedResult` when ``full`` is set.

    Raises
    ------
    OracleScaleExceeded
        If either support has more than 16 atoms.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if z < 0:
        raise ValueError("shift must be nonnegative")
    if len(mu) > MAX_ORACLE_SUPPORT or len(nu) > MAX_ORACLE_SUPPORT:
        raise OracleScaleExceeded(
            f"supports of size {len(mu)} and {len(nu)}; at most {MAX_ORACLE_SUPPORT} allowed")
    keep = mu.weights > 0
    xs, mass = mu.support[keep], mu.weights[keep]
    pos = nu.weights > 0
    ys, q = nu.support[pos], nu.weights[pos]
    dist = np.abs(xs[:, None] - ys[None, :])
    allowed = dist <= z * (1.0 + 1e-12) + 1e-15
    if not np.all(allowed.any(axis=1)):
        res = ShiftedResult(INF, None, None, 0.0, 0)
        return res if full else INF
    prog = _ShiftedProgram(alpha, mass, allowed, q)
    if all(r.size == 1 for r in prog.rows):
        # the coupling is forced
        P = np.zeros(allowed.shape)
        for i, cols in enumerate(prog.rows):
            P[i, cols[0]] = mass[i]
        mu_p, gap, it = P.sum(axis=0), 0.0, 0
    else:
        P, mu_p, _, gap, it = prog.solve()
    value = renyi_vectors(alpha, mu_p, q)
    if full:
        return ShiftedResult(value, mu_p, P, gap, it)
    return value


def translation_shift_upper_bound(alpha: float, g0: Gaussian1D, g1: Gaussian1D,
                                  z: float) -> float:
    """Upper bound on the shifted divergence of two Gaussians by translating ``g0``.

    Moves the mean of ``g0`` up to ``z`` towards that of ``g1``. This is a
    feasible point of the infimum, not a claim of optimality.
    """
    gap = g1.mean - g0.mean
    move = math.copysign(min(abs(gap), z), gap)
    return renyi_gaussian(alpha, Gaussian1D(g0.mean + move, g0.variance), g1)


# --- empirical ----------------------------------------------------------------

DEFAULT_BINS = 64


def histogram_pair(samples_a, samples_b, bins: int = DEFAULT_BINS):
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample set")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    p = np.histogram(a, edges)[0] / a.size
    q = np.histogram(b, edges)[0] / b.size
    return p, q


def empirical_tv(samples_a, samples_b, bins: int = DEFAULT_BINS) -> float:
    """Half the L1 distance between equal-width histograms over the pooled range."""
    p, q = histogram_pair(samples_a, samples_b, bins)
    return 0.5 * float(np.abs(p - q).sum())


def empirical_tv_stderr(samples_a, samples_b, bins: int = DEFAULT_BINS) -> float:
    """Delta-method standard error of :func:`empirical_tv`."""
    a = np.asarray(samples_a).ravel()
    b = np.asarray(samples_b).ravel()
    p, q = histogram_pair(a, b, bins)
    s = np.sign(p - q)
    var = ((np.sum(s * s * p) - np.sum(s * p) ** 2) / a.size
           + (np.sum(s * s * q) - np.sum(s * q) ** 2) / b.size) / 4.0
    return math.sqrt(max(var, 0.0))
