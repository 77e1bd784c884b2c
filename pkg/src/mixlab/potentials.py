"""Potentials with declared regularity and the gradient-step contraction.

Every supported component is a separable quadratic
``f(x) = 0.5 * sum_k h_k (x_k - c_k)^2`` with nonnegative curvatures ``h``;
the zero potential is the special case ``h = 0``. Keeping the family closed
form means gradients are exact and the declared ``(m, M)`` are exact too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import DimensionMismatch


class StepsizeTooLarge(ValueError):
    """The stepsize exceeds ``2/M`` so the gradient step may expand distances."""


def _frozen(a) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(a, dtype=float)).copy()
    arr.setflags(write=False)
    return arr


class _Quadratic:
    curvature: np.ndarray
    center: np.ndarray

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def m(self) -> float:
        return float(self.curvature.min())

    @property
    def M(self) -> float:
        return float(self.curvature.max())

    def _points(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 and self.dim == 1:
            arr = arr.reshape(1)
        if arr.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"point has trailing dimension {arr.shape[-1]}, potential has {self.dim}")
        return arr

    def value(self, x):
        d = self._points(x) - self.center
        return 0.5 * np.sum(self.curvature * d * d, axis=-1)

    def gradient(self, x) -> np.ndarray:
        return self.curvature * (self._points(x) - self.center)


@dataclass(frozen=True, eq=False)
class Zero(_Quadratic):
    """The identically zero potential (convex, 0-smooth)."""

    dim_: int = 1

    def __post_init__(self):
        object.__setattr__(self, "curvature", _frozen(np.zeros(self.dim_)))
        object.__setattr__(self, "center", _frozen(np.zeros(self.dim_)))

    def __repr__(self):
        return f"Zero(dim={self.dim_})"


@dataclass(frozen=True, eq=False)
class IsotropicQuadratic(_Quadratic):
    """``(lam/2) * ||x - center||^2``; strongly convex and smooth with m = M = lam."""

    lam: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("curvature must be >= 0")
        c = _frozen(self.center)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "curvature", _frozen(np.full(c.shape, float(self.lam))))

    def __repr__(self):
        return f"IsotropicQuadratic(lam={self.lam}, center={self.center.tolist()})"


@dataclass(frozen=True, eq=False)
class DiagonalQuadratic(_Quadratic):
    """Axis-aligned quadratic; m and M are the extreme curvatures."""

    curvature: np.ndarray
    center: np.ndarray = None

    def __post_init__(self):
        h = _frozen(self.curvature)
        if np.any(h < 0):
            raise ValueError("curvatures must be >= 0")
        c = _frozen(np.zeros_like(h) if self.center is None else self.center)
        if c.shape != h.shape:
            raise DimensionMismatch("curvature and center dimensions differ")
        object.__setattr__(self, "curvature", h)
        object.__setattr__(self, "center", c)

    def __repr__(self):
        return (f"DiagonalQuadratic(curvature={self.curvature.tolist()}, "
                f"center={self.center.tolist()})")


PotentialComponent = _Quadratic


class FiniteSumPotential:
    """A finite sum ``f = sum_i f_i`` of quadratic components.

    The aggregate ``m`` / ``M`` are the min / max over components: each
    component on its own must be m-strongly convex and M-smooth for a
    minibatch gradient step to contract.
    """

    def __init__(self, components: Sequence[_Quadratic]):
        components = list(components)
        if not components:
            raise ValueError("need at least one component")
        dims = {p.dim for p in components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components have mixed dimensions {sorted(dims)}")
        self.components = tuple(components)
        self.dim = dims.pop()
        # stacked (n, d) parameters for vectorized evaluation
        self._curv = np.stack([p.curvature for p in components])
        self._cent = np.stack([p.center for p in components])
        self.is_zero = not np.any(self._curv)

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        return f"FiniteSumPotential({list(self.components)!r})"

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def m(self) -> float:
        return min(p.m for p in self.components)

    @property
    def M(self) -> float:
        return max(p.M for p in self.components)

    def value(self, x):
        return sum(p.value(x) for p in self.components)

    def gradient(self, x) -> np.ndarray:
        """Gradient of the full sum (not averaged)."""
        return sum(p.gradient(x) for p in self.components)

    def batch_gradients(self, x: np.ndarray, batches: np.ndarray) -> np.ndarray:
        """Row-wise minibatch mean gradients.

        ``x`` has shape ``(k, d)`` and ``batches`` integer shape ``(k, b)``;
        row ``r`` averages the gradients of components ``batches[r]`` at
        ``x[r]``. Summation runs sequentially over the batch axis so the
        result for a row does not depend on how many rows are stacked.
        """
        if self.is_zero:
            return np.zeros_like(x)
        b = batches.shape[1]
        total = self._curv[batches[:, 0]] * (x - self._cent[batches[:, 0]])
        for k in range(1, b):
            idx = batches[:, k]
            total = total + self._curv[idx] * (x - self._cent[idx])
        return total / b


def _check_batch(F: FiniteSumPotential, batch) -> np.ndarray:
    idx = np.asarray(list(batch) if not isinstance(batch, np.ndarray) else batch, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("batch must be a nonempty set of component indices")
    if idx.min() < 0 or idx.max() >= F.n:
        raise IndexError(f"batch indices must lie in [0, {F.n - 1}]")
    return idx


def _rows(F: FiniteSumPotential, x) -> tuple[np.ndarray, tuple]:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        if F.dim != 1:
            raise DimensionMismatch(f"scalar given for a {F.dim}-dimensional potential")
        return pts.reshape(1, 1), ()
    if pts.shape[-1] != F.dim:
        raise DimensionMismatch(f"point has dimension {pts.shape[-1]}, potential has {F.dim}")
    return pts.reshape(-1, F.dim), pts.shape


def minibatch_gradient(F: FiniteSumPotential, batch, x):
    """Mean of component gradients over ``batch`` (0-based indices) at ``x``.

    Scalars in, scalars out for one-dimensional potentials.
    """
    idx = _check_batch(F, batch)
    rows, shape = _rows(F, x)
    g = F.batch_gradients(rows, np.broadcast_to(idx, (rows.shape[0], idx.size)))
    return float(g[0, 0]) if shape == () else g.reshape(shape)


def contraction_coefficient(m: float, M: float, eta: float) -> float:
    """Lipschitz constant ``max(|1 - eta m|, |1 - eta M|)`` of a gradient step.

    Raises
    ------
    StepsizeTooLarge
        If ``M > 0`` and ``eta > 2/M``.
    """
    if not 0 <= m <= M:
        raise ValueError(f"need 0 <= m <= M, got m={m}, M={M}")
    if eta <= 0:
        raise ValueError("stepsize must be positive")
    if M == 0:
        return 1.0
    if eta * M > 2:
        raise StepsizeTooLarge(f"eta={eta} exceeds 2/M={2 / M}")
    return max(abs(1 - eta * m), abs(1 - eta * M))


def gradient_step(F: FiniteSumPotential, batch, eta: float, x):
    """``x - eta * minibatch_gradient(F, batch, x)``."""
    g = minibatch_gradient(F, batch, x)
    if np.ndim(x) == 0:
        return float(x) - eta * g
    return np.asarray(x, dtype=float) - eta * g


# --- config (de)serialization -------------------------------------------------

def component_from_dict(data: dict) -> _Quadratic:
    kind = data.get("kind")
    if kind == "zero":
        return Zero(int(data.get("dim", 1)))
    if kind == "quadratic":
        return IsotropicQuadratic(float(data["lambda"]), data.get("center", [0.0]))
    if kind == "diagonal_quadratic":
        return DiagonalQuadratic(data["curvature"], data.get("center"))
    raise ValueError(f"unknown potential kind {kind!r}")


def component_to_dict(p: _Quadratic) -> dict:
    if isinstance(p, Zero):
        return {"kind": "zero", "dim": p.dim}
    if isinstance(p, IsotropicQuadratic):
        return {"kind": "quadratic", "lambda": float(p.lam), "center": p.center.tolist()}
    return {"kind": "diagonal_quadratic", "curvature": p.curvature.tolist(),
            "center": p.center.tolist()}


def potential_from_dict(data: dict) -> FiniteSumPotential:
    return FiniteSumPotential([component_from_dict(c) for c in data["components"]])


def potential_to_dict(F: FiniteSumPotential) -> dict:
    return {"components": [component_to_dict(p) for p in F.components]}
