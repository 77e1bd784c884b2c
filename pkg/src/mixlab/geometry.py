"""Convex bodies with closed-form Euclidean projections."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np


class DimensionMismatch(ValueError):
    """Raised when a point does not live in the body's ambient space."""


class _Infinite:
    """Tagged sentinel for an unbounded diameter.

    Deliberately not a float: it refuses arithmetic so that an unbounded
    diameter can never silently leak into a bound calculation.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __reduce__(self):
        return (_Infinite, ())


INFINITE = _Infinite()

Length = Union[float, _Infinite]


def _as_vector(v) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WholeSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def bounded(self) -> bool:
        return False


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"Interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return 1

    @property
    def bounded(self) -> bool:
        return True


@dataclass(frozen=True)
class Box:
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)

    def __post_init__(self):
        lo, hi = _as_vector(self.lo), _as_vector(self.hi)
        if lo.shape != hi.shape:
            raise DimensionMismatch("Box corners have different dimensions")
        if np.any(lo > hi):
            raise ValueError("Box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi)))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def bounded(self) -> bool:
        return True


@dataclass(frozen=True)
class Ball:
    center: np.ndarray = field(compare=False)
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center))
        if self.radius < 0:
            raise ValueError("Ball radius must be >= 0")

    def __eq__(self, other):
        return (isinstance(other, Ball) and np.array_equal(self.center, other.center)
                and self.radius == other.radius)

    def __hash__(self):
        return hash((tuple(self.center), self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def bounded(self) -> bool:
        return True


ConvexBody = Union[WholeSpace, Interval, Box, Ball]


def _check_points(K: ConvexBody, x) -> tuple[np.ndarray, bool]:
    """Return points as an array with trailing axis ``dim``.

    Scalars are accepted for one-dimensional bodies; the flag records whether
    the caller passed a bare scalar so the result can be unwrapped.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if K.dim != 1:
            raise DimensionMismatch(f"scalar given for a {K.dim}-dimensional body")
        return arr.reshape(1), True
    if arr.shape[-1] != K.dim:
        raise DimensionMismatch(
            f"point has trailing dimension {arr.shape[-1]}, body has {K.dim}")
    return arr, False


def project(K: ConvexBody, x):
    """Euclidean projection of ``x`` onto ``K``.

    ``x`` may be a single point of shape ``(d,)`` or a stack of points of
    shape ``(..., d)``; the projection is applied row-wise. One-dimensional
    bodies also accept bare scalars.
    """
    pts, scalar = _check_points(K, x)
    if isinstance(K, WholeSpace):
        out = pts.copy()
    elif isinstance(K, Interval):
        out = np.clip(pts, K.lo, K.hi)
    elif isinstance(K, Box):
        out = np.clip(pts, K.lo, K.hi)
    elif isinstance(K, Ball):
        offset = pts - K.center
        norm = np.linalg.norm(offset, axis=-1, keepdims=True)
        # points already inside keep their exact coordinates; the ulp slack makes
        # projection idempotent, since a rescaled point can land just outside;
        # the rounding of center + offset scales with |center|
        slack = 4.0 * np.finfo(float).eps * (K.radius + np.abs(K.center).max())
        inside = norm <= K.radius + slack
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = K.center + offset * (K.radius / norm)
        out = np.where(inside, pts, scaled)
    else:
        raise TypeError(f"unsupported body {K!r}")
    return float(out[0]) if scalar else out


def contains(K: ConvexBody, x, tol: float = 1e-12) -> bool:
    """True when every given point lies in ``K`` up to ``tol``."""
    pts, _ = _check_points(K, x)
    if isinstance(K, WholeSpace):
        return bool(np.all(np.isfinite(pts)))
    dist = np.linalg.norm(pts - project(K, pts), axis=-1)
    return bool(np.all(dist <= tol))


def diameter(K: ConvexBody) -> Length:
    """Largest distance between two points of ``K``; ``INFINITE`` if unbounded."""
    if isinstance(K, WholeSpace):
        return INFINITE
    if isinstance(K, Interval):
        return float(K.hi - K.lo)
    if isinstance(K, Box):
        return float(np.linalg.norm(K.hi - K.lo))
    if isinstance(K, Ball):
        return 2.0 * float(K.radius)
    raise TypeError(f"unsupported body {K!r}")


def center(K: ConvexBody) -> np.ndarray:
    """A canonical interior point (origin for the whole space)."""
    if isinstance(K, WholeSpace):
        return np.zeros(K.dim)
    if isinstance(K, Interval):
        return np.array([0.5 * (K.lo + K.hi)])
    if isinstance(K, Box):
        return 0.5 * (K.lo + K.hi)
    return K.center.copy()


def corner(K: ConvexBody) -> np.ndarray:
    """An extreme point used as the worst-case initialization."""
    if isinstance(K, Interval):
        return np.array([float(K.lo)])
    if isinstance(K, Box):
        return K.lo.copy()
    if isinstance(K, Ball):
        out = K.center.copy()
        out[0] -= K.radius
        return out
    raise ValueError("the whole space has no corner; give an explicit init")


# --- config (de)serialization -------------------------------------------------

def body_from_dict(data: dict) -> ConvexBody:
    kind = data.get("kind")
    if kind == "interval":
        return Interval(float(data["lo"]), float(data["hi"]))
    if kind == "box":
        return Box(data["lo"], data["hi"])
    if kind == "ball":
        return Ball(data["center"], float(data["radius"]))
    if kind in ("whole_space", "wholespace", "rd"):
        return WholeSpace(int(data["dim"]))
    raise ValueError(f"unknown body kind {kind!r}")


def body_to_dict(K: ConvexBody) -> dict:
    if isinstance(K, Interval):
        return {"kind": "interval", "lo": K.lo, "hi": K.hi}
    if isinstance(K, Box):
        return {"kind": "box", "lo": K.lo.tolist(), "hi": K.hi.tolist()}
    if isinstance(K, Ball):
        return {"kind": "ball", "center": K.center.tolist(), "radius": K.radius}
    return {"kind": "whole_space", "dim": K.dim}
