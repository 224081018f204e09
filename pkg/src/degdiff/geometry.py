"""Regions used by the quadrature routines and the class checkers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_point(x, dim: int | None = None) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError("a point must be a 1-d coordinate array")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"expected a point in R^{dim}, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Ball:
    """Euclidean ball {y : ||center - y|| < radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.radius > 0:
            raise ValueError("radius must be > 0")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains_origin(self) -> bool:
        return float(np.linalg.norm(self.center)) < self.radius

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class Cube:
    """Axis-aligned cube with given center and side length."""

    center: np.ndarray
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not self.side > 0:
            raise ValueError("side must be > 0")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    def contains_origin(self) -> bool:
        return bool(np.all(np.abs(self.center) < self.side / 2.0))

    def half_diagonal(self) -> float:
        return self.side * np.sqrt(self.dim) / 2.0

    def indicator(self, x: np.ndarray) -> np.ndarray:
        return np.all(np.abs(x - self.center) < self.side / 2.0, axis=-1)


@dataclass(frozen=True)
class Annulus:
    """Spherical shell {y : r_inner < ||y|| < r_outer} around the origin."""

    r_inner: float
    r_outer: float
    dim: int = 3

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise ValueError("need 0 <= r_inner < r_outer")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_point(self.lo))
        object.__setattr__(self, "hi", _as_point(self.hi, self.lo.shape[0]))
        if not np.all(self.hi > self.lo):
            raise ValueError("box must have hi > lo on every axis")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def enclosing_radius(self, around: np.ndarray) -> float:
        corners = np.maximum(np.abs(self.lo - around), np.abs(self.hi - around))
        return float(np.linalg.norm(corners))

    def indicator(self, x: np.ndarray) -> np.ndarray:
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)


def unit_ball_volume(d: int) -> float:
    from scipy.special import gammaln

    return float(np.exp(d / 2.0 * np.log(np.pi) - gammaln(d / 2.0 + 1.0)))


def unit_sphere_area(d: int) -> float:
    """Surface measure of S^{d-1}."""
    return d * unit_ball_volume(d)
