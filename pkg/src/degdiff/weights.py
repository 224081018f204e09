"""Weight densities and numerical checks of their class conditions.

A weight is an evaluable density rho on R^d.  The checkers sample ball or
cube averages by quadrature and report worst-case ratios: the Muckenhoupt
A2 product, the doubling ratio of m = rho dx, the exponential-BMO cube
average, and weighted Poincare-type ratios.  They report fitted constants;
the class conditions themselves only assert that *some* finite constant
exists, so pass/fail thresholds are configuration, not theorems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (DegenerateTestFunctionError, DivergentIntegralError,
                     SingularPointError)
from .geometry import Ball, Box, Cube, unit_ball_volume
from .quadrature import QuadResult, integrate_ball, integrate_cube

ScalarField = Callable[[np.ndarray], np.ndarray]

A2_THRESHOLD_DEFAULT = 1e3
RADIUS_RANGE_DEFAULT = (1e-3, 10.0)


@dataclass(frozen=True)
class QuadConfig:
    """Knobs for the Monte-Carlo ball/cube quadratures."""

    rtol: float = 1e-2
    n0: int = 8192
    n_max: int = 1 << 21
    seed: Optional[int] = None

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class Weight:
    """Weight density rho(x) with class metadata.

    kind is one of 'power' (rho = ||x||^alpha), 'exponential' (rho = e^phi),
    'product' (bounded multiplier times a base weight) or 'custom'.
    """

    kind: str
    dim: int
    alpha: Optional[float] = None
    phi: Optional[ScalarField] = None
    multiplier: Optional[ScalarField] = None
    multiplier_bound: float = 1.0
    base: Optional["Weight"] = None
    density: Optional[ScalarField] = None
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("weights are defined on R^d with d >= 2")
        if self.kind == "power":
            if self.alpha is None or not self.alpha > -self.dim:
                raise ValueError(
                    f"power weight needs alpha > -d for local integrability "
                    f"(got alpha={self.alpha}, d={self.dim})")
        elif self.kind == "exponential":
            if self.phi is None:
                raise ValueError("exponential weight needs a scalar field phi")
        elif self.kind == "product":
            if self.base is None or self.multiplier is None:
                raise ValueError("product weight needs a base weight and multiplier")
            if self.multiplier_bound < 1.0:
                raise ValueError("multiplier bound c must be >= 1")
        elif self.kind == "custom":
            if self.density is None:
                raise ValueError("custom weight needs a density callable")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @property
    def singular_at_origin(self) -> bool:
        """True when rho degenerates (0 or infinity) at x = 0."""
        if self.kind == "power":
            return self.alpha != 0.0
        if self.kind == "product":
            return self.base.singular_at_origin
        return False

    @property
    def rho_blows_up_at_origin(self) -> bool:
        """rho itself is unbounded near 0 (needs shell quadrature)."""
        if self.kind == "power":
            return self.alpha < 0.0
        if self.kind == "product":
            return self.base.rho_blows_up_at_origin
        return self.kind == "custom"  # unknown: be safe

    @property
    def inv_rho_blows_up_at_origin(self) -> bool:
        """1/rho is unbounded near 0 (needs shell quadrature)."""
        if self.kind == "power":
            return self.alpha > 0.0
        if self.kind == "product":
            return self.base.inv_rho_blows_up_at_origin
        return self.kind == "custom"

    def __call__(self, x) -> np.ndarray:
        """Evaluate rho at one point (d,) or a batch (n, d)."""
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        vals = self._eval_batch(pts)
        return float(vals[0]) if single else vals

    def _eval_batch(self, pts: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            r = np.linalg.norm(pts, axis=1)
            if self.alpha < 0 and np.any(r == 0.0):
                raise SingularPointError(
                    "power weight with alpha < 0 evaluated at the origin")
            with np.errstate(divide="ignore"):
                return r ** self.alpha
        if self.kind == "exponential":
            return np.exp(np.asarray(self.phi(pts), dtype=float))
        if self.kind == "product":
            m = np.asarray(self.multiplier(pts), dtype=float)
            c = self.multiplier_bound
            if np.any(m < 1.0 / c - 1e-12) or np.any(m > c + 1e-12):
                raise ValueError(
                    f"product multiplier left its declared band [1/{c}, {c}]")
            return m * self.base._eval_batch(pts)
        vals = np.asarray(self.density(pts), dtype=float)
        if np.any(vals < 0.0):
            raise ValueError("custom weight density returned negative values")
        return vals


def power_weight(alpha: float, dim: int) -> Weight:
    return Weight(kind="power", dim=dim, alpha=alpha,
                  label=f"||x||^{alpha}")


def exponential_weight(phi: ScalarField, dim: int, label: str = "e^phi") -> Weight:
    return Weight(kind="exponential", dim=dim, phi=phi, label=label)


def product_weight(multiplier: ScalarField, bound: float, base: Weight) -> Weight:
    return Weight(kind="product", dim=base.dim, multiplier=multiplier,
                  multiplier_bound=bound, base=base,
                  label=f"phi*({base.label})")


def custom_weight(density: ScalarField, dim: int,
                  gradient: Optional[Callable] = None,
                  label: str = "custom") -> Weight:
    return Weight(kind="custom", dim=dim, density=density, gradient=gradient,
                  label=label)


def eval_weight(w: Weight, x) -> float:
    """Pointwise rho(x); errors at the singular point of a negative power."""
    return w(x)


@dataclass(frozen=True)
class WeightClassReport:
    """Numeric evidence for one weight-class condition on sampled regions."""

    condition: str
    weight: str
    region: str
    worst_ratio: float
    n_samples: int
    threshold: float
    passed: bool
    rtol: float
    seed: Optional[int] = None
    n_divergent: int = 0
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "weight": self.weight,
            "region": self.region,
            "worst_ratio": self.worst_ratio,
            "n_samples": self.n_samples,
            "threshold": self.threshold,
            "pass": self.passed,
            "rtol": self.rtol,
            "seed": self.seed,
            "n_divergent": self.n_divergent,
            "notes": self.notes,
        }


def a2_ratio(w: Weight, ball: Ball, quad: QuadConfig = QuadConfig()) -> float:
    """The Muckenhoupt product (avg_B rho) * (avg_B rho^{-1}).

    >= 1 up to quadrature error by Jensen.  Raises DivergentIntegralError
    when either average fails the quadrature convergence test, which signals
    local non-integrability of rho or rho^{-1} on the ball.
    """
    rng = quad.rng()

    def inv(x):
        vals = w._eval_batch(x)
        with np.errstate(divide="ignore"):
            return 1.0 / vals

    vol = unit_ball_volume(ball.dim) * ball.radius ** ball.dim
    i_rho = integrate_ball(w._eval_batch, ball, rng, rtol=quad.rtol,
                           n0=quad.n0, n_max=quad.n_max,
                           origin_singular=w.rho_blows_up_at_origin)
    i_inv = integrate_ball(inv, ball, rng, rtol=quad.rtol,
                           n0=quad.n0, n_max=quad.n_max,
                           origin_singular=w.inv_rho_blows_up_at_origin)
    return (i_rho.value / vol) * (i_inv.value / vol)


def doubling_ratio(w: Weight, ball: Ball, quad: QuadConfig = QuadConfig()) -> float:
    """m(B_2r(x)) / m(B_r(x)) with m = rho dx."""
    rng = quad.rng()
    sing = w.rho_blows_up_at_origin
    small = integrate_ball(w._eval_batch, ball, rng, rtol=quad.rtol,
                           n0=quad.n0, n_max=quad.n_max, origin_singular=sing)
    big = integrate_ball(w._eval_batch, ball.scaled(2.0), rng, rtol=quad.rtol,
                         n0=quad.n0, n_max=quad.n_max, origin_singular=sing)
    return big.value / small.value


def ball_mass(w: Weight, ball: Ball, quad: QuadConfig = QuadConfig()) -> QuadResult:
    """m(B) = integral of rho over the ball."""
    return integrate_ball(w._eval_batch, ball, quad.rng(), rtol=quad.rtol,
                          n0=quad.n0, n_max=quad.n_max,
                          origin_singular=w.rho_blows_up_at_origin)


def bmo_exp_avg(phi: ScalarField, cube: Cube,
                quad: QuadConfig = QuadConfig()) -> float:
    """Cube average of e^{|phi - phi_Q|}, phi_Q the cube average of phi.

    Uniformly bounded averages over all cubes are the exponential-BMO
    condition under which e^phi is an A2 weight.
    """
    rng = quad.rng()
    i_phi = integrate_cube(lambda x: np.asarray(phi(x), dtype=float), cube, rng,
                           rtol=quad.rtol, n0=quad.n0, n_max=quad.n_max,
                           origin_singular=True)
    phi_q = i_phi.value / cube.volume

    def integrand(x):
        return np.exp(np.abs(np.asarray(phi(x), dtype=float) - phi_q))

    i_exp = integrate_cube(integrand, cube, rng, rtol=quad.rtol, n0=quad.n0,
                           n_max=quad.n_max, origin_singular=True)
    return i_exp.value / cube.volume


def poincare_ratio(w: Weight, ball: Ball, u: ScalarField,
                   grad_u: Callable[[np.ndarray], np.ndarray],
                   quad: QuadConfig = QuadConfig()) -> float:
    """Sampled lower bound on the weighted Poincare constant on one ball:

        [ int_B |u - u_B|^2 dm ] / [ r^2 int_B ||grad u||^2 dm ].

    Scale- and shift-invariant in u.  Raises DegenerateTestFunctionError
    when the gradient energy vanishes.
    """
    rng = quad.rng()

    def u_rho(x):
        return np.asarray(u(x), dtype=float) * w._eval_batch(x)

    def grad_energy(x):
        g = np.asarray(grad_u(x), dtype=float)
        return np.sum(g * g, axis=1) * w._eval_batch(x)

    sing = w.rho_blows_up_at_origin
    den = integrate_ball(grad_energy, ball, rng, rtol=quad.rtol, n0=quad.n0,
                         n_max=quad.n_max, origin_singular=sing)
    if den.value <= 0.0:
        raise DegenerateTestFunctionError(
            "test function has zero gradient energy on the ball")
    mass = integrate_ball(w._eval_batch, ball, rng, rtol=quad.rtol, n0=quad.n0,
                          n_max=quad.n_max, origin_singular=sing)
    mean_u = integrate_ball(u_rho, ball, rng, rtol=quad.rtol, n0=quad.n0,
                            n_max=quad.n_max,
                            origin_singular=sing).value / mass.value

    def dev(x):
        du = np.asarray(u(x), dtype=float) - mean_u
        return du * du * w._eval_batch(x)

    num = integrate_ball(dev, ball, rng, rtol=quad.rtol, n0=quad.n0,
                         n_max=quad.n_max, origin_singular=sing)
    return num.value / (ball.radius**2 * den.value)


def mean_deviation(samples, w: Weight, reference="own-mean") -> float:
    """Discrete weighted mean-square deviation about a reference value.

    samples is (points, values) arrays or a list of (point, value) pairs.
    With reference="own-mean" the weighted mean is used, which minimizes the
    deviation; substituting any other reference c adds exactly
    (mean - c)^2 -- the averaging identity behind nested-mean comparisons.
    """
    if isinstance(samples, tuple) and len(samples) == 2:
        xs, us = samples
    else:
        if len(samples) == 0:
            raise ValueError("sample list must be nonempty")
        xs = np.stack([np.asarray(p, dtype=float) for p, _ in samples])
        us = np.array([v for _, v in samples], dtype=float)
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    if xs.shape[0] == 0:
        raise ValueError("sample list must be nonempty")
    rho = w._eval_batch(xs)
    total = float(np.sum(rho))
    if reference == "own-mean":
        ref = float(np.dot(rho, us)) / total
    else:
        ref = float(reference)
    return float(np.dot(rho, (us - ref) ** 2)) / total


def _sample_balls(region: Box, n_balls: int, radius_range, rng) -> list[Ball]:
    lo, hi = radius_range
    centers = region.lo + (region.hi - region.lo) * rng.random((n_balls, region.dim))
    radii = np.exp(np.log(lo) + (np.log(hi) - np.log(lo)) * rng.random(n_balls))
    return [Ball(c, float(r)) for c, r in zip(centers, radii)]


def check_a2(w: Weight, region: Box, n_balls: int, seed: int,
             radius_range=RADIUS_RANGE_DEFAULT,
             threshold: float = A2_THRESHOLD_DEFAULT,
             quad: QuadConfig = QuadConfig()) -> WeightClassReport:
    """Sample balls in the region and report the worst A2 product.

    Ball centers are uniform in the region, radii log-uniform in
    radius_range.  A divergent ball average (non-integrable rho or rho^{-1})
    is recorded as an infinite ratio, so it fails any finite threshold.
    """
    if n_balls < 1:
        raise ValueError("n_balls must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    n_div = 0
    for i, ball in enumerate(_sample_balls(region, n_balls, radius_range, rng)):
        q = QuadConfig(rtol=quad.rtol, n0=quad.n0, n_max=quad.n_max,
                       seed=rng.integers(1 << 62))
        try:
            ratio = a2_ratio(w, ball, q)
        except DivergentIntegralError:
            ratio = np.inf
            n_div += 1
        except SingularPointError:
            ratio = np.inf
            n_div += 1
        worst = max(worst, ratio)
    return WeightClassReport(
        condition="A2", weight=w.label or w.kind,
        region=f"box {region.lo.tolist()}..{region.hi.tolist()}, "
               f"radii [{radius_range[0]:g}, {radius_range[1]:g}]",
        worst_ratio=worst, n_samples=n_balls, threshold=threshold,
        passed=bool(worst <= threshold), rtol=quad.rtol, seed=seed,
        n_divergent=n_div)


def check_doubling(w: Weight, region: Box, n_balls: int, seed: int,
                   radius_range=RADIUS_RANGE_DEFAULT,
                   threshold: Optional[float] = None,
                   quad: QuadConfig = QuadConfig()) -> WeightClassReport:
    """Sampled worst doubling ratio m(B_2r)/m(B_r) against a threshold.

    Default threshold 2^(d + |alpha| + 1) for power weights, 2^(d+2)
    otherwise; these are configuration defaults, not proven constants.
    """
    if threshold is None:
        bump = abs(w.alpha) if w.kind == "power" and w.alpha is not None else 1.0
        threshold = 2.0 ** (w.dim + bump + 1.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    n_div = 0
    for ball in _sample_balls(region, n_balls, radius_range, rng):
        q = QuadConfig(rtol=quad.rtol, n0=quad.n0, n_max=quad.n_max,
                       seed=rng.integers(1 << 62))
        try:
            worst = max(worst, doubling_ratio(w, ball, q))
        except (DivergentIntegralError, SingularPointError):
            worst = np.inf
            n_div += 1
    return WeightClassReport(
        condition="doubling", weight=w.label or w.kind,
        region=f"box {region.lo.tolist()}..{region.hi.tolist()}, "
               f"radii [{radius_range[0]:g}, {radius_range[1]:g}]",
        worst_ratio=worst, n_samples=n_balls, threshold=threshold,
        passed=bool(worst <= threshold), rtol=quad.rtol, seed=seed,
        n_divergent=n_div)
