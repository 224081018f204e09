"""Monte-Carlo and tensor-Gauss quadrature with convergence tests.

Ball and cube integrals use stratified Monte Carlo with a two-level test:
the estimate from half the samples must agree with the full estimate to the
declared relative tolerance, otherwise the sample size is doubled.  Regions
that contain (or nearly touch) the origin are integrated over a stack of
dyadic radial shells around the origin, so power-type singularities r^s with
s > -d are resolved shell by shell; a geometric tail test on the shell sums
both extrapolates the unsampled core and detects non-integrable behaviour.

Smooth integrals over boxes (Dirichlet-form energies, bump integrals) use
tensor-product Gauss-Legendre rules refined by node doubling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentIntegralError
from .geometry import Annulus, Ball, Box, Cube, unit_ball_volume

Integrand = Callable[[np.ndarray], np.ndarray]

# Dyadic shell stack depth: resolves radii down to 2^-30 ~ 1e-9 of the
# outer radius before the tail test takes over.
_N_SHELLS = 30
_TAIL_WINDOW = 6
_TAIL_DIVERGENT_RATIO = 0.995


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    n_samples: int
    converged: bool

    def __float__(self) -> float:
        return self.value


def _directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    z = rng.standard_normal((n, d))
    nrm = np.linalg.norm(z, axis=1, keepdims=True)
    nrm[nrm == 0.0] = 1.0
    return z / nrm


def _stratified_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    return (np.arange(n) + rng.random(n)) / n


def _two_level_gap(values: np.ndarray, total_weight: float) -> tuple[float, float]:
    """Full-sample estimate and its gap to the half-sample estimate.

    The half sample interleaves (every other value) so it stays balanced
    across radial strata.
    """
    full = float(np.mean(values)) * total_weight
    half = float(np.mean(values[::2])) * total_weight
    return full, abs(full - half)


def _sample_shell(rng, n: int, a: float, b: float, d: int) -> np.ndarray:
    """Volume-uniform points in the shell a <= ||x|| <= b (radially stratified)."""
    u = _stratified_uniform(rng, n)
    r = (a**d + u * (b**d - a**d)) ** (1.0 / d)
    return r[:, None] * _directions(rng, n, d)


def _shell_edges(r_in: float, r_out: float) -> np.ndarray:
    """Shell edges from r_out inward; dyadic when the stack reaches 0."""
    if r_in <= 0.0:
        return r_out * 2.0 ** (-np.arange(_N_SHELLS + 1, dtype=float))
    # Bounded inner radius: geometric spacing down to r_in resolves the
    # near-singular band without an infinite stack.
    k = max(4, int(np.ceil(np.log2(max(r_out / r_in, 2.0)))) + 2)
    return np.geomspace(r_out, r_in, k + 1)


def _origin_shell_pass(fn: Integrand, edges: np.ndarray, d: int,
                       rng: np.random.Generator, n_shell: int) -> np.ndarray:
    """One MC pass over the shell stack; returns per-shell integral estimates,
    row-stacked with the half-sample estimates for the two-level test."""
    v1 = unit_ball_volume(d)
    out = np.empty((2, len(edges) - 1))
    for k in range(len(edges) - 1):
        b, a = edges[k], edges[k + 1]
        x = _sample_shell(rng, n_shell, a, b, d)
        vals = np.asarray(fn(x), dtype=float)
        vol = v1 * (b**d - a**d)
        out[0, k] = np.mean(vals) * vol
        out[1, k] = np.mean(vals[::2]) * vol  # interleaved half sample
    return out


def _tail_close(shells: np.ndarray, rtol: float) -> tuple[float, bool]:
    """Extrapolate the unsampled core from the trailing geometric ratio.

    Returns (core estimate, divergent flag). Divergence is declared when the
    trailing shell masses stop decaying while still carrying weight relative
    to the running total.
    """
    total = float(np.sum(shells))
    tail = np.abs(shells[-_TAIL_WINDOW:])
    scale = max(abs(total), float(np.max(np.abs(shells))), 1e-300)
    if float(np.max(tail)) <= 1e-3 * rtol * scale:
        return 0.0, False
    prev = tail[:-1]
    ratios = tail[1:] / np.where(prev > 0, prev, np.inf)
    q = float(np.median(ratios))
    if not np.isfinite(q) or q >= _TAIL_DIVERGENT_RATIO:
        if float(np.sum(tail)) > rtol * scale:
            return 0.0, True
        return 0.0, False
    q = max(q, 0.0)
    core = float(shells[-1]) * q / (1.0 - q)
    return core, False


def integrate_origin_shells(fn: Integrand, r_in: float, r_out: float, dim: int,
                            rng: np.random.Generator, rtol: float = 1e-2,
                            n0: int = 8192, n_max: int = 1 << 21) -> QuadResult:
    """Integrate fn over the shell {r_in < ||x|| < r_out} around the origin.

    With r_in == 0 the integrand may blow up at 0 like r^s, s > -dim; the
    dyadic stack plus tail extrapolation handles it, and non-integrable
    behaviour raises DivergentIntegralError.
    """
    edges = _shell_edges(r_in, r_out)
    n_shell = max(64, n0 // (len(edges) - 1))
    while True:
        rows = _origin_shell_pass(fn, edges, dim, rng, n_shell)
        if not np.all(np.isfinite(rows)):
            raise DivergentIntegralError(
                "non-finite shell integral (integrand blows up faster than r^-d)")
        core = 0.0
        if r_in <= 0.0:
            core, diverged = _tail_close(rows[0], rtol)
            if diverged:
                raise DivergentIntegralError(
                    "shell masses do not decay toward the origin")
        full = float(np.sum(rows[0])) + core
        half = float(np.sum(rows[1])) + core
        gap = abs(full - half)
        n_total = n_shell * (len(edges) - 1)
        scale = max(abs(full), 1e-300)
        if gap <= rtol * scale:
            return QuadResult(full, gap, n_total, True)
        if n_total >= n_max:
            raise DivergentIntegralError(
                f"estimate failed to stabilize at rtol={rtol} "
                f"(gap {gap:.3g} at n={n_total})")
        n_shell *= 4


def integrate_ball(fn: Integrand, ball: Ball, rng: np.random.Generator,
                   rtol: float = 1e-2, n0: int = 8192,
                   n_max: int = 1 << 21,
                   origin_singular: bool = True) -> QuadResult:
    """Integrate fn over a ball.

    When the ball comes close to the origin and `origin_singular` is set, the
    integral runs over origin-centered shells restricted to the ball, so
    weights like ||x||^alpha are tamed near their singular point.
    """
    d = ball.dim
    dist = float(np.linalg.norm(ball.center))
    if origin_singular and dist < 1.5 * ball.radius:
        r_in = max(dist - ball.radius, 0.0)
        r_out = dist + ball.radius
        if dist == 0.0:
            return integrate_origin_shells(fn, 0.0, ball.radius, d, rng,
                                           rtol=rtol, n0=n0, n_max=n_max)
        c, r = ball.center, ball.radius

        def masked(x):
            inside = np.sum((x - c) ** 2, axis=1) < r * r
            out = np.zeros(x.shape[0])
            if np.any(inside):
                out[inside] = fn(x[inside])
            return out

        return integrate_origin_shells(masked, r_in, r_out, d, rng,
                                       rtol=rtol, n0=n0, n_max=n_max)

    vol = unit_ball_volume(d) * ball.radius**d
    n = n0
    while True:
        u = _stratified_uniform(rng, n)
        x = ball.center + (ball.radius * u ** (1.0 / d))[:, None] \
            * _directions(rng, n, d)
        vals = np.asarray(fn(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DivergentIntegralError("integrand not finite on the ball")
        full, gap = _two_level_gap(vals, vol)
        if gap <= rtol * max(abs(full), 1e-300):
            return QuadResult(full, gap, n, True)
        if n >= n_max:
            raise DivergentIntegralError(
                f"ball integral failed to stabilize at rtol={rtol}")
        n *= 4


def integrate_cube(fn: Integrand, cube: Cube, rng: np.random.Generator,
                   rtol: float = 1e-2, n0: int = 8192,
                   n_max: int = 1 << 21,
                   origin_singular: bool = False) -> QuadResult:
    """Integrate fn over an axis-aligned cube (MC, two-level test)."""
    if origin_singular and cube.contains_origin():
        ind = cube.indicator

        def masked(x):
            inside = ind(x)
            out = np.zeros(x.shape[0])
            if np.any(inside):
                out[inside] = fn(x[inside])
            return out

        return integrate_origin_shells(masked, 0.0, cube.half_diagonal(),
                                       cube.dim, rng, rtol=rtol, n0=n0,
                                       n_max=n_max)
    n = n0
    while True:
        x = cube.center + cube.side * (rng.random((n, cube.dim)) - 0.5)
        vals = np.asarray(fn(x), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DivergentIntegralError("integrand not finite on the cube")
        full, gap = _two_level_gap(vals, cube.volume)
        if gap <= rtol * max(abs(full), 1e-300):
            return QuadResult(full, gap, n, True)
        if n >= n_max:
            raise DivergentIntegralError(
                f"cube integral failed to stabilize at rtol={rtol}")
        n *= 4


def integrate_annulus(fn: Integrand, region: Annulus, rng: np.random.Generator,
                      rtol: float = 1e-2, n0: int = 8192,
                      n_max: int = 1 << 21) -> QuadResult:
    return integrate_origin_shells(fn, region.r_inner, region.r_outer,
                                   region.dim, rng, rtol=rtol, n0=n0,
                                   n_max=n_max)


def integrate_region(fn: Integrand, region, rng: np.random.Generator,
                     rtol: float = 1e-2, n0: int = 8192,
                     n_max: int = 1 << 21) -> QuadResult:
    """Dispatch on Ball / Cube / Annulus / Box."""
    if isinstance(region, Ball):
        return integrate_ball(fn, region, rng, rtol=rtol, n0=n0, n_max=n_max)
    if isinstance(region, Annulus):
        return integrate_annulus(fn, region, rng, rtol=rtol, n0=n0, n_max=n_max)
    if isinstance(region, Cube):
        return integrate_cube(fn, region, rng, rtol=rtol, n0=n0, n_max=n_max,
                              origin_singular=True)
    if isinstance(region, Box):
        box = region
        around = np.zeros(box.dim)
        if box.indicator(around[None, :])[0]:
            ind = box.indicator

            def masked(x):
                inside = ind(x)
                out = np.zeros(x.shape[0])
                if np.any(inside):
                    out[inside] = fn(x[inside])
                return out

            return integrate_origin_shells(masked, 0.0,
                                           box.enclosing_radius(around),
                                           box.dim, rng, rtol=rtol, n0=n0,
                                           n_max=n_max)
        n = n0
        while True:
            x = box.lo + (box.hi - box.lo) * rng.random((n, box.dim))
            vals = np.asarray(fn(x), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise DivergentIntegralError("integrand not finite on the box")
            full, gap = _two_level_gap(vals, box.volume)
            if gap <= rtol * max(abs(full), 1e-300):
                return QuadResult(full, gap, n, True)
            if n >= n_max:
                raise DivergentIntegralError(
                    f"box integral failed to stabilize at rtol={rtol}")
            n *= 4
    raise TypeError(f"unsupported region type {type(region).__name__}")


def radial_importance_integral(fn: Integrand, center: np.ndarray, radius: float,
                               dim: int, kernel_exponent: float,
                               rng: np.random.Generator,
                               rtol: float = 1e-3, n0: int = 1 << 15,
                               n_max: int = 1 << 22) -> QuadResult:
    """Integrate fn over B_radius(center) sampling the radius from a density
    proportional to r^{dim-1+kernel_exponent}.

    Exact variance cancellation when fn ~ ||x-center||^{kernel_exponent};
    used for Riesz kernels where kernel_exponent = eta - dim.
    """
    s = kernel_exponent
    if dim + s <= 0:
        raise DivergentIntegralError(
            f"kernel exponent {s} is not integrable in dimension {dim}")
    area = dim * unit_ball_volume(dim)
    const = area * radius ** (dim + s) / (dim + s)
    n = n0
    while True:
        u = _stratified_uniform(rng, n)
        r = radius * u ** (1.0 / (dim + s))
        x = center + r[:, None] * _directions(rng, n, dim)
        vals = np.asarray(fn(x), dtype=float) * r ** (-s)
        if not np.all(np.isfinite(vals)):
            raise DivergentIntegralError("integrand not finite under importance sampling")
        full, gap = _two_level_gap(vals, const)
        if gap <= rtol * max(abs(full), 1e-300):
            return QuadResult(full, gap, n, True)
        if n >= n_max:
            raise DivergentIntegralError(
                f"importance-sampled integral failed to stabilize at rtol={rtol}")
        n *= 4


def gauss_box(fn: Integrand, box: Box, rtol: float = 1e-8, n0: int = 8,
              max_doublings: int = 5) -> QuadResult:
    """Tensor-product Gauss-Legendre integral over a box, refined by node
    doubling until two successive levels agree to rtol."""
    d = box.dim
    history: list[tuple[float, int]] = []
    n = n0
    for _ in range(max_doublings + 1):
        nodes, weights = np.polynomial.legendre.leggauss(n)
        axes, waxes = [], []
        for i in range(d):
            half = (box.hi[i] - box.lo[i]) / 2.0
            mid = (box.hi[i] + box.lo[i]) / 2.0
            axes.append(mid + half * nodes)
            waxes.append(half * weights)
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = waxes[0]
        for i in range(1, d):
            w = np.multiply.outer(w, waxes[i])
        w = w.ravel()
        val = float(np.dot(w, np.asarray(fn(pts), dtype=float)))
        history.append((val, len(pts)))
        if len(history) >= 2:
            err = abs(history[-1][0] - history[-2][0])
            if err <= rtol * max(abs(val), 1e-300):
                return QuadResult(val, err, len(pts), True)
        n *= 2
    val, npts = history[-1]
    err = abs(history[-1][0] - history[-2][0]) if len(history) >= 2 else np.inf
    return QuadResult(val, err, npts, False)
