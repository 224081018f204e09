"""Exact reference results for the isotropic case A = ||x||^alpha I.

There the SDE reduces to dX = dW + (alpha/2) X/||X||^2 dt and the radial
part ||X|| is a Bessel process of dimension delta = d + alpha (so ||X||^2
is squared Bessel).  The transition law of the radius is the noncentral
chi-square family, which gives closed-form moments, densities and the
hits-the-origin dichotomy used as ground truth in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from . import rng as rngmod


@dataclass(frozen=True)
class BesselOracle:
    """Reference for the isotropic field with weight exponent alpha in R^d."""

    d: int
    alpha: float
    boundary: str = "reflect"  # behaviour at 0 when delta < 2

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not self.alpha > -self.d:
            raise ValueError("alpha must exceed -d")
        if self.boundary not in ("reflect", "absorb"):
            raise ValueError("boundary must be 'reflect' or 'absorb'")

    @property
    def delta(self) -> float:
        return self.d + self.alpha


def bessel_dimension(d: int, alpha: float) -> float:
    """Radial dimension delta = d + alpha of the isotropic case."""
    if not alpha > -d:
        raise ValueError("alpha must exceed -d")
    return float(d + alpha)


def _sq_norm(x0) -> float:
    arr = np.asarray(x0, dtype=float)
    if arr.ndim == 0:
        return float(arr) ** 2
    return float(np.sum(arr * arr))


def besq_mean(x0, t: float, oracle: BesselOracle) -> float:
    """E ||X_t||^2 = ||x0||^2 + delta * t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return _sq_norm(x0) + oracle.delta * t


def besq_variance(x0, t: float, oracle: BesselOracle) -> float:
    """Var ||X_t||^2 for the squared Bessel transition."""
    return 2.0 * oracle.delta * t * t + 4.0 * _sq_norm(x0) * t


def hits_origin(delta: float) -> bool:
    """Whether the radial process reaches 0: true exactly when delta < 2."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return delta < 2.0


def besq_radial_density(r, t: float, r0: float, oracle: BesselOracle):
    """Transition density of ||X_t|| at radius r given ||X_0|| = r0.

    Squared Bessel of dimension delta scaled by t is noncentral chi-square
    with df = delta and noncentrality r0^2/t.  The "reflect" convention is
    the standard (conservative) density; "absorb" kills at 0 for delta < 2
    and its density integrates to less than one by the hitting probability.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if np.any(r < 0):
        raise ValueError("radii must be >= 0")
    delta = oracle.delta
    if r0 == 0.0:
        out = 2.0 * r / t * stats.chi2.pdf(r * r / t, df=delta)
    elif oracle.boundary == "absorb" and delta < 2.0:
        nu = delta / 2.0 - 1.0
        y, y0 = r * r, r0 * r0
        z = np.sqrt(y0 * y) / t
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (0.5 / t) * (y / y0) ** (nu / 2.0) \
                * np.exp(-((np.sqrt(y0) - np.sqrt(y)) ** 2) / (2.0 * t)) \
                * special.ive(-nu, z)
        out = np.where(r > 0, 2.0 * r * q, 0.0)
    else:
        out = 2.0 * r / t * stats.ncx2.pdf(r * r / t, df=delta, nc=r0 * r0 / t)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(
            "radial density under/overflowed for these arguments")
    return float(out[0]) if scalar else out


def besq_radial_cdf(r, t: float, r0: float, oracle: BesselOracle):
    """CDF of ||X_t|| under the reflecting convention (for KS tests)."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(np.clip(r, 0.0, None))
    if r0 == 0.0:
        out = stats.chi2.cdf(r * r / t, df=oracle.delta)
    else:
        out = stats.ncx2.cdf(r * r / t, df=oracle.delta, nc=r0 * r0 / t)
    return float(out[0]) if scalar else out


@dataclass
class RadialSample:
    """Output of the 1-d radial reference simulation."""

    radii: np.ndarray
    delta: float
    r0: float
    t: float
    dt: float
    seed: int
    r_floor: float
    touched: np.ndarray            # bool per path: reached the floor
    first_touch_times: np.ndarray  # nan where never
    first_hit_times: dict          # radius -> (n,) times, nan where no hit
    n_steps: np.ndarray

    @property
    def touch_fraction(self) -> float:
        return float(np.mean(self.touched))

    def hit_fraction(self, radius: float) -> float:
        times = self.first_hit_times[float(radius)]
        return float(np.mean(np.isfinite(times)))


def radial_reference_sim(delta: float, r0: float, t: float, n: int, dt: float,
                         seed: int, r_floor: float = 1e-6,
                         hit_radii: tuple = (), theta: float = 0.1,
                         dt_min: float = 1e-8) -> RadialSample:
    """Simulate dR = dW + (delta-1)/(2R) dt with reflection at a floor.

    The signed pre-reflection value drives touch detection (a linear
    segment cannot jump across a level), so first passages to the recorded
    radii have no thin-target bias.  Streams follow the same chunked
    contract as the d-dimensional engine.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if r0 < 0 or t <= 0 or dt <= 0 or n < 1:
        raise ValueError("bad simulation parameters")
    hit_radii = tuple(sorted(set(float(x) for x in hit_radii)))
    coef = (delta - 1.0) / 2.0

    radii = np.empty(n)
    touched = np.zeros(n, dtype=bool)
    first_touch = np.full(n, np.nan)
    hits = {eps: np.full(n, np.nan) for eps in hit_radii}
    steps_all = np.zeros(n, dtype=np.int64)

    for c, (start, stop) in enumerate(rngmod.chunk_bounds(n)):
        width = stop - start
        gen = rngmod.stream_generator(seed, c)
        r = np.full(width, float(r0))
        tt = np.zeros(width)
        done = np.zeros(width, dtype=bool)
        steps = np.zeros(width, dtype=np.int64)
        c_touch = np.zeros(width, dtype=bool)
        c_touch_t = np.full(width, np.nan)
        c_hits = {eps: np.full(width, np.nan) for eps in hit_radii}
        for eps in hit_radii:
            if r0 <= eps:
                c_hits[eps][:] = 0.0
        if r0 <= r_floor:
            c_touch[:] = True
            c_touch_t[:] = 0.0

        while not np.all(done):
            z = gen.standard_normal(width)
            remaining = t - tt
            dt_prop = np.minimum(dt, remaining)
            with np.errstate(divide="ignore"):
                b = np.where(r > 0, coef / r, 0.0)
            cap = theta * np.maximum(r, np.sqrt(dt_min))
            with np.errstate(divide="ignore", invalid="ignore"):
                dt_cap = np.where(np.abs(b) > 0, cap / np.abs(b), np.inf)
            dt_used = np.minimum(dt_prop, np.maximum(dt_cap, dt_min))
            signed = r + np.sqrt(dt_used) * z + b * dt_used

            active = ~done
            # touch / hit detection on the signed segment
            low = np.minimum(r, signed)
            newly = active & ~c_touch & (low <= r_floor)
            if np.any(newly):
                s = (r[newly] - r_floor) / np.maximum(r[newly] - signed[newly],
                                                      1e-300)
                c_touch[newly] = True
                c_touch_t[newly] = tt[newly] + np.clip(s, 0.0, 1.0) \
                    * dt_used[newly]
            for eps in hit_radii:
                cand = active & np.isnan(c_hits[eps]) & (low <= eps)
                if np.any(cand):
                    s = np.where(r[cand] <= eps, 0.0,
                                 (r[cand] - eps)
                                 / np.maximum(r[cand] - signed[cand], 1e-300))
                    c_hits[eps][cand] = tt[cand] + np.clip(s, 0.0, 1.0) \
                        * dt_used[cand]

            reached = active & (remaining <= dt) & (dt_used == dt_prop)
            r = np.where(active, np.maximum(np.abs(signed), r_floor), r)
            tt = np.where(active, tt + dt_used, tt)
            tt = np.where(reached, t, tt)
            steps[active] += 1
            done = done | reached

        radii[start:stop] = r
        touched[start:stop] = c_touch
        first_touch[start:stop] = c_touch_t
        steps_all[start:stop] = steps
        for eps in hit_radii:
            hits[eps][start:stop] = c_hits[eps]

    return RadialSample(radii=radii, delta=delta, r0=r0, t=t, dt=dt, seed=seed,
                        r_floor=r_floor, touched=touched,
                        first_touch_times=first_touch, first_hit_times=hits,
                        n_steps=steps_all)
