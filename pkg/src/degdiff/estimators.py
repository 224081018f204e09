"""Estimators that turn path batches into verdicts on kernel estimates.

Transition densities are estimated by Gaussian-product KDE with respect to
Lebesgue measure and divided by rho(y) to give densities with respect to
m = rho dx.  Envelope checks compare the upper confidence bound
p_hat + 3 SE against the heat-kernel envelope

    m(B_sqrt(t)(x))^{-1/2} m(B_sqrt(t)(y))^{-1/2}
        exp(-||x-y||^2 / (lam (4+eps) t)),

fitting the smallest admissible constant and tracking its stability across
times.  Riesz potentials and the resolvent-kernel envelope Phi + Psi cover
the potential-theoretic bounds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (CoincidentPointsError, EmptyBatchError,
                     SingularEvaluationPointError, SingularPointError)
from .forms import SmoothTestFunction
from .geometry import Ball, Box
from .quadrature import gauss_box, radial_importance_integral
from .sde import PathBatch
from .weights import QuadConfig, Weight, ball_mass

SENSITIVITY_FACTORS = (0.5, 2.0)


@dataclass
class DensityEstimate:
    """KDE of the time-t transition density with respect to m."""

    points: np.ndarray
    values: np.ndarray           # density w.r.t. m = rho dx
    lebesgue_values: np.ndarray  # density w.r.t. dx
    se: np.ndarray
    bandwidth: np.ndarray
    n: int
    t: float
    sensitivity: dict            # bandwidth factor -> values w.r.t. m


def silverman_bandwidth(samples: np.ndarray) -> np.ndarray:
    """Per-dimension Silverman rule for a multivariate Gaussian kernel."""
    n, d = samples.shape
    sd = np.std(samples, axis=0, ddof=1)
    return sd * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))


def _kde_at(samples: np.ndarray, ys: np.ndarray, h: np.ndarray):
    """Gaussian-product KDE values and standard errors at each y."""
    n, d = samples.shape
    norm = float(np.prod(np.sqrt(2.0 * np.pi) * h))
    vals = np.empty(len(ys))
    ses = np.empty(len(ys))
    for i, y in enumerate(ys):
        z = (samples - y) / h
        k = np.exp(-0.5 * np.sum(z * z, axis=1)) / norm
        vals[i] = float(np.mean(k))
        ses[i] = float(np.std(k, ddof=1) / np.sqrt(n))
    return vals, ses


def kde_transition_density(batch: PathBatch, t: float, ys,
                           weight: Weight,
                           bandwidth="silverman") -> DensityEstimate:
    """Estimate p_t(x0, y) w.r.t. m at the evaluation points ys.

    bandwidth is "silverman", a scalar, or a per-dimension array; a
    two-factor sensitivity sweep (x0.5, x2) is always attached.
    """
    samples = batch.states_at(t)
    if samples.shape[0] < 2:
        raise EmptyBatchError(f"batch has no usable states at t={t}")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    try:
        rho = weight._eval_batch(ys)
    except SingularPointError as exc:
        raise SingularEvaluationPointError(str(exc)) from exc
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0.0):
        raise SingularEvaluationPointError(
            "rho(y) is zero or infinite at an evaluation point")
    if isinstance(bandwidth, str):
        if bandwidth != "silverman":
            raise ValueError(f"unknown bandwidth policy {bandwidth!r}")
        h = silverman_bandwidth(samples)
    else:
        h = np.broadcast_to(np.asarray(bandwidth, dtype=float),
                            (samples.shape[1],)).copy()
    if np.any(h <= 0.0):
        raise ValueError("bandwidth must be positive")
    leb, se = _kde_at(samples, ys, h)
    sens = {}
    for f in SENSITIVITY_FACTORS:
        v, _ = _kde_at(samples, ys, h * f)
        sens[f] = v / rho
    return DensityEstimate(points=ys, values=leb / rho, lebesgue_values=leb,
                           se=se / rho, bandwidth=h, n=samples.shape[0],
                           t=float(t), sensitivity=sens)


class BallMassCache:
    """Memoizes m(B_r(x)) by (center bucket, radius bucket)."""

    def __init__(self, weight: Weight, quad: QuadConfig = QuadConfig(rtol=1e-3)):
        self.weight = weight
        self.quad = quad
        self._store: dict = {}

    def mass(self, center, radius: float) -> float:
        c = np.asarray(center, dtype=float)
        key = (tuple(np.round(c, 9)), round(float(radius), 9))
        if key not in self._store:
            self._store[key] = ball_mass(self.weight, Ball(c, radius),
                                         self.quad).value
        return self._store[key]


def heat_kernel_envelope(weight: Weight, lam: float, x, y, t: float,
                         eps: float,
                         cache: Optional[BallMassCache] = None,
                         quad: QuadConfig = QuadConfig(rtol=1e-3)) -> float:
    """Envelope (without constant) bounding p_t(x, y):
    m(B_sqrt(t)(x))^{-1/2} m(B_sqrt(t)(y))^{-1/2}
    exp(-||x-y||^2/(lam (4+eps) t))."""
    if t <= 0 or eps <= 0:
        raise ValueError("t and eps must be positive")
    if lam < 1.0:
        raise ValueError("lam must be >= 1")
    if cache is None:
        cache = BallMassCache(weight, quad)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    root_t = float(np.sqrt(t))
    mx = cache.mass(x, root_t)
    my = cache.mass(y, root_t)
    gap = float(np.sum((x - y) ** 2))
    return float((mx * my) ** -0.5 * np.exp(-gap / (lam * (4.0 + eps) * t)))


@dataclass(frozen=True)
class EnvelopeReport:
    """Fitted envelope constant at one time slice."""

    c_hat: float
    t: float
    eps: float
    n_grid: int
    exceedance_count: int        # points with p_hat + 3 SE > c_hat * envelope
    excluded_zero_envelope: int
    degenerate: bool             # density estimate was identically zero

    def to_dict(self) -> dict:
        return {
            "c_hat": self.c_hat, "t": self.t, "eps": self.eps,
            "n_grid": self.n_grid, "exceedance_count": self.exceedance_count,
            "excluded_zero_envelope": self.excluded_zero_envelope,
            "degenerate": self.degenerate,
        }


def fit_heat_kernel_constant(d_est: DensityEstimate, envelope_values,
                             eps: float) -> EnvelopeReport:
    """Smallest c with p_hat + 3 SE <= c * envelope across the grid.

    Compares the one-sided upper confidence bound, never the point
    estimate: that is the falsifiable reading of an upper heat-kernel
    bound from Monte-Carlo data.
    """
    env = np.asarray(envelope_values, dtype=float)
    if env.shape != d_est.values.shape:
        raise ValueError("envelope grid does not match the density grid")
    upper = d_est.values + 3.0 * d_est.se
    usable = env > 0.0
    excluded = int(np.sum(~usable))
    if excluded:
        warnings.warn(f"{excluded} zero-envelope points excluded from the fit")
    if not np.any(usable):
        raise ValueError("no usable envelope points")
    c_hat = float(np.max(upper[usable] / env[usable]))
    exceed = int(np.sum(upper[usable] > c_hat * env[usable]))
    return EnvelopeReport(c_hat=c_hat, t=d_est.t, eps=eps,
                          n_grid=int(np.sum(usable)),
                          exceedance_count=exceed,
                          excluded_zero_envelope=excluded,
                          degenerate=bool(np.all(d_est.values == 0.0)))


def envelope_stability(reports) -> tuple[float, bool]:
    """Spread of fitted constants across a time sweep; unstable above 10x."""
    cs = np.array([r.c_hat for r in reports], dtype=float)
    if np.any(cs <= 0):
        return float("inf"), False
    factor = float(np.max(cs) / np.min(cs))
    return factor, factor < 10.0


def _field_with_support(g) -> tuple[Callable, Box]:
    if isinstance(g, SmoothTestFunction):
        return g.value, g.support
    fn, box = g
    return fn, box


def indicator_field(ball: Ball) -> tuple[Callable, Box]:
    """Indicator of a ball as a (callable, support box) pair."""
    c, r = ball.center, ball.radius

    def fn(x):
        return (np.sum((np.atleast_2d(x) - c) ** 2, axis=1) < r * r) \
            .astype(float)

    return fn, Box(c - r, c + r)


def riesz_potential(g, eta: float, x, seed: Optional[int] = None,
                    rtol: float = 1e-3) -> float:
    """V_eta g(x) = int ||x-y||^{eta-d} g(y) dy over the support of g.

    The radius around x is sampled with density proportional to r^{eta-1},
    which cancels the kernel singularity exactly.
    """
    fn, box = _field_with_support(g)
    d = box.dim
    if not 0.0 < eta < d:
        raise ValueError("eta must lie in (0, d)")
    x = np.asarray(x, dtype=float)

    # kernel singularity outside the support: integrand is smooth there
    gap = np.maximum(np.maximum(box.lo - x, x - box.hi), 0.0)
    if float(np.linalg.norm(gap)) > 0.0:
        def smooth(y):
            r = np.linalg.norm(y - x, axis=1)
            return r ** (eta - d) * np.asarray(fn(y), dtype=float)

        return gauss_box(smooth, box, rtol=1e-8).value

    radius = box.enclosing_radius(x)
    inside = box.indicator

    def integrand(y):
        r = np.linalg.norm(y - x, axis=1)
        out = np.zeros(len(y))
        ok = (r > 0.0) & inside(y)
        if np.any(ok):
            out[ok] = r[ok] ** (eta - d) * np.asarray(fn(y[ok]), dtype=float)
        return out

    rng = np.random.default_rng(seed)
    res = radial_importance_integral(integrand, x, radius, d,
                                     kernel_exponent=eta - d, rng=rng,
                                     rtol=rtol)
    return res.value


def resolvent_envelope(alpha: float, d: int, x, y) -> float:
    """Resolvent-kernel envelope Phi + Psi 1_{alpha in (-d, 0)} with
    Phi = ||x-y||^{-(alpha+d-2)} and Psi = ||x-y||^{2-d} ||y||^{-alpha}."""
    if not -d < alpha < 2:
        raise ValueError("the envelope is stated for alpha in (-d, 2)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gap = float(np.linalg.norm(x - y))
    if gap == 0.0:
        raise CoincidentPointsError("envelope undefined at x == y")
    phi = gap ** -(alpha + d - 2.0)
    if alpha >= 0.0:
        return float(phi)
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        raise SingularEvaluationPointError(
            "Psi needs y != 0 when alpha is negative")
    psi = gap ** (2.0 - d) * ny ** (-alpha)
    return float(phi + psi)


@dataclass(frozen=True)
class HoelderReport:
    """Hypothesis check for Hoelder continuity of V_eta g."""

    eta: float
    p: float
    d: int
    order: float
    order_ok: bool
    eta_ok: bool
    tail_integral: float
    tail_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "eta": self.eta, "p": self.p, "d": self.d, "order": self.order,
            "order_ok": self.order_ok, "eta_ok": self.eta_ok,
            "tail_integral": self.tail_integral, "tail_ok": self.tail_ok,
            "pass": self.passed,
        }


def check_hoelder_hypotheses(g, p: float, eta: float, d: int) -> HoelderReport:
    """Verify 0 < eta - d/p < 1, eta in (0, d), and finiteness of
    int (1+||y||)^{eta-d} |g| dy; reports the implied Hoelder order."""
    order = eta - d / p
    order_ok = 0.0 < order < 1.0
    eta_ok = 0.0 < eta < d
    fn, box = _field_with_support(g)

    def integrand(y):
        w = (1.0 + np.linalg.norm(y, axis=1)) ** (eta - d)
        return w * np.abs(np.asarray(fn(y), dtype=float))

    tail = gauss_box(integrand, box, rtol=1e-6).value
    tail_ok = bool(np.isfinite(tail))
    return HoelderReport(eta=eta, p=p, d=d, order=order, order_ok=order_ok,
                         eta_ok=eta_ok, tail_integral=tail, tail_ok=tail_ok,
                         passed=order_ok and eta_ok and tail_ok)


@dataclass(frozen=True)
class MomentSummary:
    """Unbiased sample moments of a batch snapshot."""

    t: float
    n: int
    mean_sq_norm: float
    se_sq_norm: float
    component_means: np.ndarray
    component_se: np.ndarray
    covariance: np.ndarray

    def ci_sq_norm(self, z: float = 3.0) -> tuple[float, float]:
        return (self.mean_sq_norm - z * self.se_sq_norm,
                self.mean_sq_norm + z * self.se_sq_norm)

    def to_dict(self) -> dict:
        return {
            "t": self.t, "n": self.n,
            "mean_sq_norm": self.mean_sq_norm,
            "se_sq_norm": self.se_sq_norm,
            "component_means": self.component_means.tolist(),
            "component_se": self.component_se.tolist(),
            "covariance": self.covariance.tolist(),
        }


def moment_summary(batch: PathBatch, t: float) -> MomentSummary:
    """Sample moments of X_t over the batch; exact at t = 0."""
    if t == 0.0:
        x0 = batch.x0
        d = len(x0)
        return MomentSummary(t=0.0, n=batch.n,
                             mean_sq_norm=float(np.sum(x0 * x0)),
                             se_sq_norm=0.0, component_means=x0.copy(),
                             component_se=np.zeros(d),
                             covariance=np.zeros((d, d)))
    states = batch.states_at(t)
    n = states.shape[0]
    if n < 2:
        raise EmptyBatchError(f"batch has no usable states at t={t}")
    sq = np.sum(states * states, axis=1)
    return MomentSummary(
        t=float(t), n=n,
        mean_sq_norm=float(np.mean(sq)),
        se_sq_norm=float(np.std(sq, ddof=1) / np.sqrt(n)),
        component_means=np.mean(states, axis=0),
        component_se=np.std(states, axis=0, ddof=1) / np.sqrt(n),
        covariance=np.cov(states, rowvar=False))
