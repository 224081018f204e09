"""Diffusion matrices A(x) and everything derived from them.

A field couples a symmetric matrix A(x), its row divergences
sum_j d_j a_ij(x), and a weight rho with a declared ellipticity constant
lam >= 1 such that lam^-1 rho |xi|^2 <= <A xi, xi> <= lam rho |xi|^2.
From these come the SDE coefficients (dispersion sqrt(A)/sqrt(rho), drift
(1/2) sum_j d_j a_ij / rho), the generator, the quadratic form
(1/2) int <A grad f, grad g> dx, the intrinsic-metric enclosure, and the
local integrability conditions on the drift components.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import (DivergentIntegralError, IndefiniteMatrixError,
                     NonPositiveRatioError, NonSymmetricMatrixError,
                     SingularPointError)
from .geometry import Annulus, Ball, Box, Cube
from .quadrature import gauss_box, integrate_region
from .weights import Weight, power_weight, exponential_weight

FD_STEP_BASE = 1e-5  # relative central-difference step for divergence rows


def sqrt_spd(mat: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-tol, 0) are clamped to zero (roundoff from a PSD
    matrix); anything below -tol raises IndefiniteMatrixError.
    Default tol = 1e-12 * ||mat||_2.
    """
    m = np.asarray(mat, dtype=float)
    if m.ndim == 2:
        m = m[None, :, :]
        single = True
    else:
        single = False
    sym_gap = np.max(np.abs(m - np.swapaxes(m, -1, -2)), axis=(-1, -2))
    scale = np.maximum(np.max(np.abs(m), axis=(-1, -2)), 1e-300)
    if np.any(sym_gap > 1e-10 * scale):
        raise NonSymmetricMatrixError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(m)
    if tol is None:
        tols = 1e-12 * scale
    else:
        tols = np.full_like(scale, tol)
    if np.any(vals < -tols[:, None]):
        raise IndefiniteMatrixError(
            f"eigenvalue {float(np.min(vals)):.3g} below -tol")
    vals = np.clip(vals, 0.0, None)
    root = (vecs * np.sqrt(vals)[:, None, :]) @ np.swapaxes(vecs, -1, -2)
    return root[0] if single else root


@dataclass(frozen=True)
class DiffusionField:
    """Symmetric weighted-elliptic matrix field with its row divergences."""

    dim: int
    weight: Weight
    amat: Callable[[np.ndarray], np.ndarray]          # (n,d) -> (n,d,d)
    div_rows: Callable[[np.ndarray], np.ndarray]      # (n,d) -> (n,d)
    lam: float = 1.0
    # "identity": sqrt(A)/sqrt(rho) == I, "constant": a fixed matrix,
    # "general": recomputed pointwise from A/rho.
    dispersion_kind: str = "general"
    dispersion_matrix: Optional[np.ndarray] = None
    label: str = "custom"
    div_is_fd: bool = False
    # drift is finite off the origin; lets the stepper skip finiteness scans
    clean_drift: bool = False
    # optional closed form for (1/2) sum_j d_j a_ij / rho, bypassing the
    # generic divide-by-rho route on the hot simulation path
    drift_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.lam < 1.0:
            raise ValueError("ellipticity constant lam must be >= 1")

    def rho(self, x: np.ndarray) -> np.ndarray:
        return self.weight._eval_batch(np.atleast_2d(np.asarray(x, dtype=float)))


def _fd_div_rows(amat, h_base: float = FD_STEP_BASE):
    """Central-difference fallback for (sum_j d_j a_ij)_i."""

    def div(x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = pts.shape
        h = h_base * np.maximum(1.0, np.linalg.norm(pts, axis=1))
        out = np.zeros((n, d))
        for j in range(d):
            step = np.zeros((n, d))
            step[:, j] = h
            da = (amat(pts + step) - amat(pts - step)) / (2.0 * h)[:, None, None]
            out += da[:, :, j]
        return out

    return div


def isotropic_power_field(alpha: float, dim: int) -> DiffusionField:
    """A(x) = ||x||^alpha * I with rho = ||x||^alpha.

    Row divergence alpha ||x||^(alpha-2) x_i; dispersion is exactly the
    identity, drift (alpha/2) x / ||x||^2.
    """
    w = power_weight(alpha, dim)
    eye = np.eye(dim)

    def amat(x):
        pts = np.atleast_2d(x)
        r = np.sqrt(np.einsum("ni,ni->n", pts, pts))
        with np.errstate(divide="ignore"):
            scale = r ** alpha
        return scale[:, None, None] * eye[None, :, :]

    def div(x):
        pts = np.atleast_2d(x)
        r2 = np.einsum("ni,ni->n", pts, pts)
        if alpha == 0.0:
            return np.zeros_like(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(r2 > 0.0, alpha * r2 ** (alpha / 2.0 - 1.0), np.inf)
        return fac[:, None] * pts

    def fast_drift(pts):
        if alpha == 0.0:
            return np.zeros_like(pts)
        r2 = np.einsum("ni,ni->n", pts, pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (0.5 * alpha / r2)[:, None] * pts

    return DiffusionField(dim=dim, weight=w, amat=amat, div_rows=div, lam=1.0,
                          dispersion_kind="identity", clean_drift=True,
                          drift_fn=fast_drift,
                          label=f"isotropic_power(alpha={alpha}, d={dim})")


def power_spd_field(alpha: float, dim: int, matrix) -> DiffusionField:
    """A(x) = ||x||^alpha * M for a constant SPD matrix M; rho = ||x||^alpha."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (dim, dim):
        raise ValueError("matrix shape must match dim")
    if np.max(np.abs(m - m.T)) > 1e-12 * max(np.max(np.abs(m)), 1e-300):
        raise NonSymmetricMatrixError("constant matrix must be symmetric")
    evals = np.linalg.eigvalsh(m)
    if evals[0] <= 0:
        raise IndefiniteMatrixError("constant matrix must be SPD")
    lam = float(max(evals[-1], 1.0 / evals[0]))
    w = power_weight(alpha, dim)
    root = sqrt_spd(m)

    def amat(x):
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        with np.errstate(divide="ignore"):
            scale = r ** alpha
        return scale[:, None, None] * m[None, :, :]

    def div(x):
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(r > 0.0, alpha * r ** (alpha - 2.0), np.inf)
        if alpha == 0.0:
            fac = np.zeros_like(r)
        return fac[:, None] * (pts @ m.T)

    def fast_drift(pts):
        if alpha == 0.0:
            return np.zeros_like(pts)
        r2 = np.einsum("ni,ni->n", pts, pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (0.5 * alpha / r2)[:, None] * (pts @ m.T)

    return DiffusionField(dim=dim, weight=w, amat=amat, div_rows=div, lam=lam,
                          dispersion_kind="constant", dispersion_matrix=root,
                          clean_drift=True, drift_fn=fast_drift,
                          label=f"power_spd(alpha={alpha}, d={dim})")


def exponential_field(phi: Callable, grad_phi: Callable, dim: int,
                      label: str = "exponential") -> DiffusionField:
    """A(x) = e^phi(x) * I with rho = e^phi; drift (1/2) grad phi."""
    w = exponential_weight(phi, dim, label=f"e^{label}")
    eye = np.eye(dim)

    def amat(x):
        pts = np.atleast_2d(x)
        scale = np.exp(np.asarray(phi(pts), dtype=float))
        return scale[:, None, None] * eye[None, :, :]

    def div(x):
        pts = np.atleast_2d(x)
        scale = np.exp(np.asarray(phi(pts), dtype=float))
        return scale[:, None] * np.asarray(grad_phi(pts), dtype=float)

    def fast_drift(pts):
        return 0.5 * np.asarray(grad_phi(pts), dtype=float)

    return DiffusionField(dim=dim, weight=w, amat=amat, div_rows=div, lam=1.0,
                          dispersion_kind="identity", clean_drift=True,
                          drift_fn=fast_drift, label=label)


def custom_field(amat: Callable, weight: Weight, lam: float,
                 div_rows: Optional[Callable] = None,
                 label: str = "custom") -> DiffusionField:
    """Wrap arbitrary evaluators; missing divergences fall back to central
    finite differences with relative step 1e-5 * max(1, ||x||)."""
    fd = div_rows is None
    return DiffusionField(dim=weight.dim, weight=weight, amat=amat,
                          div_rows=div_rows or _fd_div_rows(amat),
                          lam=lam, dispersion_kind="general", label=label,
                          div_is_fd=fd)


def fd_div_rows_of(field: DiffusionField) -> Callable:
    """Finite-difference divergence of a field's A, for cross-checking the
    analytic rows."""
    return _fd_div_rows(field.amat)


@dataclass(frozen=True)
class SdeCoefficients:
    """Dispersion sqrt(A)/sqrt(rho) and drift (1/2) sum_j d_j a_ij / rho.

    singular_policy governs evaluation on the weight's singular set
    ({0} for power weights): "zero" substitutes a zero drift (the set is
    m-null and the associated process starts from such points anyway),
    "error" raises SingularPointError.
    """

    field: DiffusionField
    singular_policy: str = "zero"

    def __post_init__(self):
        if self.singular_policy not in ("zero", "error"):
            raise ValueError("singular_policy must be 'zero' or 'error'")

    @property
    def dim(self) -> int:
        return self.field.dim

    def drift(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        if self.field.drift_fn is not None:
            out = self.field.drift_fn(pts)
            if self.field.weight.singular_at_origin:
                at0 = np.einsum("ni,ni->n", pts, pts) == 0.0
                if np.any(at0):
                    if self.singular_policy == "error":
                        raise SingularPointError(
                            "drift evaluated on the singular set with "
                            "policy 'error'")
                    out[at0] = 0.0
            if not self.field.clean_drift:
                out = self._apply_policy_to_nonfinite(out)
        else:
            at_origin = np.einsum("ni,ni->n", pts, pts) == 0.0
            singular = at_origin & self.field.weight.singular_at_origin
            out = np.zeros_like(pts)
            ok = ~singular
            if np.any(ok):
                with np.errstate(divide="ignore", invalid="ignore"):
                    rho = self.field.weight._eval_batch(pts[ok])
                    div = np.atleast_2d(self.field.div_rows(pts[ok]))
                    out[ok] = 0.5 * div / rho[:, None]
            if np.any(singular) and self.singular_policy == "error":
                raise SingularPointError(
                    "drift evaluated on the singular set with policy 'error'")
            out = self._apply_policy_to_nonfinite(out)
        if np.asarray(x).ndim == 1:
            return out[0]
        return out

    def _apply_policy_to_nonfinite(self, out: np.ndarray) -> np.ndarray:
        bad = ~np.all(np.isfinite(out), axis=1)
        if np.any(bad):
            if self.singular_policy == "error":
                raise SingularPointError(
                    "drift not finite at an evaluation point (policy 'error')")
            out[bad] = 0.0
        return out

    def dispersion(self, x) -> np.ndarray:
        """(sigma/sqrt(rho))(x) = sqrt(A(x)/rho(x)), batched (n,d,d)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = pts.shape
        if self.field.dispersion_kind == "identity":
            out = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        elif self.field.dispersion_kind == "constant":
            out = np.broadcast_to(self.field.dispersion_matrix, (n, d, d)).copy()
        else:
            rho = self.field.weight._eval_batch(pts)
            a = self.field.amat(pts)
            out = sqrt_spd(a / rho[:, None, None])
        if np.asarray(x).ndim == 1:
            return out[0]
        return out

    def apply_dispersion(self, x: np.ndarray, dw: np.ndarray) -> np.ndarray:
        """dispersion(x) @ dw, with fast paths for identity/constant kinds."""
        if self.field.dispersion_kind == "identity":
            return dw
        if self.field.dispersion_kind == "constant":
            return dw @ self.field.dispersion_matrix.T
        s = self.dispersion(x)
        return np.einsum("nij,nj->ni", s, dw)


def drift(coeffs: SdeCoefficients, x) -> np.ndarray:
    """Drift vector (1/2)(sum_j d_j a_ij / rho)(x)."""
    return coeffs.drift(x)


@dataclass(frozen=True)
class SmoothTestFunction:
    """C^infinity function with analytic gradient and Hessian, compactly
    supported inside `support`."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    support: Box

    def __call__(self, x):
        return self.value(np.atleast_2d(np.asarray(x, dtype=float)))


def ball_bump(center, radius: float) -> SmoothTestFunction:
    """exp(-1/(1-s)) with s = ||x-c||^2/R^2, vanishing outside B_R(c)."""
    c = np.asarray(center, dtype=float)
    r2 = radius * radius

    def parts(x):
        pts = np.atleast_2d(x)
        s = np.sum((pts - c) ** 2, axis=1) / r2
        inside = s < 1.0
        g = np.zeros_like(s)
        g1 = np.zeros_like(s)
        g2 = np.zeros_like(s)
        t = 1.0 - s[inside]
        e = np.exp(-1.0 / t)
        g[inside] = e
        g1[inside] = -e / t**2
        g2[inside] = e * (1.0 / t**4 - 2.0 / t**3)
        return pts, s, g, g1, g2

    def value(x):
        return parts(x)[2]

    def gradient(x):
        pts, s, g, g1, g2 = parts(x)
        return g1[:, None] * (2.0 * (pts - c) / r2)

    def hessian(x):
        pts, s, g, g1, g2 = parts(x)
        u = 2.0 * (pts - c) / r2
        n, d = pts.shape
        h = g2[:, None, None] * (u[:, :, None] * u[:, None, :])
        h += g1[:, None, None] * (2.0 / r2) * np.eye(d)[None, :, :]
        return h

    box = Box(c - radius, c + radius)
    return SmoothTestFunction(value, gradient, hessian, box)


def shell_bump(r_inner: float, r_outer: float, dim: int) -> SmoothTestFunction:
    """Radial bump exp(-1/((r-a)(b-r))) supported in the annulus a<||x||<b."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    a, b = r_inner, r_outer

    def parts(x):
        pts = np.atleast_2d(x)
        r = np.linalg.norm(pts, axis=1)
        p = (r - a) * (b - r)
        inside = p > 0.0
        w = np.zeros_like(r)
        w1 = np.zeros_like(r)
        w2 = np.zeros_like(r)
        pi = p[inside]
        dpi = (b + a - 2.0 * r[inside])
        e = np.exp(-1.0 / pi)
        w[inside] = e
        w1[inside] = e * dpi / pi**2
        w2[inside] = e * ((dpi / pi**2) ** 2 - 2.0 / pi**2
                          - 2.0 * dpi**2 / pi**3)
        return pts, r, w, w1, w2

    def value(x):
        return parts(x)[2]

    def gradient(x):
        pts, r, w, w1, w2 = parts(x)
        safe_r = np.where(r > 0, r, 1.0)
        return (w1 / safe_r)[:, None] * pts

    def hessian(x):
        pts, r, w, w1, w2 = parts(x)
        n, d = pts.shape
        safe_r = np.where(r > 0, r, 1.0)
        unit = pts / safe_r[:, None]
        outer = unit[:, :, None] * unit[:, None, :]
        eye = np.eye(d)[None, :, :]
        h = w2[:, None, None] * outer
        h += (w1 / safe_r)[:, None, None] * (eye - outer)
        return h

    box = Box(-r_outer * np.ones(dim), r_outer * np.ones(dim))
    return SmoothTestFunction(value, gradient, hessian, box)


def ellipticity_lambda(field: DiffusionField, n_points: int, n_dirs: int,
                       region: Box, seed: int) -> float:
    """Sampled estimate of the ellipticity constant.

    lam_hat = max over sampled (x, xi) of max(q, 1/q) with
    q = <A(x) xi, xi> / (rho(x) |xi|^2); the sample includes the
    eigen-directions of A(x)/rho(x), so constant-anisotropy fields are
    resolved exactly.  Always a lower bound for the true lam.
    """
    rng = np.random.default_rng(seed)
    x = region.lo + (region.hi - region.lo) * rng.random((n_points, region.dim))
    nrm = np.linalg.norm(x, axis=1)
    x[nrm == 0.0] += 1e-9  # measure-zero perturbation off the singular set
    a = field.amat(x)
    sym_gap = np.max(np.abs(a - np.swapaxes(a, -1, -2)))
    if sym_gap > 1e-8 * max(float(np.max(np.abs(a))), 1e-300):
        raise NonSymmetricMatrixError("A(x) is not symmetric at sampled points")
    rho = field.weight._eval_batch(x)
    d = region.dim
    xi = rng.standard_normal((n_points, n_dirs, d))
    _, vecs = np.linalg.eigh(a / rho[:, None, None])
    xi = np.concatenate([xi, np.swapaxes(vecs, -1, -2)], axis=1)
    num = np.einsum("nkd,nde,nke->nk", xi, a, xi)
    den = rho[:, None] * np.sum(xi * xi, axis=2)
    q = num / den
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        raise NonPositiveRatioError(
            "quadratic form ratio non-positive where rho > 0")
    return float(max(np.max(q), np.max(1.0 / q)))


def apply_generator(coeffs: SdeCoefficients, f: SmoothTestFunction, x) -> float:
    """Generator action
    (1/2) sum_ij [ (a_ij/rho) d_ij f + (d_j a_ij / rho) d_i f ](x)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    field = coeffs.field
    rho = field.weight._eval_batch(pts)
    a = field.amat(pts)
    hess = f.hessian(pts)
    grad = f.gradient(pts)
    second = 0.5 * np.einsum("nij,nij->n", a, hess) / rho
    first = np.einsum("ni,ni->n", coeffs.drift(pts), grad)
    out = second + first
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def form_energy(field: DiffusionField, f: SmoothTestFunction,
                g: SmoothTestFunction, rtol: float = 1e-9) -> float:
    """Dirichlet-form value (1/2) int <A grad f, grad g> dx by tensor-Gauss
    quadrature over the overlap of the support boxes."""
    lo = np.maximum(f.support.lo, g.support.lo)
    hi = np.minimum(f.support.hi, g.support.hi)
    if np.any(hi <= lo):
        return 0.0
    box = Box(lo, hi)

    def integrand(x):
        a = field.amat(x)
        return 0.5 * np.einsum("ni,nij,nj->n", f.gradient(x), a, g.gradient(x))

    return gauss_box(integrand, box, rtol=rtol).value


@dataclass(frozen=True)
class IbpReport:
    """Residual of the coordinate-function integration-by-parts identity."""

    residual: float
    lhs: float       # E^A(f^i, g)
    rhs: float       # -(1/2) int (sum_j d_j a_ij) g dx
    relative: float

    def __float__(self):
        return self.residual


def check_ibp(field: DiffusionField, i: int, g: SmoothTestFunction,
              rtol: float = 1e-9,
              div_rows: Optional[Callable] = None) -> IbpReport:
    """|E^A(f^i, g) + (1/2) int (sum_j d_j a_ij) g dx| for f^i(x) = x_i.

    A small residual certifies the supplied divergence rows against A.
    `div_rows` overrides the field's rows (used to detect corruption).
    """
    box = g.support
    div = div_rows or field.div_rows

    def lhs_integrand(x):
        a = field.amat(x)
        return 0.5 * np.einsum("nj,nj->n", a[:, i, :], g.gradient(x))

    def rhs_integrand(x):
        return 0.5 * np.atleast_2d(div(x))[:, i] * g.value(x)

    lhs = gauss_box(lhs_integrand, box, rtol=rtol).value
    rhs = gauss_box(rhs_integrand, box, rtol=rtol).value
    residual = abs(lhs + rhs)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return IbpReport(residual=residual, lhs=lhs, rhs=-rhs,
                     relative=residual / scale)


def intrinsic_bounds(lam: float, x, y) -> tuple[float, float]:
    """Proven enclosure [||x-y||/sqrt(lam), sqrt(lam) ||x-y||] of the
    intrinsic metric between x and y."""
    if lam < 1.0:
        raise ValueError("lam must be >= 1")
    gap = float(np.linalg.norm(np.asarray(x, dtype=float)
                               - np.asarray(y, dtype=float)))
    root = np.sqrt(lam)
    return (gap / root, gap * root)


@dataclass(frozen=True)
class Interval:
    """Open/half-open interval of admissible exponents."""

    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, p: float) -> bool:
        above = p > self.lo if self.lo_open else p >= self.lo
        below = p < self.hi if self.hi_open else p <= self.hi
        return above and below

    def is_empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi
                                     and (self.lo_open or self.hi_open))

    def as_tuple(self):
        return (self.lo, self.hi)


@dataclass(frozen=True)
class ExponentWindow:
    """Feasible integrability exponents for one drift-regularity condition."""

    condition: str
    alpha: float
    dim: int
    windows: dict
    empty: bool
    note: str = ""


_CONDITIONS = ("HP3-i", "HP3-ii", "HP3-iii", "HP3prime", "HP6")


def exponent_window(alpha: float, d: int, condition: str) -> ExponentWindow:
    """Solve the strict integrability inequalities of the named condition.

    For the power-weight conditions the p-window solves
    0 < 2 - alpha - d/p < 1 and the q-window solves 0 < 2 - d/q < 1; the
    p-window's right endpoint is infinite once alpha >= 1.  An empty result
    (not an error) means alpha is outside the condition's stated range.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if condition not in _CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")

    def p_window(a):
        lo = d / (2.0 - a)
        hi = np.inf if a >= 1.0 else d / (1.0 - a)
        return Interval(lo, hi)

    q_window = Interval(d / 2.0, float(d))

    if condition == "HP3-i":
        if not (-d < alpha <= -d + 2):
            return ExponentWindow(condition, alpha, d, {}, True,
                                  "alpha outside (-d, -d+2]")
        return ExponentWindow(condition, alpha, d, {"q": q_window}, False,
                              "also requires local m-integrability of the "
                              "drift rows (check_local_norms with p=1, dm)")
    if condition == "HP3-ii":
        if not (-d + 2 < alpha < 0):
            return ExponentWindow(condition, alpha, d, {}, True,
                                  "alpha outside (-d+2, 0)")
        return ExponentWindow(condition, alpha, d,
                              {"p": p_window(alpha), "q": q_window}, False)
    if condition == "HP3-iii":
        if not (0 <= alpha < 2):
            return ExponentWindow(condition, alpha, d, {}, True,
                                  "alpha outside [0, 2)")
        return ExponentWindow(condition, alpha, d, {"p": p_window(alpha)},
                              False)
    if condition == "HP3prime":
        return ExponentWindow(condition, alpha, d,
                              {"p": Interval(d / 2.0, np.inf)}, False,
                              "exponent d/2 + eps for some eps > 0")
    # HP6: membership in L^{2(d+1)}_loc; any p >= 2(d+1) certifies it.
    return ExponentWindow(condition, alpha, d,
                          {"p": Interval(2.0 * (d + 1), np.inf,
                                         lo_open=False)}, False)


@dataclass(frozen=True)
class LocalNormReport:
    """Quadrature check of int_region |f|^p dmu."""

    exponent: float
    region: str
    measure: str
    value: float
    converged: bool
    passed: bool
    diverged: bool = False
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent, "region": self.region,
            "measure": self.measure, "value": self.value,
            "converged": self.converged, "pass": self.passed,
            "diverged": self.diverged, "message": self.message,
        }


def check_local_norms(f: Callable, p: float, region,
                      weight: Optional[Weight] = None, measure: str = "dx",
                      rtol: float = 1e-2, seed: Optional[int] = None,
                      n_max: int = 1 << 21) -> LocalNormReport:
    """Estimate int_region |f|^p dmu and report whether it is finite.

    f maps (n,d) points to scalars or vectors; vector outputs contribute
    their Euclidean norm.  measure "dm" multiplies by the weight density.
    A divergent quadrature is reported as a failed condition, not raised.
    """
    if p < 1:
        raise ValueError("exponent p must be >= 1")
    if measure not in ("dx", "dm"):
        raise ValueError("measure must be 'dx' or 'dm'")
    if measure == "dm" and weight is None:
        raise ValueError("measure 'dm' needs the weight")
    rng = np.random.default_rng(seed)

    def integrand(x):
        vals = np.asarray(f(x), dtype=float)
        if vals.ndim == 2:
            vals = np.linalg.norm(vals, axis=1)
        out = np.abs(vals) ** p
        if measure == "dm":
            out = out * weight._eval_batch(x)
        return out

    desc = f"{type(region).__name__}"
    try:
        res = integrate_region(integrand, region, rng, rtol=rtol, n_max=n_max)
    except DivergentIntegralError as exc:
        return LocalNormReport(exponent=p, region=desc, measure=measure,
                               value=float("inf"), converged=False,
                               passed=False, diverged=True, message=str(exc))
    finite = bool(np.isfinite(res.value))
    return LocalNormReport(exponent=p, region=desc, measure=measure,
                           value=res.value, converged=res.converged,
                           passed=finite and res.converged)
