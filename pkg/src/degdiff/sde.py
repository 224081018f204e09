"""Euler-Maruyama simulation with singular-drift safeguards.

The scheme is explicit Euler-Maruyama.  The drift of the target equations
blows up like 1/||x|| near the origin, so the default step policy caps the
drift displacement: dt shrinks until ||b(x)|| dt <= theta * max(||x||,
sqrt(dt_min)), floored at dt_min.  Optional taming divides the drift by
(1 + dt ||b||).  Explosion is operational: a path exceeding r_max is
recorded (never raised), killed domains truncate at the interpolated
boundary crossing, and first entries into small balls around the origin are
detected segment-wise with sub-step interpolation.

Batches are partitioned into fixed chunks of rng.CHUNK_SIZE paths.  Chunk c
draws from the Philox stream keyed (master_seed, c) once per step for the
whole chunk, and path j of the chunk always reads row j of the draw, so
batch content is bit-identical for identical (seed, N, config,
coefficients) under any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rng as rngmod
from .forms import SdeCoefficients

EVENT_HORIZON = "ran-to-horizon"
EVENT_EXITED = "exited-domain"
EVENT_RMAX = "exceeded-rmax"
EVENT_CENSORED = "censored-max-steps"

_EVENT_NAMES = {1: EVENT_HORIZON, 2: EVENT_EXITED, 3: EVENT_RMAX,
                4: EVENT_CENSORED}


@dataclass(frozen=True)
class StepPolicy:
    """Time-step policy: fixed dt or drift-displacement-capped adaptive."""

    kind: str = "adaptive"
    theta: float = 0.1
    dt_min: float = 1e-8
    taming: bool = False

    def __post_init__(self):
        if self.kind not in ("fixed", "adaptive"):
            raise ValueError("policy kind must be 'fixed' or 'adaptive'")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.dt_min <= 0.0:
            raise ValueError("dt_min must be positive")


@dataclass(frozen=True)
class Domain:
    """State space for the (possibly killed) process.

    "full" is all of R^d; "annulus" with index k is {1/k < ||x|| < k};
    "ball" is {||x|| < radius}.
    """

    kind: str = "full"
    k: int = 1
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("full", "annulus", "ball"):
            raise ValueError("domain kind must be full|annulus|ball")
        if self.kind == "annulus" and self.k < 1:
            raise ValueError("annulus index k must be >= 1")
        if self.kind == "ball" and self.radius <= 0:
            raise ValueError("ball radius must be positive")

    def bounds(self) -> tuple[float, float]:
        if self.kind == "annulus":
            return (1.0 / self.k, float(self.k))
        if self.kind == "ball":
            return (0.0, self.radius)
        return (0.0, np.inf)

    def contains(self, r: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds()
        return (r > lo) & (r < hi)


def full_domain() -> Domain:
    return Domain(kind="full")


def annulus_domain(k: int) -> Domain:
    return Domain(kind="annulus", k=k)


def ball_domain(radius: float) -> Domain:
    return Domain(kind="ball", radius=radius)


@dataclass(frozen=True)
class SimConfig:
    """Simulation run parameters."""

    t_horizon: float
    dt: float
    policy: StepPolicy = StepPolicy()
    domain: Domain = Domain()
    r_max: float = 1e3
    record_stride: int = 0
    snapshot_ts: tuple = ()
    hit_radii: tuple = ()
    track_origin_distance: bool = False
    max_steps: int = 5_000_000

    def __post_init__(self):
        if self.t_horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        if self.policy.kind == "adaptive" and not (
                self.policy.dt_min <= self.dt <= self.t_horizon):
            raise ValueError("need dt_min <= dt <= horizon")
        ts = tuple(sorted(set(float(t) for t in self.snapshot_ts)))
        if any(t <= 0 or t > self.t_horizon for t in ts):
            raise ValueError("snapshot times must lie in (0, horizon]")
        object.__setattr__(self, "snapshot_ts", ts)
        object.__setattr__(self, "hit_radii",
                           tuple(sorted(set(float(r) for r in self.hit_radii))))
        if any(r <= 0 for r in self.hit_radii):
            raise ValueError("hit radii must be positive")


@dataclass
class PathSample:
    """One recorded trajectory with its terminal event."""

    times: np.ndarray
    states: np.ndarray
    event: str
    event_time: float
    event_state: np.ndarray
    stream_id: int
    n_steps: int
    snapshots: dict
    first_hit_times: dict
    min_origin_distance: float


@dataclass
class PathBatch:
    """Summarized ensemble of paths sharing a config and coefficients."""

    config: SimConfig
    coefficients: str
    master_seed: int
    x0: np.ndarray
    n: int
    event_counts: dict
    event_codes: np.ndarray
    event_times: np.ndarray
    final_states: np.ndarray
    n_steps: np.ndarray
    snapshots: dict
    first_hit_times: dict
    min_origin_distance: Optional[np.ndarray]
    notes: tuple = ()
    paths: Optional[list] = None

    def states_at(self, t: float) -> np.ndarray:
        """Snapshot states at a recorded time (alive rows only)."""
        key = float(t)
        if key not in self.snapshots:
            raise KeyError(
                f"time {t} was not in snapshot_ts {self.config.snapshot_ts}")
        snap = self.snapshots[key]
        alive = np.all(np.isfinite(snap), axis=1)
        return snap[alive]

    def summary(self) -> dict:
        out = {
            "n": self.n,
            "seed": self.master_seed,
            "coefficients": self.coefficients,
            "x0": self.x0.tolist(),
            "chunk_size": rngmod.CHUNK_SIZE,
            "events": dict(self.event_counts),
            "notes": list(self.notes),
            "mean_final_sq_norm": float(np.mean(
                np.sum(self.final_states**2, axis=1))),
            "mean_steps": float(np.mean(self.n_steps)),
            "max_steps": int(np.max(self.n_steps)),
        }
        for t, snap in sorted(self.snapshots.items()):
            alive = np.all(np.isfinite(snap), axis=1)
            if np.any(alive):
                sq = np.sum(snap[alive] ** 2, axis=1)
                out[f"snapshot_t={t:g}"] = {
                    "alive": int(np.sum(alive)),
                    "mean_sq_norm": float(np.mean(sq)),
                    "se_sq_norm": float(np.std(sq, ddof=1)
                                        / np.sqrt(max(len(sq), 2))),
                }
        for eps, hits in sorted(self.first_hit_times.items()):
            out[f"hits_eps={eps:g}"] = int(np.sum(np.isfinite(hits)))
        return out


def _cap_dt(policy: StepPolicy, dt_prop, x_norm, b_norm):
    """Adaptive drift-displacement cap; returns dt_used <= dt_prop."""
    if policy.kind == "fixed":
        return dt_prop
    cap = policy.theta * np.maximum(x_norm, np.sqrt(policy.dt_min))
    with np.errstate(divide="ignore", invalid="ignore"):
        dt_cap = np.where(b_norm > 0.0, cap / b_norm, np.inf)
    return np.minimum(dt_prop, np.maximum(dt_cap, policy.dt_min))


def em_step(coeffs: SdeCoefficients, x, dt: float, dw,
            policy: StepPolicy = StepPolicy()) -> tuple[np.ndarray, float]:
    """One Euler-Maruyama step from x with increment dw ~ N(0, dt I).

    Returns (x', dt_used).  When the adaptive policy shrinks the step, dw is
    rescaled by sqrt(dt_used/dt) so the increment matches N(0, dt_used I).
    """
    x = np.asarray(x, dtype=float)
    dw = np.asarray(dw, dtype=float)
    b = coeffs.drift(x)
    b_norm = float(np.linalg.norm(b))
    x_norm = float(np.linalg.norm(x))
    dt_used = float(_cap_dt(policy, dt, x_norm, b_norm))
    dw_scaled = dw * np.sqrt(dt_used / dt)
    if policy.taming and b_norm > 0.0:
        b = b / (1.0 + dt_used * b_norm)
    incr = coeffs.apply_dispersion(x[None, :], dw_scaled[None, :])[0]
    return x + incr + b * dt_used, dt_used


def _segment_min_distance(x, u, s_end):
    """Min over s in [0, s_end] of ||x + s u|| and its minimizer s*."""
    uu = np.sum(u * u, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_star = np.where(uu > 0.0, -np.sum(x * u, axis=1) / uu, 0.0)
    s_star = np.clip(s_star, 0.0, s_end)
    p = x + s_star[:, None] * u
    return np.sqrt(np.sum(p * p, axis=1)), s_star


def _first_crossing_s(x, u, eps):
    """Earliest s in [0,1] with ||x + s u|| = eps (assumes a crossing or
    start inside)."""
    r0 = np.sqrt(np.sum(x * x, axis=1))
    a = np.sum(u * u, axis=1)
    b = 2.0 * np.sum(x * u, axis=1)
    c = r0 * r0 - eps * eps
    s = np.zeros(len(r0))
    inside = r0 <= eps
    disc = np.maximum(b * b - 4.0 * a * c, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(a > 0.0, (-b - np.sqrt(disc)) / (2.0 * a), 0.0)
    s = np.where(inside, 0.0, np.clip(root, 0.0, 1.0))
    return s


def _simulate_chunk(coeffs: SdeCoefficients, x0: np.ndarray, cfg: SimConfig,
                    master_seed: int, stream_id: int, width: int,
                    record: bool) -> dict:
    """Advance one chunk of `width` paths to the horizon.

    Each iteration draws increments only for the rows still running, in row
    order.  The active set evolves deterministically from the stream, so the
    numbers any path sees are a pure function of (seed, stream, config,
    coefficients) and results are identical under any worker count.
    """
    gen = rngmod.stream_generator(master_seed, stream_id)
    d = coeffs.dim
    dt_base = cfg.dt
    boundaries = np.array(sorted(set(cfg.snapshot_ts) | {cfg.t_horizon}))
    n_bnd = len(boundaries)
    snapshot_set = set(cfg.snapshot_ts)
    lo_bound, hi_bound = cfg.domain.bounds()
    track_min = cfg.track_origin_distance or bool(cfg.hit_radii)
    killed = cfg.domain.kind != "full"

    x = np.tile(np.asarray(x0, dtype=float), (width, 1))
    t = np.zeros(width)
    ptr = np.zeros(width, dtype=np.int64)
    code = np.zeros(width, dtype=np.int8)
    event_time = np.full(width, np.nan)
    event_state = np.full((width, d), np.nan)
    steps = np.zeros(width, dtype=np.int64)
    snaps = {float(ts): np.full((width, d), np.nan) for ts in cfg.snapshot_ts}
    hits = {float(eps): np.full(width, np.nan) for eps in cfg.hit_radii}
    r0 = float(np.linalg.norm(x0))
    dmin = np.full(width, r0) if track_min else None

    # start outside a killed domain: immediate exit at t = 0
    if killed and not cfg.domain.contains(np.array([r0]))[0]:
        code[:] = 2
        event_time[:] = 0.0
        event_state[:] = x
    for eps in cfg.hit_radii:
        if r0 <= eps:
            hits[eps][:] = 0.0

    rec_t, rec_x, rec_alive = [], [], []
    if record:
        rec_t.append(t.copy())
        rec_x.append(x.copy())
        rec_alive.append(code == 0)

    iteration = 0
    while True:
        idx = np.flatnonzero(code == 0)
        m = idx.size
        if m == 0:
            break
        z = gen.standard_normal((m, d))
        iteration += 1

        xg = x[idx]
        tg = t[idx]
        bndg = boundaries[ptr[idx]]
        dt_prop = np.maximum(np.minimum(dt_base, bndg - tg), 0.0)

        b = coeffs.drift(xg)
        b_norm = np.sqrt(np.einsum("ni,ni->n", b, b))
        x_norm = np.sqrt(np.einsum("ni,ni->n", xg, xg))
        dt_used = _cap_dt(cfg.policy, dt_prop, x_norm, b_norm)
        hit_boundary = (dt_used == dt_prop) & (bndg - tg <= dt_base)

        if cfg.policy.taming:
            b = b / (1.0 + (dt_used * b_norm))[:, None]
        dw = np.sqrt(dt_used)[:, None] * z
        incr = coeffs.apply_dispersion(xg, dw) + b * dt_used[:, None]

        x_new = xg + incr
        t_new = np.where(hit_boundary, bndg, tg + dt_used)
        steps[idx] += 1

        s_end = np.ones(m)
        exited = np.zeros(m, dtype=bool)
        r_new = np.sqrt(np.einsum("ni,ni->n", x_new, x_new))
        if killed:
            exited = ~cfg.domain.contains(r_new)
            if np.any(exited):
                denom = r_new - x_norm
                target = np.where(r_new >= hi_bound, hi_bound, lo_bound)
                with np.errstate(divide="ignore", invalid="ignore"):
                    s = np.where(np.abs(denom) > 0,
                                 (target - x_norm) / denom, 0.0)
                s = np.clip(s, 0.0, 1.0)
                s_end = np.where(exited, s, s_end)
                sub = idx[exited]
                event_time[sub] = tg[exited] + s[exited] * dt_used[exited]
                event_state[sub] = xg[exited] + s[exited, None] * incr[exited]
                code[sub] = 2

        if track_min:
            seg_min, _ = _segment_min_distance(xg, incr, s_end)
            dmin[idx] = np.minimum(dmin[idx], seg_min)
            for eps in cfg.hit_radii:
                cand = np.isnan(hits[eps][idx]) & (seg_min <= eps)
                if np.any(cand):
                    s_hit = _first_crossing_s(xg[cand], incr[cand], eps)
                    ok = s_hit <= s_end[cand]
                    sub = idx[cand][ok]
                    hits[eps][sub] = tg[cand][ok] \
                        + s_hit[ok] * dt_used[cand][ok]

        survivors = ~exited
        blown = survivors & (r_new > cfg.r_max)
        if np.any(blown):
            sub = idx[blown]
            code[sub] = 3
            event_time[sub] = t_new[blown]
            event_state[sub] = x_new[blown]
            survivors &= ~blown

        at_bnd = survivors & hit_boundary
        if np.any(at_bnd):
            for ts in snapshot_set:
                rows = at_bnd & (bndg == ts)
                if np.any(rows):
                    snaps[ts][idx[rows]] = x_new[rows]
            finished = at_bnd & (ptr[idx] == n_bnd - 1)
            if np.any(finished):
                sub = idx[finished]
                code[sub] = 1
                event_time[sub] = cfg.t_horizon
                event_state[sub] = x_new[finished]
            ptr[idx[at_bnd]] += 1

        # commit: exits stop at the interpolated crossing, others advance
        if np.any(exited):
            x_new[exited] = event_state[idx[exited]]
            t_new[exited] = event_time[idx[exited]]
        x[idx] = x_new
        t[idx] = t_new

        over = (code[idx] == 0) & (steps[idx] >= cfg.max_steps)
        if np.any(over):
            sub = idx[over]
            code[sub] = 4
            event_time[sub] = t[sub]
            event_state[sub] = x[sub]

        if record and (cfg.record_stride > 0) \
                and iteration % cfg.record_stride == 0:
            rec_t.append(t.copy())
            rec_x.append(x.copy())
            rec_alive.append(code == 0)

    out = {
        "code": code, "event_time": event_time, "event_state": event_state,
        "steps": steps, "snaps": snaps, "hits": hits, "dmin": dmin,
    }
    if record:
        out["rec"] = (np.array(rec_t), np.array(rec_x), np.array(rec_alive))
    return out


def _origin_start_note(coeffs: SdeCoefficients, x0) -> tuple:
    w = coeffs.field.weight
    if float(np.linalg.norm(np.asarray(x0, dtype=float))) == 0.0 \
            and w.singular_at_origin:
        if w.kind == "power" and (w.dim + w.alpha) < 2.0:
            return ("origin-start: heuristic",)
        return ("origin-start: zero-drift step",)
    return ()


def simulate_path(coeffs: SdeCoefficients, x0, cfg: SimConfig, seed: int,
                  stream_id: int = 0) -> PathSample:
    """Simulate one path on stream (seed, stream_id), recording states.

    States are recorded at every `record_stride`-th accepted step (stride 1
    when the config leaves it at 0), plus the terminal event state.
    """
    run_cfg = cfg if cfg.record_stride > 0 else replace(cfg, record_stride=1)
    x0 = np.asarray(x0, dtype=float)
    res = _simulate_chunk(coeffs, x0, run_cfg, seed, stream_id, 1, record=True)
    rec_t, rec_x, rec_alive = res["rec"]
    times = rec_t[:, 0]
    states = rec_x[:, 0, :]
    # drop duplicate trailing records after the terminal event
    keep = np.ones(len(times), dtype=bool)
    keep[1:] = np.diff(times) > 0
    times, states = times[keep], states[keep]
    ev_t = float(res["event_time"][0])
    ev_x = res["event_state"][0]
    if len(times) == 0 or times[-1] < ev_t or not np.allclose(states[-1], ev_x):
        times = np.append(times, ev_t)
        states = np.vstack([states, ev_x[None, :]])
    return PathSample(
        times=times, states=states, event=_EVENT_NAMES[int(res["code"][0])],
        event_time=ev_t, event_state=ev_x, stream_id=stream_id,
        n_steps=int(res["steps"][0]),
        snapshots={ts: res["snaps"][ts][0] for ts in res["snaps"]},
        first_hit_times={eps: float(res["hits"][eps][0])
                         for eps in res["hits"]},
        min_origin_distance=(float(res["dmin"][0])
                             if res["dmin"] is not None else np.nan))


def simulate_batch(coeffs: SdeCoefficients, x0, n: int, cfg: SimConfig,
                   master_seed: int, workers: int = 1,
                   keep_paths: bool = False) -> PathBatch:
    """Simulate n independent paths from x0 and merge summaries.

    Chunk c of CHUNK_SIZE consecutive paths runs on stream (master_seed, c);
    the merge is a deterministic concatenation in chunk order, so results do
    not depend on `workers`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (coeffs.dim,):
        raise ValueError(f"x0 must have shape ({coeffs.dim},)")
    bounds = rngmod.chunk_bounds(n)
    jobs = [(c, stop - start) for c, (start, stop) in enumerate(bounds)]

    def run(job):
        c, width = job
        return _simulate_chunk(coeffs, x0, cfg, master_seed, c, width,
                               record=keep_paths and cfg.record_stride > 0)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    code = np.concatenate([r["code"] for r in results])
    event_time = np.concatenate([r["event_time"] for r in results])
    event_state = np.concatenate([r["event_state"] for r in results])
    steps = np.concatenate([r["steps"] for r in results])
    snaps = {ts: np.concatenate([r["snaps"][ts] for r in results])
             for ts in (cfg.snapshot_ts or ())}
    hits = {eps: np.concatenate([r["hits"][eps] for r in results])
            for eps in (cfg.hit_radii or ())}
    dmin = None
    if results[0]["dmin"] is not None:
        dmin = np.concatenate([r["dmin"] for r in results])
    counts = {name: int(np.sum(code == k)) for k, name in _EVENT_NAMES.items()}
    counts = {k: v for k, v in counts.items() if v > 0}

    paths = None
    if keep_paths and cfg.record_stride > 0:
        paths = []
        for c, (start, stop) in enumerate(bounds):
            res = results[c]
            rec_t, rec_x, rec_alive = res["rec"]
            for row in range(stop - start):
                alive_until = np.searchsorted(~rec_alive[:, row], True)
                times = rec_t[: alive_until + 1, row]
                states = rec_x[: alive_until + 1, row, :]
                paths.append(PathSample(
                    times=times, states=states,
                    event=_EVENT_NAMES[int(res["code"][row])],
                    event_time=float(res["event_time"][row]),
                    event_state=res["event_state"][row],
                    stream_id=c, n_steps=int(res["steps"][row]),
                    snapshots={ts: res["snaps"][ts][row]
                               for ts in res["snaps"]},
                    first_hit_times={eps: float(res["hits"][eps][row])
                                     for eps in res["hits"]},
                    min_origin_distance=(float(res["dmin"][row])
                                         if res["dmin"] is not None
                                         else np.nan)))

    return PathBatch(
        config=cfg, coefficients=coeffs.field.label, master_seed=master_seed,
        x0=x0, n=n, event_counts=counts, event_codes=code,
        event_times=event_time, final_states=event_state, n_steps=steps,
        snapshots=snaps, first_hit_times=hits, min_origin_distance=dmin,
        notes=_origin_start_note(coeffs, x0), paths=paths)


def kill_at_exit(path: PathSample, domain: Domain) -> PathSample:
    """Truncate a recorded path at its first exit from the domain.

    Idempotent; paths already killed (or never leaving) come back unchanged.
    The crossing time interpolates the radial coordinate linearly across the
    crossing step.
    """
    if domain.kind == "full" or path.event == EVENT_EXITED:
        return path
    r = np.linalg.norm(path.states, axis=1)
    inside = domain.contains(r)
    if np.all(inside):
        return path
    first_out = int(np.argmin(inside))  # first False
    lo, hi = domain.bounds()
    if first_out == 0:
        exit_t, exit_x = path.times[0], path.states[0]
        times = np.array([exit_t])
        states = exit_x[None, :]
    else:
        j = first_out - 1
        target = hi if r[first_out] >= hi else lo
        denom = r[first_out] - r[j]
        s = 0.0 if denom == 0.0 else (target - r[j]) / denom
        s = float(np.clip(s, 0.0, 1.0))
        exit_t = path.times[j] + s * (path.times[first_out] - path.times[j])
        exit_x = path.states[j] + s * (path.states[first_out] - path.states[j])
        times = np.append(path.times[:first_out], exit_t)
        states = np.vstack([path.states[:first_out], exit_x[None, :]])
    return PathSample(
        times=times, states=states, event=EVENT_EXITED, event_time=exit_t,
        event_state=exit_x, stream_id=path.stream_id, n_steps=path.n_steps,
        snapshots={ts: v for ts, v in path.snapshots.items() if ts <= exit_t},
        first_hit_times=path.first_hit_times,
        min_origin_distance=path.min_origin_distance)


@dataclass(frozen=True)
class HittingStats:
    """First-passage summary for a small ball around the origin."""

    radius: float
    n: int
    n_hit: int
    fraction: float
    ci_low: float
    ci_high: float
    confidence: float
    time_quantiles: dict

    def to_dict(self) -> dict:
        return {
            "radius": self.radius, "n": self.n, "n_hit": self.n_hit,
            "fraction": self.fraction, "ci_low": self.ci_low,
            "ci_high": self.ci_high, "confidence": self.confidence,
            "time_quantiles": dict(self.time_quantiles),
        }


def wilson_interval(n_hit: int, n: int, confidence: float = 0.99):
    """Wilson score interval for a binomial fraction."""
    from scipy.stats import norm

    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = n_hit / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def hitting_stats(batch: PathBatch, radius: float,
                  confidence: float = 0.99) -> HittingStats:
    """First-entry statistics for B_radius(0) from a batch that tracked it."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    key = float(radius)
    if key not in batch.first_hit_times:
        raise KeyError(
            f"radius {radius} was not tracked; declare it in "
            f"SimConfig.hit_radii (tracked: {sorted(batch.first_hit_times)})")
    hit_times = batch.first_hit_times[key]
    hit = np.isfinite(hit_times)
    n_hit = int(np.sum(hit))
    lo, hi = wilson_interval(n_hit, batch.n, confidence)
    qs = {}
    if n_hit > 0:
        for q in (0.1, 0.25, 0.5, 0.75, 0.9):
            qs[q] = float(np.quantile(hit_times[hit], q))
    return HittingStats(radius=key, n=batch.n, n_hit=n_hit,
                        fraction=n_hit / batch.n, ci_low=lo, ci_high=hi,
                        confidence=confidence, time_quantiles=qs)


def realized_covariation(path: PathSample, coeffs: SdeCoefficients):
    """Compare the path's realized covariation against int (a_ij/rho) dt.

    Returns (realized, predicted) dxd matrices: realized sums the outer
    products of the martingale increments (dX - b dt), predicted integrates
    A(X_s)/rho(X_s) along the recorded path by the left endpoint rule.
    Needs record_stride == 1.
    """
    x = path.states
    t = path.times
    dx = np.diff(x, axis=0)
    dt = np.diff(t)
    b = coeffs.drift(x[:-1])
    mart = dx - b * dt[:, None]
    realized = mart.T @ mart
    a = coeffs.field.amat(x[:-1])
    rho = coeffs.field.weight._eval_batch(x[:-1])
    predicted = np.einsum("nij,n->ij", a, dt / rho)
    return realized, predicted
