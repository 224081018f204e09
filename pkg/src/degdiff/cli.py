"""Command-line entry point wiring checks, simulation and verification.

Exit codes: 0 = run completed and all checks passed, 1 = a check failed,
2 = input/spec error.  Every run writes a manifest (parameter hash, seed,
versions) alongside its JSON report; reports are byte-identical across
reruns except for the timestamp field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, estimators, forms, oracle, sde, specio, weights
from .errors import DegdiffError, SpecError
from .geometry import Annulus, Ball, Box

PASS, FAIL, INPUT_ERROR = 0, 1, 2


def _out_dir(args) -> str:
    return args.out_dir or os.environ.get("DEGDIFF_OUT", ".")


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise SpecError(f"cannot parse point {text!r}: {exc}",
                        pointer="/x0") from exc


def _load_spec_arg(text: str) -> dict:
    """Accept inline JSON or a path to a JSON file."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"inline JSON invalid: {exc}", pointer="/") from exc
    return specio.load_json(text)


def _emit(args, name: str, report: dict, parameters: dict, seed) -> None:
    out_dir = _out_dir(args)
    report = dict(report)
    report["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    path = os.path.join(out_dir, name)
    specio.write_json_atomic(report, path)
    params = {k: v for k, v in parameters.items()
              if isinstance(v, (str, int, float, bool, list, dict,
                                type(None)))}
    manifest = specio.run_manifest(params, seed)
    specio.write_json_atomic(manifest, path.replace(".json", "")
                             + ".manifest.json")
    print(f"wrote {path}")


def _write_csv(path: str, rows: list[dict]) -> None:
    import csv

    os.makedirs(os.path.dirname(os.path.abspath(path)) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["run_id", "t", "statistic",
                                                "value", "se"])
        writer.writeheader()
        writer.writerows(rows)


def cmd_check_weight(args) -> int:
    doc = _load_spec_arg(args.weight)
    w = specio.parse_weight(doc)
    half = args.region_halfwidth
    region = Box(-half * np.ones(w.dim), half * np.ones(w.dim))
    quad = weights.QuadConfig(rtol=args.rtol)
    if args.condition == "a2":
        rep = weights.check_a2(w, region, args.n_balls, args.seed, quad=quad)
    elif args.condition == "doubling":
        rep = weights.check_doubling(w, region, args.n_balls, args.seed,
                                     quad=quad)
    else:  # bmo: cube sweep of the exponent of an exponential weight
        if w.kind != "exponential":
            raise SpecError("bmo condition applies to exponential weights",
                            pointer="/kind")
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        from .geometry import Cube

        for _ in range(args.n_balls):
            center = half * (2.0 * rng.random(w.dim) - 1.0)
            side = float(np.exp(np.log(1e-2)
                                + np.log(2 * half / 1e-2) * rng.random()))
            q = weights.QuadConfig(rtol=args.rtol, seed=rng.integers(1 << 62))
            worst = max(worst, weights.bmo_exp_avg(
                lambda x: np.log(w._eval_batch(x)), Cube(center, side), q))
        rep = weights.WeightClassReport(
            condition="exp-BMO", weight=w.label, region=f"cubes in [{-half},{half}]^d",
            worst_ratio=worst, n_samples=args.n_balls,
            threshold=args.bmo_threshold, passed=worst <= args.bmo_threshold,
            rtol=args.rtol, seed=args.seed)
    _emit(args, f"check_weight_{args.condition}.json", rep.to_dict(),
          vars(args) | {"weight_doc": doc}, args.seed)
    print(f"{rep.condition}: worst ratio {rep.worst_ratio:.6g} "
          f"-> {'pass' if rep.passed else 'FAIL'}")
    return PASS if rep.passed else FAIL


def cmd_check_conditions(args) -> int:
    doc = _load_spec_arg(args.field)
    field = specio.parse_field(doc)
    d = field.dim
    alpha = doc.get("alpha")
    out: dict = {"field": field.label, "dim": d, "alpha": alpha}
    ok = True

    half = args.region_halfwidth
    box = Box(-half * np.ones(d), half * np.ones(d))
    lam_hat = forms.ellipticity_lambda(field, args.n_points, args.n_dirs, box,
                                       args.seed)
    out["lambda_hat"] = lam_hat
    out["lambda_declared"] = field.lam
    hp1_ok = lam_hat <= field.lam * (1.0 + 1e-9)
    out["hp1_consistent"] = bool(hp1_ok)
    ok &= hp1_ok

    if alpha is not None:
        windows = {}
        for cond in ("HP3-i", "HP3-ii", "HP3-iii", "HP3prime", "HP6"):
            win = forms.exponent_window(alpha, d, cond)
            windows[cond] = {
                "empty": win.empty,
                "windows": {k: [v.lo, v.hi] for k, v in win.windows.items()},
                "note": win.note,
            }
        out["exponent_windows"] = windows

    coeffs = forms.SdeCoefficients(field)
    p = 2.0 * (d + 1)
    rep_ball = forms.check_local_norms(coeffs.drift, p, Ball(np.zeros(d), 1.0),
                                       seed=args.seed)
    rep_ann = forms.check_local_norms(coeffs.drift, p, Annulus(0.5, 1.0, d),
                                      seed=args.seed)
    out["hp6_drift_L{:g}".format(p)] = {
        "unit_ball": rep_ball.to_dict(),
        "annulus_0.5_1": rep_ann.to_dict(),
    }

    _emit(args, "check_conditions.json", out, vars(args) | {"field_doc": doc},
          args.seed)
    print(f"lambda_hat={lam_hat:.6g} (declared {field.lam}); "
          f"HP6 drift L^{p:g}: ball "
          f"{'pass' if rep_ball.passed else 'fail'}, annulus "
          f"{'pass' if rep_ann.passed else 'fail'}")
    return PASS if ok else FAIL


def _sim_config_from_args(args, snapshot_ts=(), hit_radii=()) -> sde.SimConfig:
    policy = sde.StepPolicy(kind=args.policy, theta=args.theta,
                            dt_min=args.dt_min, taming=args.taming)
    if args.domain == "full":
        dom = sde.full_domain()
    elif args.domain.startswith("annulus:"):
        dom = sde.annulus_domain(int(args.domain.split(":")[1]))
    elif args.domain.startswith("ball:"):
        dom = sde.ball_domain(float(args.domain.split(":")[1]))
    else:
        raise SpecError(f"bad domain {args.domain!r} "
                        "(full | annulus:<k> | ball:<radius>)",
                        pointer="/domain")
    return sde.SimConfig(
        t_horizon=args.t, dt=args.dt, policy=policy, domain=dom,
        r_max=args.r_max, snapshot_ts=snapshot_ts, hit_radii=hit_radii,
        record_stride=args.record_stride)


def cmd_simulate(args) -> int:
    doc = _load_spec_arg(args.field)
    field = specio.parse_field(doc)
    coeffs = forms.SdeCoefficients(field, singular_policy=args.singular_policy)
    x0 = _parse_point(args.x0)
    snapshot_ts = tuple(float(s) for s in args.snapshots.split(",")) \
        if args.snapshots else (args.t,)
    hit_radii = tuple(float(s) for s in args.hit_radii.split(",")) \
        if args.hit_radii else ()
    cfg = _sim_config_from_args(args, snapshot_ts, hit_radii)
    keep = args.paths_csv is not None
    if keep and args.record_stride == 0:
        cfg = sde.SimConfig(**{**cfg.__dict__, "record_stride": 10})
    batch = sde.simulate_batch(coeffs, x0, args.n, cfg, args.seed,
                               workers=args.threads, keep_paths=keep)
    report = batch.summary()
    if args.save_states:
        npz = os.path.join(_out_dir(args), args.save_states)
        arrays = {f"snapshot_{t:g}": snap
                  for t, snap in batch.snapshots.items()}
        np.savez_compressed(npz, final_states=batch.final_states, **arrays)
        report["states_file"] = args.save_states
    if keep:
        rows = []
        for i, p in enumerate(batch.paths[: args.n]):
            for k in range(len(p.times)):
                rows.append({"run_id": i, "t": p.times[k],
                             "statistic": "state",
                             "value": " ".join(f"{v:.17g}"
                                               for v in p.states[k]),
                             "se": ""})
        _write_csv(os.path.join(_out_dir(args), args.paths_csv), rows)
    _emit(args, args.out, report, vars(args) | {"field_doc": doc}, args.seed)
    return PASS


def cmd_verify_moments(args) -> int:
    field = forms.isotropic_power_field(args.alpha, args.d)
    coeffs = forms.SdeCoefficients(field)
    x0 = _parse_point(args.x0) if args.x0 else \
        np.concatenate([[1.0], np.zeros(args.d - 1)])
    cfg = _sim_config_from_args(args, snapshot_ts=(args.t,))
    batch = sde.simulate_batch(coeffs, x0, args.n, cfg, args.seed,
                               workers=args.threads)
    ms = estimators.moment_summary(batch, args.t)
    orc = oracle.BesselOracle(args.d, args.alpha)
    want = oracle.besq_mean(x0, args.t, orc)
    lo, hi = ms.ci_sq_norm(3.0)
    passed = lo <= want <= hi
    report = {
        "alpha": args.alpha, "d": args.d, "t": args.t, "n": args.n,
        "mean_sq_norm": ms.mean_sq_norm, "se": ms.se_sq_norm,
        "oracle_mean": want, "within_3se": bool(passed),
        "events": dict(batch.event_counts),
    }
    _emit(args, "verify_moments.json", report, vars(args), args.seed)
    if args.csv:
        _write_csv(os.path.join(_out_dir(args), args.csv), [{
            "run_id": 0, "t": args.t, "statistic": "mean_sq_norm",
            "value": ms.mean_sq_norm, "se": ms.se_sq_norm}])
    print(f"mean ||X_t||^2 = {ms.mean_sq_norm:.4f} +- {ms.se_sq_norm:.4f}, "
          f"oracle {want} -> {'pass' if passed else 'FAIL'}")
    return PASS if passed else FAIL


def _default_grid(x0: np.ndarray, d: int) -> np.ndarray:
    radii = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0])
    e1 = np.zeros(d)
    e1[0] = 1.0
    pts = [x0 + r * e1 for r in radii] + [x0 - r * e1 for r in radii[1:]]
    return np.unique(np.array(pts), axis=0)


def cmd_verify_heatkernel(args) -> int:
    doc = _load_spec_arg(args.field)
    field = specio.parse_field(doc)
    coeffs = forms.SdeCoefficients(field)
    x0 = _parse_point(args.x0)
    ts = tuple(float(s) for s in args.times.split(","))
    if args.grid:
        grid = np.asarray(_load_spec_arg(args.grid)["points"], dtype=float)
    else:
        grid = _default_grid(x0, field.dim)
    keep = np.array([field.weight.singular_at_origin
                     and np.linalg.norm(y) > 0.0
                     or not field.weight.singular_at_origin for y in grid])
    grid = grid[keep] if field.weight.singular_at_origin else grid
    cfg = _sim_config_from_args(args, snapshot_ts=ts)
    batch = sde.simulate_batch(coeffs, x0, args.n, cfg, args.seed,
                               workers=args.threads)
    cache = estimators.BallMassCache(field.weight)
    reports = []
    for t in ts:
        dens = estimators.kde_transition_density(
            batch, t, grid, field.weight,
            bandwidth=(args.bandwidth if args.bandwidth else "silverman"))
        env = np.array([estimators.heat_kernel_envelope(
            field.weight, field.lam, x0, y, t, args.eps, cache=cache)
            for y in grid])
        reports.append(estimators.fit_heat_kernel_constant(dens, env,
                                                           args.eps))
    factor, stable = estimators.envelope_stability(reports)
    report = {
        "field": field.label, "eps": args.eps, "times": list(ts),
        "constants": [r.to_dict() for r in reports],
        "stability_factor": factor, "stable": bool(stable),
    }
    _emit(args, args.out, report, vars(args) | {"field_doc": doc}, args.seed)
    if args.csv:
        _write_csv(os.path.join(_out_dir(args), args.csv),
                   [{"run_id": 0, "t": r.t, "statistic": "c_hat",
                     "value": r.c_hat, "se": ""} for r in reports])
    print(f"fitted constants {[round(r.c_hat, 4) for r in reports]}, "
          f"stability x{factor:.2f} -> {'pass' if stable else 'FAIL'}")
    return PASS if stable else FAIL


def cmd_hitting(args) -> int:
    doc = _load_spec_arg(args.field)
    field = specio.parse_field(doc)
    coeffs = forms.SdeCoefficients(field)
    x0 = _parse_point(args.x0)
    cfg = _sim_config_from_args(args, hit_radii=(args.eps,))
    batch = sde.simulate_batch(coeffs, x0, args.n, cfg, args.seed,
                               workers=args.threads)
    hs = sde.hitting_stats(batch, args.eps)
    report = {"field": field.label, "x0": x0.tolist(), "t": args.t,
              "stats": hs.to_dict(), "events": dict(batch.event_counts)}
    if field.weight.kind == "power":
        delta = oracle.bessel_dimension(field.dim, field.weight.alpha)
        report["bessel_dimension"] = delta
        report["hits_origin_oracle"] = oracle.hits_origin(delta)
    _emit(args, "hitting.json", report, vars(args) | {"field_doc": doc},
          args.seed)
    print(f"hit fraction of B_{args.eps:g}(0): {hs.fraction:.4f} "
          f"CI ({hs.ci_low:.4f}, {hs.ci_high:.4f})")
    return PASS


def cmd_potentials(args) -> int:
    doc = _load_spec_arg(args.g)
    kind = doc.get("kind")
    if kind == "ball_indicator":
        g = estimators.indicator_field(Ball(np.asarray(doc["center"],
                                                       dtype=float),
                                            float(doc["radius"])))
    elif kind == "ball_bump":
        g = forms.ball_bump(np.asarray(doc["center"], dtype=float),
                            float(doc["radius"]))
    else:
        raise SpecError(f"unknown g kind {kind!r} "
                        "(ball_indicator | ball_bump)", pointer="/kind")
    x = _parse_point(args.x)
    value = estimators.riesz_potential(g, args.eta, x, seed=args.seed)
    report = {"eta": args.eta, "x": x.tolist(), "value": value, "g": doc}
    if args.hoelder_p:
        d = len(x)
        rep = estimators.check_hoelder_hypotheses(g, args.hoelder_p,
                                                  args.eta, d)
        report["hoelder"] = rep.to_dict()
    _emit(args, "potentials.json", report, vars(args) | {"g_doc": doc},
          args.seed)
    print(f"V_{args.eta:g} g({args.x}) = {value:.8g}")
    return PASS


def cmd_oracle(args) -> int:
    if args.oracle_op == "besq-mean":
        orc = oracle.BesselOracle(args.d, args.alpha)
        x0 = _parse_point(args.x0)
        value = oracle.besq_mean(x0, args.t, orc)
        report = {"op": "besq-mean", "d": args.d, "alpha": args.alpha,
                  "delta": orc.delta, "t": args.t, "value": value}
    elif args.oracle_op == "hits-origin":
        report = {"op": "hits-origin", "delta": args.delta,
                  "value": oracle.hits_origin(args.delta)}
    else:  # radial-sim
        sample = oracle.radial_reference_sim(args.delta, args.r0, args.t,
                                             args.n, args.dt, args.seed)
        report = {"op": "radial-sim", "delta": args.delta, "r0": args.r0,
                  "t": args.t, "n": args.n,
                  "mean_sq_radius": float(np.mean(sample.radii**2)),
                  "touch_fraction": sample.touch_fraction}
    _emit(args, "oracle.json", report, vars(args), getattr(args, "seed", None))
    print(json.dumps({k: v for k, v in report.items() if k != "timestamp"}))
    return PASS


def _add_sim_args(p, default_t=1.0, default_dt=1e-3):
    p.add_argument("--t", type=float, default=default_t)
    p.add_argument("--dt", type=float, default=default_dt)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--policy", choices=["fixed", "adaptive"],
                   default="adaptive")
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--dt-min", type=float, default=1e-8)
    p.add_argument("--taming", action="store_true")
    p.add_argument("--domain", default="full")
    p.add_argument("--r-max", type=float, default=1e3)
    p.add_argument("--record-stride", type=int, default=0)
    p.add_argument("--singular-policy", choices=["zero", "error"],
                   default="zero")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="degdiff",
        description="simulate weight-degenerate diffusions and numerically "
                    "verify their kernel and weight-class estimates")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--out-dir", default=None,
                    help="output directory (default $DEGDIFF_OUT or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-weight", help="A2 / doubling / exp-BMO checks")
    p.add_argument("--weight", required=True, help="inline JSON or file path")
    p.add_argument("--condition", choices=["a2", "doubling", "bmo"],
                   default="a2")
    p.add_argument("--n-balls", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rtol", type=float, default=1e-2)
    p.add_argument("--region-halfwidth", type=float, default=2.0)
    p.add_argument("--bmo-threshold", type=float, default=10.0)
    p.set_defaults(func=cmd_check_weight)

    p = sub.add_parser("check-conditions",
                       help="HP1 ellipticity, exponent windows, local norms")
    p.add_argument("--field", required=True)
    p.add_argument("--n-points", type=int, default=512)
    p.add_argument("--n-dirs", type=int, default=16)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--region-halfwidth", type=float, default=2.0)
    p.set_defaults(func=cmd_check_conditions)

    p = sub.add_parser("simulate", help="run a path batch")
    p.add_argument("--field", required=True)
    p.add_argument("--x0", required=True)
    _add_sim_args(p)
    p.add_argument("--snapshots", default="")
    p.add_argument("--hit-radii", default="")
    p.add_argument("--out", default="batch.json")
    p.add_argument("--save-states", default=None,
                   help="also write snapshot states to this .npz")
    p.add_argument("--paths-csv", default=None,
                   help="per-path CSV (time, state) at the record stride")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-moments",
                       help="isotropic moment identity vs the Bessel oracle")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--x0", default=None)
    _add_sim_args(p)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_verify_moments)

    p = sub.add_parser("verify-heatkernel",
                       help="fit the envelope constant across a time sweep")
    p.add_argument("--field", required=True)
    p.add_argument("--x0", default="0,0,0")
    p.add_argument("--times", default="0.25,0.5,1,2")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--grid", default=None,
                   help='JSON {"points": [[...], ...]}')
    p.add_argument("--bandwidth", type=float, default=None)
    _add_sim_args(p, default_t=2.0)
    p.add_argument("--out", default="heatkernel.json")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_verify_heatkernel)

    p = sub.add_parser("hitting", help="small-ball first-passage statistics")
    p.add_argument("--field", required=True)
    p.add_argument("--x0", required=True)
    p.add_argument("--eps", type=float, default=1e-3)
    _add_sim_args(p, default_t=5.0)
    p.set_defaults(func=cmd_hitting)

    p = sub.add_parser("potentials", help="Riesz potential evaluation")
    p.add_argument("--g", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--hoelder-p", type=float, default=None)
    p.set_defaults(func=cmd_potentials)

    p = sub.add_parser("oracle", help="exact Bessel reference quantities")
    osub = p.add_subparsers(dest="oracle_op", required=True)
    q = osub.add_parser("besq-mean")
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--x0", default="1,0,0")
    q.add_argument("--t", type=float, default=1.0)
    q.set_defaults(func=cmd_oracle)
    q = osub.add_parser("hits-origin")
    q.add_argument("--delta", type=float, required=True)
    q.set_defaults(func=cmd_oracle)
    q = osub.add_parser("radial-sim")
    q.add_argument("--delta", type=float, required=True)
    q.add_argument("--r0", type=float, default=1.0)
    q.add_argument("--t", type=float, default=1.0)
    q.add_argument("--n", type=int, default=10000)
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--seed", type=int, default=42)
    q.set_defaults(func=cmd_oracle)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except DegdiffError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
