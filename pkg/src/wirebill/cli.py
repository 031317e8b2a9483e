"""Command-line experiment runner.

Every subcommand reads an optional JSON config (``--config``); flags given on
the command line override values from the file.  Tabular results go to CSV
(a ``# config_sha256=... seed=...`` comment line, a header row, then values at
17 significant digits); a JSON summary is printed to stdout.

Exit codes: 0 success, 1 curve not nice, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .curves import CurveSpec, build_curve
from .errors import NicenessError, NumericalError, SpecError

DEFAULTS = {
    "resolution": 256,
    "seed": 0,
    "curve-info": {},
    "check-nice": {"grid": 128, "margin": 0.01},
    "orbit": {"x0": 0.0, "alpha0": 0.5, "y0": None, "steps": 1000, "mode": "nice"},
    "phase-portrait": {"orbits": 12, "steps": 500, "mode": "nice"},
    "phase-area": {"grid": 256},
    "lazutkin": {"samples": 16, "v_min_exp": 12, "v_max_exp": 3},
    "deficit": {"x_start": 0.0, "x_end": None, "n": [32, 64, 128, 256], "method": "newton"},
    "periodic": {"p": 1, "q": 3, "x0": 0.0},
    "glance": {"alpha0": 0.05, "steps": 1000, "x0": 0.0, "mode": "all-roots", "stop_factor": None},
    "striction": {"d": None, "lam": None, "samples": 64},
    "gutkin": {"m": 4},
    "ellipsoid": {"axes": [2.0, 1.5, 1.0], "lam": 0.3, "tau": 0.5},
}

NEEDS_CURVE = {"curve-info", "check-nice", "orbit", "phase-portrait", "phase-area", "lazutkin", "deficit", "periodic", "glance", "striction"}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def config_digest(config):
    """SHA-256 of the resolved config; the output path is not part of the experiment."""
    ident = {k: v for k, v in config.items() if k != "out"}
    text = json.dumps(_jsonable(ident), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _out_path(path):
    p = Path(path)
    outdir = os.environ.get("WIREBILL_OUTDIR")
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def write_csv(path, header, rows, config):
    p = _out_path(path)
    with open(p, "w", newline="") as fh:
        fh.write(f"# config_sha256={config_digest(config)} seed={config['seed']}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return str(p)


def write_json(path, data):
    p = _out_path(path)
    with open(p, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return str(p)


def _load_json_arg(value, field):
    """JSON from a file path, or inline JSON text."""
    try:
        if os.path.exists(value):
            with open(value) as fh:
                return json.load(fh)
        return json.loads(value)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(field, f"cannot read JSON ({exc})") from exc


def _require(cond, field, message):
    if not cond:
        raise SpecError(field, message)


def _positive_int(cfg, key, field):
    v = cfg[key]
    _require(isinstance(v, int) and not isinstance(v, bool) and v > 0, field, "must be a positive integer")
    return v


def _number(cfg, key, field, positive=False):
    v = cfg[key]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v), field, "must be a finite number")
    if positive:
        _require(v > 0, field, "must be positive")
    return float(v)


# ---------------------------------------------------------------------------
# subcommands; each returns the JSON summary


def cmd_curve_info(curve, cfg, config):
    xs = np.arange(4096) * (curve.length / 4096)
    k = curve.curvature(xs)
    return {
        "kind": curve.kind,
        "dimension": curve.dimension,
        "closed": curve.closed,
        "length": curve.length,
        "min_curvature": float(k.min()),
        "max_curvature": float(k.max()),
    }


def cmd_check_nice(curve, cfg, config):
    from .reflection import check_nice

    grid = _positive_int(cfg, "grid", "grid")
    margin = _number(cfg, "margin", "margin", positive=True)
    report = check_nice(curve, grid=grid, margin=margin)
    out = report.to_dict()
    if config.get("out"):
        out["report"] = write_json(config["out"], out)
    return out


def _orbit(curve, cfg, x0, alpha0, steps, mode):
    from .reflection import iterate_orbit, start_from_angle
    from .phase.glancing import _first_chord

    if cfg.get("y0") is not None:
        y0 = float(cfg["y0"])
    elif mode == "nice":
        y0 = start_from_angle(curve, x0, alpha0)
    else:
        y0 = _first_chord(curve, x0, alpha0, 1024)
    return iterate_orbit(curve, x0, y0, steps, mode=mode)


def cmd_orbit(curve, cfg, config):
    steps = _positive_int(cfg, "steps", "steps")
    x0 = _number(cfg, "x0", "x0")
    alpha0 = _number(cfg, "alpha0", "alpha0", positive=True)
    _require(alpha0 < math.pi, "alpha0", "must lie in (0, pi)")
    _require(cfg["mode"] in ("nice", "all-roots"), "mode", "must be 'nice' or 'all-roots'")
    orb = _orbit(curve, cfg, x0, alpha0, steps, cfg["mode"])
    v = orb.vertices
    rows = zip(range(len(v) - 1), v[:-1], v[1:], orb.alpha, orb.beta, orb.length, orb.residual)
    path = write_csv(config.get("out") or "orbit.csv", ["step", "x", "y", "alpha", "beta", "L", "residual"], rows, config)
    summary = {"csv": path, "steps": int(orb.steps), "max_residual": float(orb.residual.max()), "stopped_early": orb.stopped_early}
    if orb.steps + 1 >= 100:
        from .phase import rotation_number

        rn = rotation_number(orb)
        summary["rotation_number"] = rn.value
        summary["rational"] = list(rn.rational) if rn.rational else None
    return summary


def cmd_phase_portrait(curve, cfg, config):
    n = _positive_int(cfg, "orbits", "orbits")
    steps = _positive_int(cfg, "steps", "steps")
    _require(cfg["mode"] in ("nice", "all-roots"), "mode", "must be 'nice' or 'all-roots'")
    rng = np.random.default_rng(config["seed"])
    alphas = np.linspace(0, math.pi, n + 2)[1:-1]
    rows = []
    for i, a in enumerate(alphas):
        x0 = float(rng.random() * curve.length)
        orb = _orbit(curve, {}, x0, float(a), steps, cfg["mode"])
        xm = np.mod(orb.vertices[:-1], curve.length)
        rows.extend((i, k, x, math.cos(al)) for k, (x, al) in enumerate(zip(xm, orb.alpha)))
    path = write_csv(config.get("out") or "phase_portrait.csv", ["orbit", "k", "x", "cos_alpha"], rows, config)
    return {"csv": path, "orbits": n, "points": len(rows)}


def cmd_phase_area(curve, cfg, config):
    from .chords import phase_area

    grid = _positive_int(cfg, "grid", "grid")
    area = phase_area(curve, grid=grid)
    expected = 2 * curve.length
    out = {"phase_area": area, "expected": expected, "relative_error": abs(area - expected) / expected}
    if config.get("out"):
        out["report"] = write_json(config["out"], out)
    return out


def cmd_lazutkin(curve, cfg, config):
    from .phase import lazutkin_residuals

    samples = _positive_int(cfg, "samples", "samples")
    lo, hi = int(cfg["v_min_exp"]), int(cfg["v_max_exp"])
    _require(lo > hi > 0, "v_min_exp", "need v_min_exp > v_max_exp > 0 (v runs over 2^-v_min_exp .. 2^-v_max_exp)")
    fit = lazutkin_residuals(curve, 2.0 ** -np.arange(hi, lo + 1), samples=samples, seed=config["seed"])
    rows = zip(fit.v, fit.res_u, fit.res_v, fit.used_u, fit.used_v)
    path = write_csv(config.get("out") or "lazutkin.csv", ["v", "res_u", "res_v", "used_u", "used_v"], rows, config)
    return {"csv": path, "e_u": fit.e_u, "e_v": fit.e_v}


def cmd_deficit(curve, cfg, config):
    from .phase import deficit_limit, impact_discrepancy

    a = _number(cfg, "x_start", "x_start")
    b = cfg["x_end"]
    b = a + curve.length / 4 if b is None else float(b)
    ns = cfg["n"]
    _require(isinstance(ns, list) and len(ns) >= 2 and all(isinstance(v, int) and v > 0 for v in ns), "n", "need a list of at least two positive integers")
    res = deficit_limit(curve, a, b, ns, method=cfg["method"])
    disc = [impact_discrepancy(p, curve) for p in res.polygons]
    rows = list(zip(res.n, res.scaled, disc)) + [("inf", res.limit, float("nan"))]
    path = write_csv(config.get("out") or "deficit.csv", ["n", "scaled_deficit", "impact_discrepancy"], rows, config)
    return {
        "csv": path,
        "limit": res.limit,
        "reference_cubed": res.reference_cubed,
        "reference_printed": res.reference_printed,
        "relative_error_cubed": abs(res.limit - res.reference_cubed) / res.reference_cubed,
        "extrapolation_steps": res.extrapolation_steps,
    }


def cmd_periodic(curve, cfg, config):
    from .chords import chord_frame
    from .phase import periodic_orbit_search

    p = _positive_int(cfg, "p", "p")
    q = _positive_int(cfg, "q", "q")
    _require(q >= 2, "q", "must be >= 2")
    poly = periodic_orbit_search(curve, p, q, x0=_number(cfg, "x0", "x0"))
    x = poly.vertices
    nxt = np.concatenate([x[1:], [x[0] + p * curve.length]])
    f = chord_frame(curve, x, nxt)
    rows = zip(range(q), x, f.alpha, f.L)
    path = write_csv(config.get("out") or "periodic.csv", ["k", "x", "alpha", "length"], rows, config)
    return {"csv": path, "perimeter": poly.total_length, "max_residual": float(poly.residuals.max())}


def cmd_glance(curve, cfg, config):
    from .phase import glancing_escape

    steps = _positive_int(cfg, "steps", "steps")
    alpha0 = _number(cfg, "alpha0", "alpha0", positive=True)
    sf = cfg["stop_factor"]
    res = glancing_escape(curve, alpha0, steps, x0=_number(cfg, "x0", "x0"), mode=cfg["mode"], stop_factor=sf)
    path = write_csv(config.get("out") or "glance.csv", ["step", "alpha"], enumerate(res.alpha), config)
    return {
        "csv": path,
        "alpha0": alpha0,
        "max_alpha": res.max_alpha,
        "min_alpha": res.min_alpha,
        "excursion": res.excursion,
        "escape_step": res.escape_step,
        "multivalued_steps": res.multivalued_steps,
    }


def cmd_striction(curve, cfg, config):
    from .caustics import ChordFamily, striction_profile, string_invariant

    samples = _positive_int(cfg, "samples", "samples")
    if cfg["lam"] is not None:
        fam = ChordFamily.confocal(curve, _number(cfg, "lam", "lam", positive=True))
    else:
        _require(cfg["d"] is not None, "d", "give a shift d or a confocal parameter lam")
        d = _number(cfg, "d", "d", positive=True)
        fam = ChordFamily.shift(curve, d, raw=curve.constant_speed is not None)
    prof = striction_profile(fam, samples=samples)
    rows = zip(prof.t, prof.fraction, prof.deviation, prof.noncylindricity)
    path = write_csv(config.get("out") or "striction.csv", ["t", "sStarOverL", "deviation", "noncylindricity"], rows, config)
    ok = ~prof.cylindrical
    return {
        "csv": path,
        "family": fam.label,
        "min_fraction": float(prof.fraction[ok].min()) if ok.any() else None,
        "max_fraction": float(prof.fraction[ok].max()) if ok.any() else None,
        "max_deviation": float(np.nanmax(prof.deviation)) if ok.any() else None,
        "cylindrical_samples": int(prof.cylindrical.sum()),
        "string_residual": string_invariant(fam, samples=samples) if ok.all() else None,
    }


def cmd_gutkin(curve, cfg, config):
    from .caustics import gutkin_roots

    m = cfg["m"]
    _require(isinstance(m, int) and m >= 2, "m", "must be an integer >= 2")
    roots = gutkin_roots(m)
    path = write_csv(config.get("out") or "gutkin.csv", ["k", "d"], enumerate(roots), config)
    return {"csv": path, "m": m, "roots": roots}


def cmd_ellipsoid(curve, cfg, config):
    from .ellipsoid import ConfocalFamily, commute_report, random_geodesic_state

    _require(cfg.get("action") == "commute", "action", "only 'commute' is available")
    axes = cfg["axes"]
    if isinstance(axes, str):
        try:
            axes = [float(v) for v in axes.split(",")]
        except ValueError as exc:
            raise SpecError("axes", "expected comma-separated numbers") from exc
    fam = ConfocalFamily(axes)
    lam = _number(cfg, "lam", "lambda", positive=True)
    tau = _number(cfg, "tau", "tau")
    geo = random_geodesic_state(fam, 0.0, np.random.default_rng(config["seed"]))
    rep = commute_report(fam, lam, geo, tau)
    out = {"axes": fam.axes, "lambda": lam, "tau": tau, "x": geo.x, "v": geo.v, **rep.to_dict()}
    if config.get("out"):
        out["report"] = write_json(config["out"], out)
    return out


COMMANDS = {
    "curve-info": cmd_curve_info,
    "check-nice": cmd_check_nice,
    "orbit": cmd_orbit,
    "phase-portrait": cmd_phase_portrait,
    "phase-area": cmd_phase_area,
    "lazutkin": cmd_lazutkin,
    "deficit": cmd_deficit,
    "periodic": cmd_periodic,
    "glance": cmd_glance,
    "striction": cmd_striction,
    "gutkin": cmd_gutkin,
    "ellipsoid": cmd_ellipsoid,
}

# flag name -> (config key, type)
_FLAGS = {
    "curve-info": [],
    "check-nice": [("--grid", int), ("--margin", float)],
    "orbit": [("--x0", float), ("--alpha0", float), ("--y0", float), ("--steps", int), ("--mode", str)],
    "phase-portrait": [("--orbits", int), ("--steps", int), ("--mode", str)],
    "phase-area": [("--grid", int)],
    "lazutkin": [("--samples", int), ("--v-min-exp", int), ("--v-max-exp", int)],
    "deficit": [("--x-start", float), ("--x-end", float), ("--n", int), ("--method", str)],
    "periodic": [("--p", int), ("--q", int), ("--x0", float)],
    "glance": [("--alpha0", float), ("--steps", int), ("--x0", float), ("--mode", str), ("--stop-factor", float)],
    "striction": [("--d", float), ("--lambda", float), ("--samples", int)],
    "gutkin": [("--m", int)],
    "ellipsoid": [("--axes", str), ("--lambda", float), ("--tau", float)],
}


def build_parser():
    parser = argparse.ArgumentParser(prog="wirebill", description="Wire billiard experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, flags in _FLAGS.items():
        p = sub.add_parser(name)
        if name == "ellipsoid":
            p.add_argument("action", choices=["commute"])
        p.add_argument("--config", help="JSON experiment config; flags override its values")
        if name in NEEDS_CURVE:
            p.add_argument("--curve", help="curve spec: JSON file path or inline JSON")
            p.add_argument("--resolution", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output path (relative paths go under WIREBILL_OUTDIR)")
        for flag, typ in flags:
            kw = {"type": typ, "default": None}
            if flag == "--n":
                kw["nargs"] = "+"
            if flag == "--lambda":
                kw["dest"] = "lam"
            p.add_argument(flag, **kw)
    return parser


def resolve_config(args):
    """Defaults, then the config file, then command-line flags."""
    name = args.command
    file_cfg = {}
    if args.config:
        file_cfg = _load_json_arg(args.config, "config")
        _require(isinstance(file_cfg, dict), "config", "must be a JSON object")
    params = dict(DEFAULTS[name])
    for key, value in file_cfg.get("params", {}).items():
        _require(key in params, f"params.{key}", "unknown parameter")
        params[key] = value
    for flag, _ in _FLAGS[name]:
        key = "lam" if flag == "--lambda" else flag[2:].replace("-", "_")
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if name == "ellipsoid":
        params["action"] = args.action
    config = {
        "command": name,
        "seed": file_cfg.get("seed", DEFAULTS["seed"]),
        "resolution": file_cfg.get("resolution", DEFAULTS["resolution"]),
        "out": file_cfg.get("out"),
        "params": params,
    }
    if name in NEEDS_CURVE:
        config["curve"] = file_cfg.get("curve")
        if args.curve:
            config["curve"] = _load_json_arg(args.curve, "curve")
        if args.resolution is not None:
            config["resolution"] = args.resolution
        _require(config["curve"] is not None, "curve", "missing (use --curve or a 'curve' entry in the config)")
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out:
        config["out"] = args.out
    _require(isinstance(config["seed"], int) and not isinstance(config["seed"], bool) and config["seed"] >= 0, "seed", "must be a non-negative integer")
    return config


def run(config):
    """Execute a resolved config; returns the JSON summary."""
    name = config["command"]
    curve = None
    if name in NEEDS_CURVE:
        spec = CurveSpec.from_dict(config["curve"])
        curve = build_curve(spec, resolution=config["resolution"])
    summary = COMMANDS[name](curve, config["params"], config)
    summary["config_sha256"] = config_digest(config)
    summary["seed"] = config["seed"]
    return summary


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        summary = run(config)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return 3
    except NicenessError as exc:
        print(f"curve is not nice: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    if config["command"] == "check-nice" and not summary["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
