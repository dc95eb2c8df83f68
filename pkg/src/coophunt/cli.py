"""Command-line frontend.

Every run writes its data plus a manifest of all effective settings. JSON
output is one document ``{schema_version, manifest, data}``. CSV output is a
header row plus data rows with reals at 17 significant digits; the manifest
goes to ``<out>.manifest.json``, or to stderr as one JSON line when the data
goes to stdout. Nothing time-dependent is written, so identical arguments
give byte-identical files.

Exit codes: 0 success, 2 usage error, 3 numeric failure, 4 regime
precondition unmet. Failures print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import enum
import io
import json
import math
import sys

import numpy as np

from . import __version__, equilibria, ns, sim, stability
from .equilibria import (all_equilibria, beta_star, interior_equilibria, isocline_f, isocline_h,
                         regime, sign_change_count, w, y_c)
from .errors import CoopHuntError, ParameterError, RegimeError
from .model import Params, RawParams, nondimensionalize, orbit

SCHEMA_VERSION = "1"

# --tol KEY=VALUE targets: key -> (module, attribute, type)
TOLERANCES = {
    "scan_points": (equilibria, "SCAN_POINTS", int),
    "root_xtol": (equilibria, "ROOT_XTOL", float),
    "edge_guard": (equilibria, "EDGE_GUARD", float),
    "touch_tol": (equilibria, "TOUCH_TOL", float),
    "oracle_points": (equilibria, "ORACLE_POINTS", int),
    "nonhyperbolic_band": (stability, "NONHYPERBOLIC_BAND", float),
    "marginal_band": (stability, "MARGINAL_BAND", float),
    "beta_max_factor": (stability, "BETA_MAX_FACTOR", float),
    "fd_beta_step": (ns, "FD_BETA_STEP", float),
    "resonance_gap": (ns, "RESONANCE_GAP", float),
    "direction_tol": (ns, "DIRECTION_TOL", float),
    "target_tol": (sim, "TARGET_TOL", float),
    "fixed_diameter": (sim, "FIXED_DIAMETER", float),
    "loop_diameter": (sim, "LOOP_DIAMETER", float),
    "loop_cv": (sim, "LOOP_CV", float),
    "loop_drift": (sim, "LOOP_DRIFT", float),
    "period_tol": (sim, "PERIOD_TOL", float),
}


class UsageError(ParameterError):
    pass


# --- serialization -----------------------------------------------------------

def to_jsonable(obj):
    """Plain JSON structure for results; non-finite floats become ``None``."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        return {k: to_jsonable(v) for k, v in zip(obj._fields, obj)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def json_text(manifest, data) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "manifest": to_jsonable(manifest),
           "data": to_jsonable(data)}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


# --- configuration -----------------------------------------------------------

def _parse_tol(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in TOLERANCES:
            raise UsageError(f"--tol expects KEY=VALUE with KEY in {sorted(TOLERANCES)}, got {item!r}")
        typ = TOLERANCES[key][2]
        try:
            val = typ(value)
        except ValueError:
            raise UsageError(f"--tol {key}: cannot parse {value!r} as {typ.__name__}") from None
        if not (val > 0 and math.isfinite(val)):
            raise UsageError(f"--tol {key} must be positive and finite, got {value!r}")
        out[key] = val
    return out


@contextlib.contextmanager
def _overrides(tol):
    saved = []
    try:
        for key, val in tol.items():
            mod, attr, _ = TOLERANCES[key]
            saved.append((mod, attr, getattr(mod, attr)))
            setattr(mod, attr, val)
        yield
    finally:
        for mod, attr, val in reversed(saved):
            setattr(mod, attr, val)


def _settings():
    return {key: getattr(mod, attr) for key, (mod, attr, _) in TOLERANCES.items()}


def _params(args, need_beta=True):
    if args.lam is None:
        raise UsageError("--lambda is required")
    if args.raw:
        if args.a is None or args.k is None or args.beta is None:
            raise UsageError("--raw needs --a, --k and --beta")
        raw = RawParams(args.lam, args.a, args.k, args.beta, args.alpha)
        return nondimensionalize(raw), dataclasses.asdict(raw)
    if need_beta and args.beta is None:
        raise UsageError("--beta is required")
    return Params(args.lam, args.beta if args.beta is not None else 1.0, args.alpha), None


def _manifest(args, p=None, raw=None, **extra):
    m = {
        "artifact": "coophunt",
        "version": __version__,
        "subcommand": args.command,
        "format": args.format,
        "seed": args.seed,
        "burn_in": args.burn_in,
        "window": args.window,
        "settings": _settings(),
    }
    if p is not None:
        m["params"] = {"lambda": p.lam, "beta": p.beta, "alpha": p.alpha}
    if raw is not None:
        m["raw_params"] = raw
    m.update(extra)
    return m


# --- subcommands -------------------------------------------------------------
# Each returns (manifest, data, csv_columns, csv_rows).

EQ_COLUMNS = ["kind", "x", "y", "residual", "multiplicity", "stability", "modulus_1", "modulus_2"]


def _eq_rows(p):
    rows = []
    for e in all_equilibria(p):
        c = stability.classify(e, p)
        rows.append({"kind": e.kind, "x": e.state.x, "y": e.state.y, "residual": e.residual,
                     "multiplicity": e.multiplicity, "stability": c.tag,
                     "modulus_1": c.moduli[0], "modulus_2": c.moduli[1]})
    return rows


def cmd_equilibria(args):
    p, raw = _params(args)
    rows = _eq_rows(p)
    data = {"equilibria": rows}
    if p.lam <= 1:
        data["globally_stable"] = "E0"
        data["regime"] = None
        data["critical_set"] = None
    else:
        data["regime"] = regime(p)
        data["critical_set"] = stability.critical_set(p)
        data["global_extinction_condition"] = stability.global_extinction_condition(p)
        data["persistence_condition"] = stability.persistence_condition(p)
        data["globally_stable"] = "E1" if data["global_extinction_condition"] else None
    return _manifest(args, p, raw), data, EQ_COLUMNS, rows


ISO_COLUMNS = ["y", "h", "f", "w"]


def cmd_isoclines(args):
    p, raw = _params(args, need_beta=not args.at_beta_star)
    if p.lam <= 1:
        raise RegimeError(f"isoclines need lam > 1, got {p.lam}")
    if args.at_beta_star:
        p = p.with_beta(beta_star(p.lam, p.alpha).beta_star)
    if args.samples < 2:
        raise UsageError(f"--samples must be >= 2, got {args.samples}")
    ys = np.linspace(0.0, y_c(p), args.samples)
    h, f, ww = isocline_h(ys, p), isocline_f(ys, p), w(ys, p)
    rows = [{"y": a, "h": b, "f": c, "w": d} for a, b, c, d in zip(ys, h, f, ww)]
    return _manifest(args, p, raw, samples=args.samples), {"curve": rows}, ISO_COLUMNS, rows


ORBIT_COLUMNS = ["x0", "y0", "attractor", "state_x", "state_y", "center_x", "center_y",
                 "mean_radius", "radius_cv", "radius_drift", "period", "tail_liminf_x",
                 "tail_liminf_y", "tail_max_x", "tail_max_y", "tail_diameter", "steps_used"]


def _summary_row(s0, s: sim.OrbitSummary):
    return {"x0": float(s0[0]), "y0": float(s0[1]), "attractor": s.attractor,
            "state_x": s.state.x if s.state else None, "state_y": s.state.y if s.state else None,
            "center_x": s.center.x if s.center else None,
            "center_y": s.center.y if s.center else None,
            "mean_radius": s.mean_radius, "radius_cv": s.radius_cv,
            "radius_drift": s.radius_drift, "period": s.period,
            "tail_liminf_x": s.tail_liminf_x, "tail_liminf_y": s.tail_liminf_y,
            "tail_max_x": s.tail_max_x, "tail_max_y": s.tail_max_y,
            "tail_diameter": s.tail_diameter, "steps_used": s.steps_used}


def _initials(args, p):
    if args.x0 is not None or args.y0 is not None:
        if args.x0 is None or args.y0 is None:
            raise UsageError("--x0 and --y0 go together")
        return np.array([[args.x0, args.y0]])
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    return sim.sample_initials(p, args.trials, args.seed)


def cmd_classify(args):
    p, raw = _params(args)
    starts = _initials(args, p)
    summaries = sim.classify_orbits(starts, p, burn_in=args.burn_in, window=args.window)
    rows = [_summary_row(s0, s) for s0, s in zip(starts, summaries)]
    return _manifest(args, p, raw), {"orbits": rows}, ORBIT_COLUMNS, rows


NS_COLUMNS = ["quantity", "value"]


def _ns_rows(data):
    rows = []

    def add(name, v):
        if isinstance(v, complex):
            add(name + "_re", v.real)
            add(name + "_im", v.imag)
        else:
            rows.append({"quantity": name, "value": v})

    if data.get("status") == "no_ns_point":
        return [{"quantity": "status", "value": "no_ns_point"},
                {"quantity": "reason", "value": data["reason"]}]
    r = data["report"]
    for name in ("lam", "alpha", "beta_d"):
        add(name, getattr(r, name))
    add("x", r.state.x)
    add("y", r.state.y)
    for name in ("mu", "omega", "transversality", "resonance_clear"):
        add(name, getattr(r, name))
    for prefix in ("b", "c", "k", "l"):
        for i, v in enumerate(getattr(r, prefix), 1):
            add(f"{prefix}{i}", v)
    for name in ("xi20", "xi11", "xi02", "xi21", "c_star", "direction", "simulation_check"):
        add(name, getattr(r, name))
    add("diagnostics", "; ".join(r.diagnostics))
    return rows


def cmd_ns(args):
    if args.lam is None:
        raise UsageError("--lambda is required")
    if args.raw:
        p, raw = _params(args)
        lam, alpha = p.lam, p.alpha
    else:
        lam, alpha, raw = args.lam, args.alpha, None
    beta_max = args.beta_max
    try:
        report = ns.neimark_sacker(lam, alpha, beta_max=beta_max,
                                   check_simulation=args.check_simulation,
                                   burn_in=args.burn_in, window=args.window)
    except RegimeError as exc:
        report, reason = None, str(exc)
    else:
        reason = "det J does not reach 1 in the searched beta range"
    if report is None:
        data = {"status": "no_ns_point", "reason": reason}
    else:
        data = {"status": "ok", "report": report}
    manifest = _manifest(args, raw=raw, params={"lambda": lam, "alpha": alpha},
                         beta_max=beta_max)
    return manifest, data, NS_COLUMNS, _ns_rows(data)


SWEEP_COLUMNS = ["beta", "interior_count", "start_x", "start_y"] + ORBIT_COLUMNS[2:]


def _beta_range(args):
    if args.beta_min is None or args.beta_max is None:
        raise UsageError("--beta-min and --beta-max are required")
    if not (0 < args.beta_min < args.beta_max):
        raise UsageError(f"empty beta range: need 0 < beta-min < beta-max, got "
                         f"{args.beta_min}, {args.beta_max}")
    if args.beta_steps < 2:
        raise UsageError(f"--beta-steps must be >= 2, got {args.beta_steps}")


def cmd_sweep(args):
    if args.lam is None:
        raise UsageError("--lambda is required")
    _beta_range(args)
    policy = "perturbed"
    if args.x0 is not None or args.y0 is not None:
        if args.x0 is None or args.y0 is None:
            raise UsageError("--x0 and --y0 go together")
        policy = (args.x0, args.y0)
    table = sim.beta_sweep(args.lam, args.alpha, args.beta_min, args.beta_max, args.beta_steps,
                           policy, burn_in=args.burn_in, window=args.window)
    rows, full = [], []
    for r in table:
        row = {"beta": r.beta, "interior_count": r.interior_count,
               "start_x": r.start.x, "start_y": r.start.y}
        row.update({k: v for k, v in _summary_row(r.start, r.summary).items()
                    if k not in ("x0", "y0")})
        rows.append(row)
        full.append(dict(row, interior=[{"x": x, "y": y, "stability": t}
                                        for x, y, t in r.interior]))
    manifest = _manifest(args, params={"lambda": args.lam, "alpha": args.alpha},
                         beta_min=args.beta_min, beta_max=args.beta_max,
                         beta_steps=args.beta_steps,
                         policy=policy if policy == "perturbed" else list(policy))
    return manifest, {"sweep": full}, SWEEP_COLUMNS, rows


BASIN_COLUMNS = ["x", "y", "attractor"]


def _grid(text, default):
    if text is None:
        return default, default
    parts = text.lower().split("x")
    try:
        vals = [int(v) for v in parts]
    except ValueError:
        raise UsageError(f"--grid expects N or NXxNY, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 2:
        raise UsageError(f"--grid needs at least 2 nodes per axis, got {text!r}")
    return vals[0], vals[1]


def cmd_basin(args):
    p, raw = _params(args)
    nx, ny = _grid(args.grid, 40)
    g = sim.basin_scan(p, tuple(args.x_range), tuple(args.y_range), nx, ny,
                       burn_in=args.burn_in, window=args.window)
    rows = [{"x": float(x), "y": float(y), "attractor": g.labels[j, i]}
            for j, y in enumerate(g.y_values) for i, x in enumerate(g.x_values)]
    data = {"x_values": g.x_values, "y_values": g.y_values, "labels": g.labels.tolist(),
            "counts": g.counts()}
    manifest = _manifest(args, p, raw, x_range=list(args.x_range), y_range=list(args.y_range),
                         grid=[nx, ny])
    return manifest, data, BASIN_COLUMNS, rows


SIM_COLUMNS = ["n", "x", "y"]


def cmd_simulate(args):
    p, raw = _params(args)
    if args.x0 is None or args.y0 is None:
        raise UsageError("--x0 and --y0 are required")
    if args.steps < 0:
        raise UsageError(f"--steps must be >= 0, got {args.steps}")
    o = orbit((args.x0, args.y0), p, args.steps)
    rows = [{"n": i, "x": float(a), "y": float(b)} for i, (a, b) in enumerate(o)]
    return _manifest(args, p, raw, steps=args.steps, x0=args.x0, y0=args.y0), \
        {"orbit": rows}, SIM_COLUMNS, rows


REGIME_COLUMNS = ["lambda", "beta", "alpha", "reproductive_number", "cooperation_excess",
                  "predicted", "on_boundary", "interior_count", "oracle_count", "consistent"]


def regime_rows(lams, betas, alphas):
    """Predicted count bound versus solver and brute-force counts on a grid."""
    rows = []
    for lam in lams:
        for beta in betas:
            for alpha in alphas:
                p = Params(float(lam), float(beta), float(alpha))
                rep = regime(p)
                n = len(interior_equilibria(p))
                m = sign_change_count(p)
                rows.append({"lambda": p.lam, "beta": p.beta, "alpha": p.alpha,
                             "reproductive_number": rep.maximal_reproductive_number,
                             "cooperation_excess": rep.cooperation_excess,
                             "predicted": rep.predicted_count_bound,
                             "on_boundary": rep.on_boundary, "interior_count": n,
                             "oracle_count": m,
                             "consistent": rep.predicted_count_bound.admits(n) and n == m})
    return rows


def cmd_regime_table(args):
    n = int(args.grid) if args.grid else 10
    if n < 2:
        raise UsageError(f"--grid must be >= 2, got {args.grid}")
    lo_l, hi_l = args.lambda_range
    if not (1 < lo_l < hi_l):
        raise UsageError(f"--lambda-range needs 1 < min < max, got {args.lambda_range}")
    bmin = args.beta_min if args.beta_min is not None else 0.01
    bmax = args.beta_max if args.beta_max is not None else 1.0
    if not (0 < bmin < bmax):
        raise UsageError(f"empty beta range: {bmin}, {bmax}")
    lo_a, hi_a = args.alpha_range
    if not (0 <= lo_a < hi_a):
        raise UsageError(f"--alpha-range needs 0 <= min < max, got {args.alpha_range}")
    lams = np.linspace(lo_l, hi_l, n)
    betas = np.linspace(bmin, bmax, n)
    alphas = np.linspace(lo_a, hi_a, n)
    rows = regime_rows(lams, betas, alphas)
    manifest = _manifest(args, lambda_range=[lo_l, hi_l], beta_range=[bmin, bmax],
                         alpha_range=[lo_a, hi_a], grid=n)
    return manifest, {"cells": rows}, REGIME_COLUMNS, rows


COMMANDS = {
    "equilibria": cmd_equilibria,
    "isoclines": cmd_isoclines,
    "classify": cmd_classify,
    "ns": cmd_ns,
    "sweep": cmd_sweep,
    "basin": cmd_basin,
    "simulate": cmd_simulate,
    "regime-table": cmd_regime_table,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--alpha", type=float, default=0.0)
    common.add_argument("--raw", action="store_true",
                        help="read --beta/--alpha as raw rates and rescale with --a, --k")
    common.add_argument("--a", type=float)
    common.add_argument("--k", type=float)
    common.add_argument("--beta-min", type=float)
    common.add_argument("--beta-max", type=float)
    common.add_argument("--beta-steps", type=int, default=41)
    common.add_argument("--grid")
    common.add_argument("--burn-in", type=int, default=sim.BURN_IN)
    common.add_argument("--window", type=int, default=sim.WINDOW)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--out")
    common.add_argument("--tol", action="append", metavar="KEY=VALUE",
                        help="override a numeric setting; keys: " + ", ".join(TOLERANCES))

    parser = argparse.ArgumentParser(prog="coophunt",
                                     description="Predator-prey map with cooperative hunting.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibria", parents=[common], help="steady states, regime, thresholds")
    iso = sub.add_parser("isoclines", parents=[common], help="tabulate y, h, f, w on [0, y_c]")
    iso.add_argument("--samples", type=int, default=201)
    iso.add_argument("--at-beta-star", action="store_true")
    for name, text in (("classify", "attractor of orbits"), ("simulate", "raw orbit")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--x0", type=float)
        sp.add_argument("--y0", type=float)
        if name == "classify":
            sp.add_argument("--trials", type=int, default=1)
        else:
            sp.add_argument("--steps", type=int, default=1000)
    nsp = sub.add_parser("ns", parents=[common], help="Neimark-Sacker point and direction")
    nsp.add_argument("--check-simulation", action="store_true")
    sw = sub.add_parser("sweep", parents=[common], help="attractor versus beta")
    sw.add_argument("--x0", type=float)
    sw.add_argument("--y0", type=float)
    bs = sub.add_parser("basin", parents=[common], help="basin-of-attraction grid")
    bs.add_argument("--x-range", type=float, nargs=2, default=(0.1, 4.5))
    bs.add_argument("--y-range", type=float, nargs=2, default=(0.05, 0.6))
    rt = sub.add_parser("regime-table", parents=[common], help="count bounds over a grid")
    rt.add_argument("--lambda-range", type=float, nargs=2, default=(1.1, 20.0))
    rt.add_argument("--alpha-range", type=float, nargs=2, default=(0.0, 20.0))
    return parser


def _emit(args, manifest, data, columns, rows):
    if args.format == "json":
        text = json_text(manifest, data)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    text = csv_text(columns, rows)
    side = json.dumps({"schema_version": SCHEMA_VERSION, "manifest": to_jsonable(manifest)},
                      sort_keys=True, allow_nan=False)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.out + ".manifest.json", "w", encoding="utf-8", newline="") as fh:
            fh.write(side + "\n")
    else:
        sys.stdout.write(text)
        sys.stderr.write(side + "\n")


def _fail(exc, code):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(rec, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = _parse_tol(args.tol)
        if args.burn_in < sim.MIN_BUDGET or args.window < sim.MIN_BUDGET:
            raise UsageError(f"--burn-in and --window must be >= {sim.MIN_BUDGET}")
        with _overrides(tol):
            result = COMMANDS[args.command](args)
            _emit(args, *result)
    except CoopHuntError as exc:
        return _fail(exc, exc.exit_code)
    except (ValueError, ArithmeticError) as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
