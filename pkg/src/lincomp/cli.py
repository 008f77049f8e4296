"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage,
parse or I/O errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    R_drift_bound,
    T_drift,
    T_functional,
    U_second_moment_check,
    V_drift_triangular,
    component_drift,
    component_drift_closed,
    projected_drift,
    second_moment_drift,
    tail_exponent_info,
    total_rate,
)
from .dynamics import ExtinctError, simulate
from .experiments import (
    ExperimentConfig,
    SupportViolation,
    export_trajectories,
    reproduce_tables,
    run_batch,
)
from .graph import EnumerationLimitError, build_graph, enumerate_limit_sets, scc_decompose, source_subgraphs
from .model import ModelParseError, ModelValidationError, load_model
from .spectral import ConvergenceError, PreconditionError, spectral_summary

log = logging.getLogger("lincomp")

DRIFT_IDS = ("drift1", "eqmart", "rdrift", "tdrift", "vdrift", "secondmoment", "umoment")
REL_TOL = 1e-9
GLOBAL_DEFAULTS = {"model": None, "seed": 0, "out_dir": None, "format": "json", "verbose": False}


class UsageError(Exception):
    pass


def _ints(text, what):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None
    return tuple(vals)


def _num(v):
    """JSON-friendly form of a number: rationals as strings, complex as ``{re, im}``."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    return v


def _vec(vs):
    return [_num(v) for v in vs]


def _emit(args, payload: dict, rows=None):
    """Print ``payload`` as JSON, or ``rows`` (list of dicts) as CSV with ``--format csv``."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()) if rows else [])
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{args.command}.{'csv' if args.format == 'csv' and rows is not None else 'json'}"
        target.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    print(text.rstrip("\n"))


def _model(args):
    if not args.model:
        raise UsageError("--model is required")
    return load_model(args.model)


# ------------------------------------------------------------------ commands


def cmd_spectrum(args):
    spec = _model(args)
    s = spectral_summary(spec)
    payload = {
        "lambda1": s.lambda1,
        "v1": _vec(s.v1),
        "lambdaN": None if s.lambdaN is None else _num(s.lambdaN),
        "vN": None if s.vN is None else _vec(s.vN),
        "spectrum": _vec(s.spectrum),
        "u": None if s.u is None else _vec(s.u),
        "gamma": _num(s.gamma),
        "regime": s.regime.value,
    }
    if s.u is not None:
        tail = tail_exponent_info(spec)
        payload["tail_epsilon"] = None if tail.epsilon is None else str(tail.epsilon)
        payload["tail_exponent"] = tail.exponent
        if tail.warning:
            payload["tail_warning"] = tail.warning
    rows = [{"index": k + 1, "re": float(v.real), "im": float(v.imag)} for k, v in enumerate(s.spectrum)]
    _emit(args, payload, rows)
    return 0


def cmd_enumerate(args):
    spec = _model(args)
    g = build_graph(spec.matrix)
    dec = scc_decompose(g)
    cat = enumerate_limit_sets(spec.matrix)
    labels = lambda comp: sorted(v + 1 for v in comp)  # noqa: E731
    payload = {
        "edges": g.labelled_edges(),
        "components": [labels(c) for c in dec.components],
        "condensation": sorted([k + 1, l + 1] for k, l in dec.condensation),
        "sources": [labels(c) for c in source_subgraphs(dec)],
        "count": cat.count,
        "limit_sets": [list(s.labels()) for s in cat],
    }
    rows = [{"limit_set": str(s)} for s in cat]
    _emit(args, payload, rows)
    return 0


def cmd_simulate(args):
    spec = _model(args)
    init = _ints(args.init, "--init") if args.init else spec.initial
    if init is None:
        raise UsageError("--init is required when the model file has no initial state")
    if args.max_steps is None and args.max_time is None:
        raise UsageError("give --max-steps and/or --max-time")
    config = ExperimentConfig(spec, init, args.replicates, args.max_steps, args.seed)
    reasons = {}
    for r in range(args.replicates):
        tr = simulate(spec, init, max_steps=args.max_steps, max_time=args.max_time, seed=args.seed, replicate=r, record=False)
        key = tr.stop_reason.value
        reasons[key] = reasons.get(key, 0) + 1
    payload = {"replicates": args.replicates, "stop_reasons": reasons}
    if args.out:
        if args.max_steps is None:
            raise UsageError("--out needs --max-steps")
        path = export_trajectories(config, args.out, max_steps=args.max_steps)
        payload["trajectories"] = str(path)
    print(json.dumps(payload, indent=2))
    return 0


def _close(lhs, rhs):
    if isinstance(lhs, Fraction) and isinstance(rhs, Fraction):
        return lhs == rhs
    return abs(complex(lhs) - complex(rhs)) <= REL_TOL * max(1.0, abs(complex(lhs)), abs(complex(rhs)))


def _drift_checks(spec, state, ids):
    from .spectral import compute_u, is_subcritical_exact, min_real_eigenpair, perron_root

    out = []
    positive = all(state)

    def add(name, lhs, rhs, ok, note=""):
        out.append({"id": name, "lhs": _num(lhs), "rhs": _num(rhs), "status": "PASS" if ok else "FAIL", "note": note})

    def skip(name, why):
        out.append({"id": name, "lhs": None, "rhs": None, "status": "SKIP", "note": why})

    if "drift1" in ids:
        if positive:
            lhs, rhs = component_drift(state, spec), component_drift_closed(state, spec)
            for i in range(spec.n):
                add(f"drift1[{i + 1}]", lhs[i], rhs[i], lhs[i] == rhs[i])
        else:
            skip("drift1", "state has a zero component")
    if "eqmart" in ids and not positive:
        skip("eqmart", "state has a zero component")
    elif "eqmart" in ids:
        lam1, v1 = perron_root(spec.matrix)
        pairs = [("v1", list(v1), lam1)]
        if lam1 > 0:
            lamN, vN = min_real_eigenpair(spec.matrix)
            pairs.append(("vN", list(vN), lamN))
        for name, v, lam in pairs:
            lhs, rhs = projected_drift(state, spec, v, lam)
            add(f"eqmart[{name}]", lhs, rhs, _close(lhs, rhs), "float, 1e-9 relative")
    if "rdrift" in ids:
        if positive:
            lhs, a = R_drift_bound(state, spec)
            add("rdrift", lhs, a, lhs <= a, "E[dR] <= alpha")
        else:
            skip("rdrift", "state has a zero component")
    if "tdrift" in ids:
        if not positive:
            skip("tdrift", "state has a zero component")
        elif not is_subcritical_exact(spec.alpha, spec.matrix):
            skip("tdrift", "needs lambda1 < alpha")
        else:
            u = compute_u(spec.alpha, spec.matrix)
            d = T_drift(state, spec, u)
            add("tdrift", d, spec.alpha, d == spec.alpha, "E[dT] = alpha")
            t, r = T_functional(state, spec, u), total_rate(state, spec)
            add("tr", t, r, t >= r, "T >= R")
    if "vdrift" in ids:
        m = spec.matrix
        if spec.n == 2 and m[0, 1] == 0 and m[1, 0] > 0 and spec.alpha == 1 and positive and sum(state) > 1:
            closed, enum = V_drift_triangular(state[0], state[1], m[1, 0])
            add("vdrift", enum, closed, enum == closed)
        else:
            skip("vdrift", "needs the two-type model where only 1 kills 2, alpha=1, state > 0")
    if "secondmoment" in ids:
        if positive:
            for i in range(spec.n):
                for j in range(i, spec.n):
                    brute, closed = second_moment_drift(state, spec, i, j)
                    add(f"secondmoment[{i + 1},{j + 1}]", brute, closed, brute == closed)
        else:
            skip("secondmoment", "state has a zero component")
    if "umoment" in ids:
        lam1, _ = perron_root(spec.matrix)
        if positive and lam1 > 0:
            lhs, rhs = U_second_moment_check(state, spec)
            add("umoment", lhs, rhs, lhs >= rhs - REL_TOL * max(1.0, abs(rhs)), "lhs >= rhs")
        else:
            skip("umoment", "needs lambda1 > 0 and state > 0")
    return out


def cmd_drift_check(args):
    spec = _model(args)
    if not args.state:
        raise UsageError("--state is required")
    state = _ints(args.state, "--state")
    if len(state) != spec.n:
        raise UsageError(f"--state has {len(state)} entries, model has {spec.n}")
    ids = DRIFT_IDS if args.all or not args.id else tuple(args.id)
    results = _drift_checks(spec, state, ids)
    if args.format == "csv":
        _emit(args, {}, results)
    else:
        for r in results:
            print(f"{r['status']:4}  {r['id']:<20} lhs={r['lhs']} rhs={r['rhs']} {r['note']}".rstrip())
    return 1 if any(r["status"] == "FAIL" for r in results) else 0


def cmd_batch(args):
    spec = _model(args)
    init = _ints(args.init, "--init") if args.init else spec.initial
    if init is None:
        raise UsageError("--init is required when the model file has no initial state")
    out = Path(args.out_dir) if args.out_dir else None
    config = ExperimentConfig(
        spec, init, args.replicates, args.step_cap, args.seed, summary_path=None if out is None else out / "summary.json"
    )
    try:
        summary = run_batch(config)
    except SupportViolation as exc:
        print(f"FAIL support: {exc}")
        return 1
    d = summary.to_dict()
    d.pop("sigma_samples")
    print(json.dumps(d, indent=2, sort_keys=True))
    status = 0
    if args.max_mean_sigma is not None:
        m = summary.sigma_mean
        ok = m is not None and m <= args.max_mean_sigma and summary.censored_count == 0
        print(f"{'PASS' if ok else 'FAIL'} mean sigma {m} <= {args.max_mean_sigma}, censored {summary.censored_count}")
        status = 0 if ok else 1
    return status


def cmd_tables(args):
    betas = args.betas.split(",")
    cells = reproduce_tables(args.n_min, args.n_max, betas)
    rows = [c.to_dict() for c in cells]
    if args.format == "csv":
        _emit(args, {}, rows)
    else:
        for r in rows:
            b = "" if r["beta"] is None else f" beta={r['beta']:g}"
            print(f"{r['status']}  {r['family']:<6} N={r['n']:<3}{b:<11} {r['quantity']:<8} computed={r['computed']!r} expected={r['expected']!r}")
        if args.out_dir:
            _emit(args, {"cells": rows}, None)
    return 1 if any(not c.passed for c in cells) else 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default=argparse.SUPPRESS, help="model JSON file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    common.add_argument("--json", dest="format", action="store_const", const="json", default=argparse.SUPPRESS)
    common.add_argument("--csv", dest="format", action="store_const", const="csv", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="lincomp", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="Perron root, extreme eigenpairs, regime")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("enumerate", parents=[common], help="SCCs, source subgraphs and admissible survivor sets")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("simulate", parents=[common], help="sample trajectories and export them to CSV")
    s.add_argument("--init", help="initial state, e.g. 50,50")
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--max-steps", type=int)
    s.add_argument("--max-time", type=float)
    s.add_argument("--out", help="trajectory CSV path")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("drift-check", parents=[common], help="exact one-step drift identities at a state")
    s.add_argument("--state", help="state, e.g. 2,3")
    s.add_argument("--all", action="store_true")
    s.add_argument("--id", action="append", choices=DRIFT_IDS)
    s.set_defaults(func=cmd_drift_check)

    s = sub.add_parser("batch", parents=[common], help="extinction-time and survivor-set statistics")
    s.add_argument("--init")
    s.add_argument("--replicates", type=int, default=100)
    s.add_argument("--step-cap", type=int)
    s.add_argument("--max-mean-sigma", type=float, help="fail unless every run is uncensored with mean sigma at most this")
    s.set_defaults(func=cmd_batch)

    s = sub.add_parser("tables", parents=[common], help="limit-set counts and eigenvalues versus closed forms")
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=12)
    s.add_argument("--betas", default="1/2,1,2")
    s.set_defaults(func=cmd_tables)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    # the shared flags may appear before or after the subcommand, so their
    # defaults are filled in here rather than on the (shared) actions
    for name, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, value)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (PreconditionError, ConvergenceError, ExtinctError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ModelParseError, ModelValidationError, EnumerationLimitError, OSError, ValueError) as exc:
        loc = getattr(exc, "location", None)
        print(f"error: {exc}" + (f" at {loc}" if loc and str(loc) not in str(exc) else ""), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
