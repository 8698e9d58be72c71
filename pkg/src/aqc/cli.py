"""Command-line front end.

Subcommands: check-operator, korn, counterexample, quasiconvexity,
minimize, render.  Reports are written as deterministic report.json
(sorted keys, no timestamps; run metadata goes to run_meta.json) plus TSV
plot data where applicable.  Exit codes: 0 success, 2 when a sampled check
produced a violation verdict, 1 on errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import builtin_operator, load_operator
from .counterexamples import korn_failure_experiment
from .errors import AqcError
from .fields import GridField, random_band_limited_field, read_aqcf, write_aqcf
from .multipliers import korn_modular_ratio
from .nfunctions import parse_nfunction
from .operators import check_ellipticity, essential_range
from .solve import EnergyProblem, SolverConfig, minimize
from .util import make_rng
from .variational import (check_hypotheses, scaled_vp_integrand,
                          concave_toy_integrand, test_strong_quasiconvexity,
                          vp_integrand)

# Stable one-line descriptions of what each reported check verifies.
ANCHORS = {
    "elliptic": "symbol injectivity at every nonzero frequency (sphere-sampled minimum singular value)",
    "constant_rank": "symbol rank independent of the frequency direction",
    "range_dim": "dimension of the linear hull of the pure tensors",
    "korn_ratio": "modular bound of the full derivative by the operator part on the torus",
    "counterexample": "plane-wave blow-up of the derivative/operator ratio along a symbol-kernel direction",
    "quasiconvexity": "sampled coercive increment against compactly supported test fields",
    "hypotheses": "growth, smoothness and pure-tensor convexity of the energy density",
    "minimize": "descent to a discrete local minimiser with monotone energy trace",
}


def _resolve_operator(args):
    if getattr(args, "builtin", None):
        return builtin_operator(args.builtin)
    if getattr(args, "operator", None):
        return load_operator(args.operator)
    raise AqcError("one of --builtin or --operator is required")


def _emit(outdir: Path, report: dict, quiet: bool) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    meta = {"written_at": time.strftime("%Y-%m-%dT%H:%M:%S"), "tool_version": __version__}
    with open(outdir / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not quiet:
        sys.stdout.write(render_report(report) + "\n")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render_report(report: dict) -> str:
    """Deterministic human-readable rendering of a report dictionary."""
    if not report:
        raise AqcError("empty report")
    lines = [f"aqc report: {report.get('command', '?')}"]
    for key in sorted(report):
        if key == "command":
            continue
        value = report[key]
        if isinstance(value, dict):
            lines.append(f"  {key}:")
            for sub in sorted(value):
                lines.append(f"    {sub}: {value[sub]}")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"  {key}: ({len(value)} rows)")
            for row in value:
                cells = ", ".join(f"{k}={row[k]}" for k in sorted(row))
                lines.append(f"    {cells}")
        else:
            lines.append(f"  {key}: {value}")
    anchor = ANCHORS.get(report.get("kind", ""), None)
    if anchor:
        lines.append(f"  statement: {anchor}")
    return "\n".join(lines)


def cmd_check_operator(args) -> int:
    op = _resolve_operator(args)
    rep = check_ellipticity(op, sphere_samples=args.samples)
    dec = essential_range(op)
    report = {
        "command": "check-operator",
        "kind": "elliptic",
        "operator": op.name or "operator",
        "n": op.n, "N": op.N, "l": op.l, "m": op.m,
        "elliptic": bool(rep.elliptic),
        "constant_rank": bool(rep.constant_rank),
        "rank": rep.rank_value,
        "min_sigma": rep.min_sigma,
        "operator_norm": rep.operator_norm,
        "range_dim": dec.dim,
        "samples": rep.samples,
    }
    if not rep.elliptic:
        report["witness_xi"] = _jsonable(rep.witness_xi)
        report["witness_kernel_vector"] = _jsonable(rep.witness_kernel_vector)
    _emit(Path(args.out), report, args.json)
    return 0


def cmd_korn(args) -> int:
    op = _resolve_operator(args)
    psi = parse_nfunction(args.psi)
    rng = make_rng(args.seed, stream=1)
    shape = (args.grid,) * op.n
    kmax = min(3, args.grid // 4)
    ratios = []
    for _ in range(args.fields):
        fld = random_band_limited_field(op.N, shape, kmax, rng)
        ratios.append(korn_modular_ratio(op, psi, fld).ratio)
    report = {
        "command": "korn",
        "kind": "korn_ratio",
        "operator": op.name or "operator",
        "psi": args.psi,
        "grid": args.grid,
        "fields": args.fields,
        "seed": args.seed,
        "max_ratio": max(ratios),
        "min_ratio": min(ratios),
        "mean_ratio": float(np.mean(ratios)),
    }
    _emit(Path(args.out), report, args.json)
    return 0


def cmd_counterexample(args) -> int:
    op = _resolve_operator(args)
    psi = parse_nfunction(args.psi)
    rows = korn_failure_experiment(op, psi, args.imax)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "blowup.tsv", "w", encoding="utf-8") as fh:
        fh.write("# i\tlhs\trhs\tratio\n")
        for row in rows:
            fh.write(f"{row['i']}\t{row['lhs']:.12e}\t{row['rhs']:.12e}\t{row['ratio']:.12e}\n")
    report = {
        "command": "counterexample",
        "kind": "counterexample",
        "operator": op.name or "operator",
        "psi": args.psi,
        "table": [_jsonable(r) for r in rows],
        "ratio_growth": rows[-1]["ratio"] / rows[0]["ratio"],
    }
    _emit(outdir, report, args.json)
    return 0


def _integrand_from_spec(spec: str, zdim: int):
    parts = spec.split(":")
    kind = parts[0]
    if kind == "vp":
        return vp_integrand(float(parts[1]), zdim)
    if kind == "scaled_vp":
        sigma = float(parts[2]) if len(parts) > 2 else 0.3
        return scaled_vp_integrand(float(parts[1]), zdim, modulus_exponent=sigma)
    if kind == "concave_toy":
        return concave_toy_integrand(zdim)
    raise AqcError(f"unknown integrand spec {spec!r}")


def cmd_quasiconvexity(args) -> int:
    op = _resolve_operator(args)
    F = _integrand_from_spec(args.integrand, op.l)
    hyp = check_hypotheses(F, op, seed=args.seed)
    qc = test_strong_quasiconvexity(F, op, seed=args.seed)
    report = {
        "command": "quasiconvexity",
        "kind": "quasiconvexity",
        "operator": op.name or "operator",
        "integrand": args.integrand,
        "seed": args.seed,
        "hypotheses": {k: _jsonable(v) for k, v in hyp.entries.items()},
        "hypotheses_passed": bool(hyp.passed),
        "nu": qc.nu if np.isfinite(qc.nu) else repr(qc.nu),
        "verdict": qc.verdict,
        "violation": _jsonable(qc.violation),
    }
    _emit(Path(args.out), report, args.json)
    return 2 if (qc.verdict == "violates" or not hyp.passed) else 0


def cmd_minimize(args) -> int:
    with open(args.problem, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AqcError(
                f"{args.problem}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    opspec = spec["operator"]
    if isinstance(opspec, str):
        op = builtin_operator(opspec)
    else:
        from .catalog import operator_from_json
        op = operator_from_json(opspec)
    integrand_spec = spec["integrand"]
    F = _integrand_from_spec(
        ":".join(str(integrand_spec[k]) for k in ("kind", "p") if k in integrand_spec),
        op.l,
    )
    dom = spec["domain"]
    shape = tuple(int(s) for s in dom["shape"])
    datum = None
    if "datum" in dom and dom["datum"]:
        datum_path = Path(args.problem).parent / dom["datum"]
        kind = "torus" if dom["type"] == "torus" else "box"
        spacing = None if kind == "torus" else tuple(1.0 / (s - 1) for s in shape)
        datum = read_aqcf(datum_path, kind=kind, spacing=spacing)
    solver = spec.get("solver", {})
    cfg = SolverConfig(max_iter=int(solver.get("max_iter", 1000)),
                       tol=float(solver.get("tol", 1e-8)),
                       seed=int(solver.get("seed", args.seed)))
    problem = EnergyProblem(op=op, integrand=F, domain=dom["type"], shape=shape, datum=datum)
    result = minimize(problem, cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_aqcf(result.u, outdir / "solution.aqcf")
    with open(outdir / "trace.tsv", "w", encoding="utf-8") as fh:
        fh.write("# iteration\tenergy\n")
        for i, e in enumerate(result.trace):
            fh.write(f"{i}\t{e:.12e}\n")
    report = {
        "command": "minimize",
        "kind": "minimize",
        "operator": op.name or "operator",
        "domain": dom["type"],
        "shape": list(shape),
        "energy": result.energy,
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "grad_norm": result.grad_norm,
        "reason": result.reason,
    }
    _emit(outdir, report, args.json)
    return 0


def cmd_render(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        try:
            report = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AqcError(f"{args.report}: invalid JSON: {exc.msg}") from exc
    sys.stdout.write(render_report(report) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, operator=True):
        if operator:
            p.add_argument("--builtin", help="builtin operator name, e.g. symmetric_gradient:2")
            p.add_argument("--operator", help="path to an operator definition JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="aqc-out")
        p.add_argument("--json", action="store_true", help="suppress the text summary")

    p = sub.add_parser("check-operator", help="ellipticity / constant rank / range report")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_check_operator)

    p = sub.add_parser("korn", help="modular ratio sweep over random periodic fields")
    common(p)
    p.add_argument("--psi", default="power:2")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--fields", type=int, default=100)
    p.set_defaults(func=cmd_korn)

    p = sub.add_parser("counterexample", help="plane-wave blow-up table for a non-elliptic operator")
    common(p)
    p.add_argument("--psi", default="power:2")
    p.add_argument("--imax", type=int, default=6)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("quasiconvexity", help="hypothesis checks and sampled quasiconvexity")
    common(p)
    p.add_argument("--integrand", default="vp:2")
    p.set_defaults(func=cmd_quasiconvexity)

    p = sub.add_parser("minimize", help="solve a problem definition JSON")
    p.add_argument("problem", help="problem definition file")
    common(p, operator=False)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("render", help="render a report.json as text")
    p.add_argument("report")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AqcError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
