"""Command-line front end: bound, scan, oracle, export, compare.

Every output artifact embeds the full run configuration, so a run is
reconstructible from any of its outputs.  Amplitude/frequency/noise flags
accept exact rationals ("3/10") as well as decimal strings ("0.3", parsed
as the exact decimal fraction).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

from .analysis import Interval, find_peak, scan_noise
from .model import ForcedDoubleWellParams, SdeModel, lift_forced_double_well
from .poly import Polynomial, parse_polynomial
from .sdp import SolverSettings, assemble, bound_pair
from .sdpa import write_sdpa
from .oracles import EmSettings, FpSettings, boltzmann_moments, em_simulate, fp_solve


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _parse_grid(spec: str) -> list[Fraction]:
    """Grid spec 'start:step:stop' (inclusive), exact rational arithmetic."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:step:stop, got {spec!r}")
    start, step, stop = (Fraction(p) for p in parts)
    if step <= 0 or stop < start:
        raise UsageError(f"grid {spec!r} must increase")
    grid = []
    v = start
    while v <= stop:
        grid.append(v)
        v += step
    return grid


def _objective(token: str, model: SdeModel) -> tuple[str, Polynomial]:
    """Map an objective token (P, a1, b1, x<k>, or a polynomial) to a polynomial."""
    named = {"P": (2, 0, 0), "x2": (2, 0, 0), "a1": (1, 1, 0), "b1": (1, 0, 1)}
    if model.nvars == 3 and token in named:
        return token if token != "x2" else "P", Polynomial.monomial(named[token])
    m = re.fullmatch(r"x(\d+)", token)
    if m and model.nvars == 3:
        alpha = (int(m.group(1)),) + (0,) * (model.nvars - 1)
        return token, Polynomial.monomial(alpha)
    try:
        return token, parse_polynomial(token, model.nvars, model.names())
    except ValueError as exc:
        raise UsageError(f"cannot interpret objective {token!r}: {exc}") from exc


def _params(args) -> ForcedDoubleWellParams:
    try:
        return ForcedDoubleWellParams(args.A, args.Omega, args.D)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _model(args) -> SdeModel:
    if getattr(args, "model_file", None):
        return SdeModel.load(args.model_file)
    return lift_forced_double_well(_params(args))


def _config(args) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        cfg[key] = str(value) if isinstance(value, Fraction) else value
    return cfg


def _settings(args) -> SolverSettings:
    return SolverSettings(tol_feas=args.tol_feas, tol_gap=args.tol_gap,
                          max_iter=args.max_iter)


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(args) -> int:
    model = _model(args)
    settings = _settings(args)
    results = []
    exit_code = 0
    for token in args.objective:
        name, poly = _objective(token, model)
        try:
            t0 = time.perf_counter()
            bound = bound_pair(model, args.d, poly, settings, name=name)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        wall = time.perf_counter() - t0
        print(f"{name}: [{bound.lower:.10g}, {bound.upper:.10g}] d={args.d} "
              f"status={bound.status_lower.value}/{bound.status_upper.value} "
              f"({wall:.1f}s)")
        results.append(bound.to_dict())
        if not bound.rigorous:
            exit_code = 1
    _write_json(args.output, {"config": _config(args), "bounds": results})
    return exit_code


def cmd_scan(args) -> int:
    grid = _parse_grid(args.grid)
    template = _params(argparse.Namespace(A=args.A, Omega=args.Omega, D=grid[0]))
    settings = _settings(args)
    t0 = time.perf_counter()
    oracle = None
    if args.with_oracle == "fp":
        oracle = lambda p: fp_solve(p, FpSettings())
    elif args.with_oracle == "em":
        oracle = lambda p: em_simulate(p, EmSettings.defaults(float(p.Omega), seed=args.seed))
    table = scan_noise(template, grid, args.d, settings, jobs=args.jobs, oracle=oracle)
    print(f"scan: {len(table.rows)} rows at d={args.d} in {time.perf_counter() - t0:.1f}s")
    config = _config(args)
    csv_text = "".join(f"# {line}\n" for line in
                       json.dumps({"config": config}, sort_keys=True).splitlines())
    csv_text += table.to_csv(oracle_columns=oracle is not None)
    Path(f"{args.output_prefix}.csv").write_text(csv_text)
    payload = table.to_dict()
    payload["config"] = config
    Path(f"{args.output_prefix}.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    try:
        peak = find_peak(table, "B2")
        flag = "interior" if peak.interior else "grid endpoint (not a resonance peak)"
        print(f"peak: B2 lower bound maximal at D={peak.D_star:g} "
              f"(value {peak.value:.6g}, {flag})")
    except ValueError as exc:
        print(f"peak: {exc}")
    n_ok = sum(row.all_optimal for row in table.rows)
    return 0 if n_ok >= 0.9 * len(table.rows) else 1


def cmd_oracle(args) -> int:
    if args.method == "quad":
        orders = [int(k) for k in args.orders.split(",")]
        try:
            moments = boltzmann_moments(args.D, orders)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        _write_json(args.output, {"config": _config(args), "method": "quad",
                                  "moments": {str(k): v for k, v in moments.items()}})
        return 0
    params = _params(args)
    if args.method == "em":
        settings = EmSettings.defaults(float(params.Omega), seed=args.seed,
                                       n_paths=args.n_paths, periods=args.periods)
        estimate = em_simulate(params, settings)
        extras = None
    else:
        estimate, extras = fp_solve(params, FpSettings(n_grid=args.n_grid), return_extras=True)
    _write_json(args.output, {"config": _config(args), **estimate.to_dict()})
    if extras is not None and args.dump_trajectory:
        lines = ["t,mean_x,mean_x2"]
        lines += [f"{t:.17g},{mx:.17g},{mx2:.17g}" for t, mx, mx2 in
                  zip(extras["t"], extras["mean_x"], extras["mean_x2"])]
        Path(args.dump_trajectory).write_text("\n".join(lines) + "\n")
    if extras is not None and args.dump_density:
        lines = ["x,p"]
        lines += [f"{x:.17g},{p:.17g}" for x, p in zip(extras["x"], extras["density"])]
        Path(args.dump_density).write_text("\n".join(lines) + "\n")
    if not estimate.converged:
        print("oracle: NOT converged within settings", file=sys.stderr)
        return 1
    return 0


def cmd_export(args) -> int:
    model = _model(args)
    name, poly = _objective(args.objective, model)
    try:
        problem = assemble(model, args.d, poly, args.sense)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    comments = [f"config={json.dumps(_config(args), sort_keys=True)}"]
    write_sdpa(problem, args.output, comments)
    print(f"export: {args.output} (block {problem.psd_dim}, "
          f"{problem.index.n_moments} moment variables, "
          f"{len(problem.equality_rows)} equality rows)")
    return 0


def cmd_compare(args) -> int:
    data = json.loads(Path(args.scan).read_text())
    A = Fraction(data["meta"]["A"])
    Omega = Fraction(data["meta"]["Omega"])
    violations = 0
    report = []
    for row in data["rows"]:
        D = row["D"]
        params = ForcedDoubleWellParams(A, Omega, Fraction(str(D)).limit_denominator(10**12))
        if args.method == "fp":
            est = fp_solve(params, FpSettings(n_grid=args.n_grid))
            widen = est.error_proxy
        else:
            est = em_simulate(params, EmSettings.defaults(float(Omega), seed=args.seed))
            widen = {k: 3 * v for k, v in est.std_err.items()}
        entry = {"D": D, "violations": {}}
        for name in ("P", "a1", "b1"):
            iv = Interval(row["bounds"][name]["lower"], row["bounds"][name]["upper"])
            value = getattr(est, name if name != "P" else "P")
            if not iv.contains(value, widen[name]):
                entry["violations"][name] = {
                    "oracle": value, "interval": [iv.lo, iv.hi], "widened_by": widen[name]}
                violations += 1
        report.append(entry)
        status = "ok" if not entry["violations"] else f"VIOLATION {list(entry['violations'])}"
        print(f"D={D:g}: {status}")
    _write_json(args.output, {"config": _config(args), "rows": report,
                              "n_violations": violations})
    return 0 if violations == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_params(p, with_D=True):
    p.add_argument("--A", type=_fraction, default=Fraction(3, 10),
                   help="forcing amplitude (rational or decimal string)")
    p.add_argument("--Omega", type=_fraction, default=Fraction(1, 2),
                   help="forcing angular frequency")
    if with_D:
        p.add_argument("--D", type=_fraction, default=Fraction(1, 2),
                       help="noise intensity")


def _add_solver(p):
    p.add_argument("--d", type=int, default=8, help="relaxation degree")
    p.add_argument("--tol-feas", type=float, default=1e-8)
    p.add_argument("--tol-gap", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srbounds",
        description="Rigorous bounds on stochastic-resonance observables of "
                    "the periodically forced double-well SDE")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="two-sided bounds on observables at one D")
    _add_params(p)
    _add_solver(p)
    p.add_argument("--objective", action="append", default=None,
                   help="P | a1 | b1 | x<k> | polynomial (repeatable)")
    p.add_argument("--model-file", help="JSON model description instead of the built-in lift")
    p.add_argument("--output", help="write BoundResult JSON here (default: stdout)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("scan", help="bounds over a grid of noise intensities")
    _add_params(p, with_D=False)
    _add_solver(p)
    p.add_argument("--grid", default="1/20:1/20:1",
                   help="D grid as start:step:stop (default 20 points in [0.05, 1])")
    p.add_argument("--jobs", type=int, default=1, help="concurrent scan rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-oracle", choices=["fp", "em"], default=None)
    p.add_argument("--output-prefix", default="scan")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("oracle", help="run a numerical baseline")
    p.add_argument("method", choices=["em", "fp", "quad"])
    _add_params(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-paths", type=int, default=100)
    p.add_argument("--periods", type=int, default=392, help="EM averaging periods")
    p.add_argument("--n-grid", type=int, default=2001, help="FP spatial grid points")
    p.add_argument("--orders", default="2,4", help="quad: comma-separated even orders")
    p.add_argument("--dump-trajectory", help="FP: write final-period (t, mean_x, mean_x2) CSV")
    p.add_argument("--dump-density", help="FP: write final (x, p) CSV")
    p.add_argument("--output", help="write estimate JSON here (default: stdout)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export", help="write the relaxation in sparse SDPA format")
    _add_params(p)
    _add_solver(p)
    p.add_argument("--objective", default="a1")
    p.add_argument("--sense", choices=["min", "max"], default="min")
    p.add_argument("--model-file")
    p.add_argument("--output", default="problem.dat-s")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("compare", help="check oracle values against a scan's intervals")
    p.add_argument("--scan", required=True, help="scan JSON produced by the scan command")
    p.add_argument("--method", choices=["fp", "em"], default="fp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-grid", type=int, default=2001)
    p.add_argument("--output", help="write comparison JSON here (default: stdout)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bound" and not args.objective:
        args.objective = ["P", "a1", "b1"]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
