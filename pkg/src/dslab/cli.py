"""Command-line front end.

Every command writes deterministic CSV or JSON to ``--out`` (or stdout).
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 a verification
check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from dslab.model import ModelParams, sample
from dslab.quadrature import QuadratureError, QuadratureSpec

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4

DEFAULTS = {
    "m": 1.0,
    "p": "1",
    "omega": "0.5",
    "mu": 2.0,
    "grid_x": None,
    "grid_n": 1024,
    "tol": 1e-13,
    "workers": None,
    "out": None,
    "format": None,
}


class InputError(ValueError):
    pass


# --- parsing helpers ----------------------------------------------------------


def parse_range(text) -> list[float]:
    """'v' -> [v]; 'a:b:n' -> n points from a to b inclusive; 'a,b,c' -> list."""
    if isinstance(text, (int, float)):
        return [float(text)]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise InputError(f"range must be start:stop:count, got {text!r}")
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise InputError(f"range count must be >= 1, got {n}")
            return [a] if n == 1 else np.linspace(a, b, n).tolist()
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"cannot parse {text!r} as a number or range") from exc


def scalar(text, name: str) -> float:
    vals = parse_range(text)
    if len(vals) != 1:
        raise InputError(f"--{name} takes a single value for this command")
    return vals[0]


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        return max(1, int(flag))
    env = os.environ.get("DSL_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"DSL_WORKERS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Order-preserving map; results never depend on the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def make_params(args, p=None, omega=None, mu=None) -> ModelParams:
    try:
        return ModelParams(
            p=scalar(args.p, "p") if p is None else p,
            omega=scalar(args.omega, "omega") if omega is None else omega,
            m=float(args.m),
            mu=float(args.mu) if mu is None else mu,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def make_grid(args, params: ModelParams):
    from dslab.operators import Grid

    try:
        if args.grid_x is not None:
            return Grid(float(args.grid_x), int(args.grid_n))
        return Grid.default(params, int(args.grid_n))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def emit(args, text: str, default_format: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "emit_plotscript", False) and args.out and default_format == "csv":
        script = plotscript(args.command, Path(args.out))
        if script:
            Path(args.out).with_suffix(".gp").write_text(script)


def plotscript(command: str, csv_path: Path) -> str | None:
    name = csv_path.name
    head = f"set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo\nset output '{csv_path.stem}.png'\n"
    if command == "soliton":
        return head + f"plot '{name}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n"
    if command in ("vk-scan",):
        return head + (f"set xlabel 'p'\nset ylabel 'omega/m'\n"
                       f"plot '{name}' using 1:($3<0?$2:1/0) with points title 'VK holds', "
                       f"'' using 1:($9>0?$2:1/0) with points title 'certified'\n")
    if command == "regions":
        return head + (f"set xlabel 'p'\nset ylabel 'omega/m'\n"
                       f"plot '{name}' using 1:2 with lines, '' using 1:3 with lines, '' using 1:4 with lines\n")
    if command == "nonrel":
        return head + f"set logscale xy\nplot '{name}' using 3:7 with linespoints\n"
    return None


def csv_text(header: list[str], rows: list[list]) -> str:
    from dslab.stability import fmt

    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join("" if v is None else (v if isinstance(v, str) else fmt(v)) for v in r))
    return "\n".join(lines) + "\n"


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o)}")


# --- commands -----------------------------------------------------------------


def cmd_soliton(args) -> int:
    params = make_params(args)
    from dslab.operators import default_half_width

    x_max = float(args.grid_x) if args.grid_x is not None else default_half_width(params)
    n = int(args.samples)
    if n < 2:
        raise InputError("--samples must be >= 2")
    # mirror the positive half so that u(-x) = -u(x) holds exactly in the output
    half = np.linspace(0.0, x_max, (n + 1) // 2) if n % 2 else x_max * (np.arange(n // 2) + 0.5) / (n // 2 - 0.5)
    xs = np.concatenate([-half[:0:-1], half]) if n % 2 else np.concatenate([-half[::-1], half])
    s = sample(params, xs)
    fmt_ = args.format or "csv"
    if fmt_ == "json":
        text = dumps({"schema": 1, "params": params.as_dict(), "x": s.x, "v": s.v, "u": s.u,
                      "density_p": s.density_p, "M": s.M})
    else:
        text = csv_text(["x", "v", "u", "density_p", "M"], [list(r) for r in zip(s.x, s.v, s.u, s.density_p, s.M)])
    emit(args, text, fmt_)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from dslab.operators import assemble_L
    from dslab.spectra import h_spectrum, hermitian_spectrum

    params = make_params(args)
    grid = make_grid(args, params)
    delta = None if args.delta is None else float(args.delta)
    if args.op == "L":
        rep = hermitian_spectrum(assemble_L(params, grid), delta=delta)
    else:
        rep = h_spectrum(params, grid, delta=delta)
    data = rep.to_json()
    if not args.timings:
        data["meta"]["elapsed_ms"] = None
    if args.gap_only:
        data["eigenvalues"] = [e for e in data["eigenvalues"] if e["class"] == "gap_point"]
    fmt_ = args.format or "json"
    if fmt_ == "csv":
        rows = [[e["re"], e["im"], e["residual"], e["class"], e["localization"]] for e in data["eigenvalues"]]
        text = csv_text(["re", "im", "residual", "class", "localization"], rows)
    else:
        text = dumps(data)
    emit(args, text, fmt_)
    return EXIT_OK


def _verdict_row(item):
    p, w, m, mu, tol = item
    from dslab.stability import region_classify

    return region_classify(p, w * m, m=m, mu=mu, quad=QuadratureSpec(tol=tol))


def _scan_items(args):
    ps, ws = parse_range(args.p), parse_range(args.omega)
    m, mu, tol = float(args.m), float(args.mu), float(args.tol)
    for w in ws:
        if not 0 < w < 1:
            raise InputError(f"omega/m must lie in (0, 1), got {w}")
    for p in ps:
        if not p > 0:
            raise InputError(f"p must be positive, got {p}")
    return [(p, w, m, mu, tol) for p in ps for w in ws]


def cmd_vk_scan(args) -> int:
    from dslab.stability import region_csv

    items = sorted(_scan_items(args))
    verdicts = parallel_map(_verdict_row, items, resolve_workers(args.workers))
    fmt_ = args.format or "csv"
    if fmt_ == "json":
        text = dumps({"schema": 1, "rows": [v.as_row() for v in verdicts]})
    else:
        text = region_csv(verdicts)
    emit(args, text, fmt_)
    return EXIT_OK


def cmd_regions(args) -> int:
    from dslab.stability import IMPROVED_BETA_1, beta_thresholds, p_circ, p_star

    mu = float(args.mu)
    if not mu > 0:
        raise InputError("--mu must be positive for threshold curves")
    ps = sorted(parse_range(args.p))
    if any(p <= 0 for p in ps):
        raise InputError("p must be positive")
    if args.table == "verdicts":
        return cmd_vk_scan(args)
    rows = []
    for p in ps:
        t = beta_thresholds(p, mu)
        rows.append([p, t.beta, t.omega_circ, t.omega_star, IMPROVED_BETA_1 if p == 1.0 and mu == 2.0 else None])
    fmt_ = args.format or "csv"
    if fmt_ == "json":
        text = dumps({"schema": 1, "mu": mu, "p_circ": p_circ(mu), "p_star": p_star(mu),
                      "rows": [dict(zip(["p", "beta", "omega_circ", "omega_star", "beta_improved"], r)) for r in rows]})
    else:
        from dslab.stability import fmt

        meta = f"# mu={fmt(mu)} p_circ={fmt(p_circ(mu))} p_star={fmt(p_star(mu))}\n"
        text = meta + csv_text(["p", "beta", "omega_circ", "omega_star", "beta_improved"], rows)
    emit(args, text, fmt_)
    return EXIT_OK


def _ladder_item(item):
    p, k, m, mu, grid_n = item
    from dslab.asymptotics import compare_to_spectrum, params_for_kappa
    from dslab.operators import Grid

    params = params_for_kappa(p, k, m=m, mu=mu)
    return compare_to_spectrum(params, Grid.default(params, grid_n))


def cmd_nonrel(args) -> int:
    from dslab.asymptotics import ladder_csv

    kappas = parse_range(args.kappa)
    if any(not 0 < k < 1 for k in kappas):
        raise InputError("kappa/m must lie in (0, 1)")
    ps = parse_range(args.p)
    items = [(p, k, float(args.m), float(args.mu), int(args.grid_n)) for p in ps for k in kappas]
    comps = parallel_map(_ladder_item, items, resolve_workers(args.workers))
    fmt_ = args.format or "csv"
    if fmt_ == "json":
        text = dumps({"schema": 1, "rows": [
            {**r.__dict__, "next_ok": c.next_ok} for c in comps for r in c.rows]})
    else:
        text = ladder_csv(comps)
    emit(args, text, fmt_)
    return EXIT_OK if all(c.count_ok and c.next_ok for c in comps) else EXIT_VERIFY


def cmd_gn_verify(args) -> int:
    from dslab.grossneveu import gn_report

    ws = parse_range(args.omega) if "omega" in args.explicit else [0.3, 0.5, 0.7, 0.9]
    if any(not 0 < w < 1 for w in ws):
        raise InputError("omega/m must lie in (0, 1)")
    report = gn_report(ws, m=float(args.m), grid_n=int(args.grid_n),
                       grid_x=None if args.grid_x is None else float(args.grid_x))
    emit(args, dumps(report), "json")
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_verify_all(args) -> int:
    from dslab.verify import CRITERIA, run_all

    selected = None
    if args.only:
        try:
            selected = [int(s) for s in args.only.split(",")]
        except ValueError as exc:
            raise InputError(f"--only takes comma-separated criterion numbers, got {args.only!r}") from exc
        bad = [s for s in selected if s not in CRITERIA]
        if bad:
            raise InputError(f"unknown criteria {bad}")
    results = run_all(selected)
    for r in results:
        print(r.line(), file=sys.stderr if args.out is None and args.format == "json" else sys.stdout)
    if args.out or args.format == "json":
        payload = {"schema": 1, "results": [
            {"number": r.number, "name": r.name, "passed": r.passed, "summary": r.summary,
             "details": _stringify_keys(r.details)} for r in results]}
        if args.out:
            Path(args.out).write_text(dumps(payload))
        else:
            sys.stdout.write(dumps(payload))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def _stringify_keys(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify_keys(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stringify_keys(v) for v in obj]
    if hasattr(obj, "__dataclass_fields__"):
        return _stringify_keys(obj.__dict__)
    return obj


COMMANDS = {
    "soliton": cmd_soliton,
    "spectrum": cmd_spectrum,
    "vk-scan": cmd_vk_scan,
    "regions": cmd_regions,
    "nonrel": cmd_nonrel,
    "gn-verify": cmd_gn_verify,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a sub-command's unset option from clobbering one given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("global options")
    g.add_argument("--m", type=float, help="mass (default 1.0)")
    g.add_argument("--p", help="nonlinearity power; scans accept start:stop:count or a,b,c (default 1)")
    g.add_argument("--omega", help="frequency; scans take omega/m as start:stop:count or a,b,c (default 0.5)")
    g.add_argument("--mu", type=float, help="linearization parameter (default 2)")
    g.add_argument("--grid-x", type=float, help="box half-width X (default max(36/kappa, 20/(p kappa)))")
    g.add_argument("--grid-n", type=int, help="grid points N, even and >= 64 (default 1024)")
    g.add_argument("--tol", type=float, help="quadrature tolerance (default 1e-13)")
    g.add_argument("--workers", type=int, help="worker processes (default: $DSL_WORKERS, else CPU count)")
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--format", choices=["csv", "json"], help="output format (command-dependent default)")
    g.add_argument("--config", help="JSON file with option values; command-line flags take precedence")
    g.add_argument("--emit-plotscript", action="store_true", help="write a gnuplot script next to a CSV --out")

    parser = argparse.ArgumentParser(prog="dslab", description="Soler-model solitary waves and their linearizations.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("soliton", parents=[common], help="sample v, u, (v^2-u^2)^p and M")
    s.add_argument("--samples", type=int, default=1001, help="number of x samples (default 1001)")
    s = sub.add_parser("spectrum", parents=[common], help="classified spectrum of L_mu or H_mu")
    s.add_argument("--op", choices=["L", "H"], default="L")
    s.add_argument("--delta", type=float, help="edge margin (default 0.02 (m - omega))")
    s.add_argument("--gap-only", action="store_true", help="keep only gap_point entries")
    s.add_argument("--timings", action="store_true", help="record elapsed_ms (breaks byte-identical output)")
    sub.add_parser("vk-scan", parents=[common], help="VK sign and verdicts over a (p, omega/m) grid")
    s = sub.add_parser("regions", parents=[common], help="beta(p), omega_circ, omega_star curves")
    s.add_argument("--table", choices=["thresholds", "verdicts"], default="thresholds")
    s = sub.add_parser("nonrel", parents=[common], help="non-relativistic ladder against computed spectra")
    s.add_argument("--kappa", default="0.1,0.05", help="kappa/m values (default 0.1,0.05)")
    sub.add_parser("gn-verify", parents=[common], help="p = 1 checks: L_0 spectrum, resonances, thresholds")
    s = sub.add_parser("verify-all", parents=[common], help="run the twelve acceptance checks")
    s.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def resolve_args(args) -> argparse.Namespace:
    """Fill unset options from --config, then from built-in defaults."""
    config = {}
    args.explicit = {k for k in DEFAULTS if getattr(args, k, None) is not None}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise InputError("config file must hold a JSON object")
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            val = config.get(key, config.get(key.replace("_", "-"), default))
            setattr(args, key, val)
            if key in config or key.replace("_", "-") in config:
                args.explicit.add(key)
    for flag in ("emit_plotscript", "config"):
        if not hasattr(args, flag):
            setattr(args, flag, False if flag == "emit_plotscript" else None)
    if args.p is not None:
        args.p = str(args.p)
    if args.omega is not None:
        args.omega = str(args.omega)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    from dslab.spectra import DiagonalizationError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve_args(args)
        if args.tol is not None and not float(args.tol) > 0:
            raise InputError("--tol must be positive")
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"dslab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QuadratureError, DiagonalizationError, np.linalg.LinAlgError) as exc:
        print(f"dslab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
