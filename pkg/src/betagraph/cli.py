"""Command-line front end.

Each subcommand parses flags, prints the resolved configuration as ``#``
lines, calls one library routine and prints or writes its result.
Exit status: 0 success, 2 usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

from . import binomial, graph_model, lr_oracle, simlab, theory
from .detectors import TESTS

PRESETS = {
    # alpha in (0, 1/2), r in (0, 1/2), both in steps of 0.025
    "dense": dict(alpha_grid="0.025:0.025:19", strength_grid="0.025:0.025:19", mode="dense_r", lam=25.0),
    # alpha in (1/2, 1) in steps of 0.025, C in (0, 16] in steps of 0.5
    "sparse": dict(alpha_grid="0.525:0.025:19", strength_grid="0.5:0.5:32", mode="sparse_C", lam=25.0),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _grid(text: str, flag: str) -> tuple[float, ...]:
    """``lo:step:count`` or a comma list."""
    try:
        if ":" in text:
            lo, step, count = text.split(":")
            return simlab.arith_grid(float(lo), float(step), int(count))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"{flag}: cannot parse grid {text!r} ({exc})") from exc


def _model_flags(p, lam_default: Optional[float] = 25.0):
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--lambda", dest="lam", type=float, default=lam_default)
    p.add_argument("--seed", type=int, default=20240601)


def _build() -> argparse.ArgumentParser:
    top = _Parser(prog="betagraph", description=__doc__.splitlines()[0])
    top.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw one graph and emit its degree CSV")
    _model_flags(p)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--A", type=float, default=0.0)
    p.add_argument("--out", default=None, help="degree CSV path (default stdout)")
    p.add_argument("--edges-out", default=None, help="also write the edge list CSV")

    p = sub.add_parser("calibrate", help="empirical null quantile of a statistic")
    _model_flags(p)
    p.add_argument("--test", choices=TESTS, required=True)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=100)

    for name in ("power", "grid"):
        p = sub.add_parser(name, help="power at one cell" if name == "power" else "power over a grid")
        _model_flags(p, lam_default=None)
        p.add_argument("--test", choices=TESTS, required=True)
        p.add_argument("--level", type=float, default=0.05)
        p.add_argument("--calib-reps", type=int, default=100)
        p.add_argument("--reps", type=int, default=100)
        p.add_argument("--mode", choices=("dense_r", "sparse_C"), default=None)
        p.add_argument("--scale", choices=("raw", "tanh"), default="raw")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "power":
            p.add_argument("--alpha", type=float, required=True)
            p.add_argument("--strength", type=float, required=True)
        else:
            p.add_argument("--preset", choices=sorted(PRESETS), default=None)
            p.add_argument("--alpha-grid", default=None, help="lo:step:count or a,b,c")
            p.add_argument("--strength-grid", default=None, help="lo:step:count or a,b,c")

    p = sub.add_parser("boundary", help="detection boundary constants as CSV")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--alpha-step", type=float, default=0.025)
    p.add_argument("--out", default=None)

    p = sub.add_parser("oracle", help="second moment of the likelihood ratio, two ways")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = sub.add_parser("rates", help="binomial tail exponents against C^2/2")
    p.add_argument("--C", default="0.5,1,1.5", help="comma list")
    p.add_argument("--n-list", default="1000,10000,100000,1000000", help="comma list")
    return top


def _emit_config(args, out, extra: Optional[dict] = None) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "json"}
    if extra:
        cfg.update(extra)
    if not args.json:
        for k in sorted(cfg):
            out.write(f"# {k}={cfg[k]}\n")
    return cfg


def _write_text(path: Optional[str], text: str, out) -> None:
    if path is None:
        out.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _cmd_sample(args, out):
    params = graph_model.ModelParams(args.n, args.lam)
    if args.alpha is None:
        if args.A != 0.0:
            raise UsageError("sample: --A needs --alpha")
        signal = graph_model.null_signal()
    else:
        signal = graph_model.make_signal(params, alpha=args.alpha, A=args.A)
    cfg = _emit_config(args, out, {"s": signal.s})
    g = graph_model.sample_graph(params, signal, args.seed, keep_edges=args.edges_out is not None)
    buf = io.StringIO()
    graph_model.write_degrees_csv(g, buf)
    if args.edges_out is not None:
        with open(args.edges_out, "w", encoding="utf-8", newline="") as fh:
            graph_model.write_edges_csv(g, fh)
    if args.json:
        out.write(json.dumps({"config": cfg, "degrees": g.degrees.tolist()}) + "\n")
    else:
        _write_text(args.out, buf.getvalue(), out)


def _cmd_calibrate(args, out):
    params = graph_model.ModelParams(args.n, args.lam)
    cfg = _emit_config(args, out)
    thr = simlab.calibrate(args.test, params, args.level, args.reps, args.seed)
    if args.json:
        out.write(json.dumps({"config": cfg, "threshold": thr}) + "\n")
    else:
        out.write(f"threshold {thr!r}\n")


def _grid_config(args) -> simlab.SimConfig:
    preset = PRESETS.get(getattr(args, "preset", None) or "", {})
    lam = args.lam if args.lam is not None else preset.get("lam", 25.0)
    mode = args.mode or preset.get("mode", "sparse_C")
    if args.command == "power":
        alphas, strengths = (args.alpha,), (args.strength,)
    else:
        a = args.alpha_grid or preset.get("alpha_grid")
        b = args.strength_grid or preset.get("strength_grid")
        if a is None or b is None:
            raise UsageError("grid: give --preset or both --alpha-grid and --strength-grid")
        alphas, strengths = _grid(a, "--alpha-grid"), _grid(b, "--strength-grid")
    return simlab.SimConfig(
        graph_model.ModelParams(args.n, lam),
        args.test,
        args.level,
        args.calib_reps,
        args.reps,
        args.seed,
        alphas,
        strengths,
        mode,
        args.scale,
    )


def _cmd_grid(args, out):
    config = _grid_config(args)
    cfg = _emit_config(args, out, {"resolved": config.to_dict()})
    grid = simlab.run_grid(config, workers=args.workers)
    if args.out is not None:
        simlab.persist_grid(grid, args.out, args.format)
    if args.json:
        out.write(json.dumps({"config": cfg, "grid": json.loads(simlab.grid_to_json(grid))}) + "\n")
    elif args.out is None:
        out.write(simlab.grid_to_csv(grid) if args.format == "csv" else simlab.grid_to_json(grid))
    else:
        out.write(f"threshold {grid.threshold!r}\nwrote {len(grid.cells)} cells to {args.out}\n")


def _cmd_boundary(args, out):
    cfg = _emit_config(args, out)
    rows = theory.boundary_rows(args.theta, args.alpha_step)
    if args.json:
        out.write(json.dumps({"config": cfg, "rows": [r.__dict__ for r in rows]}) + "\n")
        return
    buf = io.StringIO()
    theory.write_boundary_csv(rows, buf)
    _write_text(args.out, buf.getvalue(), out)


def _cmd_oracle(args, out):
    cfg = _emit_config(args, out)
    f = lr_oracle.second_moment_formula(args.n, args.s, args.A, args.lam)
    res = {"formula": f.value}
    if args.n <= lr_oracle.ENUM_MAX_N:
        res["enumeration"] = lr_oracle.moment_enum(args.n, args.s, args.A, args.lam, 2).value
        res["first_moment"] = lr_oracle.moment_enum(args.n, args.s, args.A, args.lam, 1).value
    if args.json:
        out.write(json.dumps({"config": cfg, **res}) + "\n")
        return
    for k, v in res.items():
        out.write(f"{k} {v!r}\n")
    if "enumeration" not in res:
        out.write(f"enumeration skipped (n > {lr_oracle.ENUM_MAX_N})\n")


def _cmd_rates(args, out):
    Cs = _grid(args.C, "--C")
    try:
        ns = [int(v) for v in args.n_list.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--n-list: {exc}") from exc
    cfg = _emit_config(args, out)
    rows = []
    for n in ns:
        p = math.log(n) ** 2 / n
        for C in Cs:
            e = binomial.tail_rate_exponent(n, p, C)
            rows.append({"n": n, "C": C, "exponent": e, "target": C * C / 2.0})
    if args.json:
        out.write(json.dumps({"config": cfg, "rows": rows}) + "\n")
        return
    out.write("n,C,exponent,target\n")
    for r in rows:
        out.write(f"{r['n']},{r['C']!r},{r['exponent']!r},{r['target']!r}\n")


_COMMANDS = {
    "sample": _cmd_sample,
    "calibrate": _cmd_calibrate,
    "power": _cmd_grid,
    "grid": _cmd_grid,
    "boundary": _cmd_boundary,
    "oracle": _cmd_oracle,
    "rates": _cmd_rates,
}


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = _build()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
        _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
