"""Command line entry point: ``sldg run``, ``sldg converge``, ``sldg list-problems``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import SLDGError
from .field import fmt
from .flows import PROBLEM_NAMES, catalog
from .harness import RunConfig, converge, load_config, run
from .limiters import LIMITERS


def _float_list(text):
    return tuple(float(s) for s in text.replace(",", " ").split())


def _int_list(text):
    return [int(s) for s in text.replace(",", " ").split()]


def _add_run_flags(p):
    p.add_argument("--config", help="flat key = value file; flags given here override it")
    p.add_argument("--problem", choices=PROBLEM_NAMES)
    p.add_argument("--k", type=int, help="polynomial degree")
    p.add_argument("--mode", choices=("quad", "qc"),
                   help="upstream sides: straight (quad) or quadratic-curved (qc)")
    p.add_argument("--nx", type=int, help="cells in x (or the 1D cell count)")
    p.add_argument("--ny", type=int, help="cells in y (defaults to nx)")
    p.add_argument("--cfl", type=float, help="dt = cfl * dx")
    p.add_argument("--t-final", type=float, help="final time (problem default if omitted)")
    p.add_argument("--limiter", choices=LIMITERS,
                   help="minmod is a TVB minmod stand-in for a WENO limiter")
    p.add_argument("--tvb-m", type=float, help="TVB constant M (default 1)")
    p.add_argument("--output-dir", help="directory for CSV outputs")
    p.add_argument("--snapshot-times", type=_float_list, help="comma-separated times")
    p.add_argument("--trace-substeps", type=int, help="RK substeps per characteristic trace")


def _config_from_args(args) -> RunConfig:
    names = [f.name for f in dataclasses.fields(RunConfig)]
    given = {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}
    if args.config:
        return load_config(args.config, **given)
    return RunConfig(**given)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    res = run(cfg)
    print(f"problem={cfg.problem} k={cfg.k} mode={cfg.mode} n={cfg.nx} cfl={cfg.cfl} "
          f"steps={res.steps} wall={res.wall_time:.2f}s")
    print(f"max |relative mass error| = {fmt(res.mass.max_abs())}")
    print(f"min certified value = {fmt(min(m for _, m in res.min_series))}")
    if res.errors:
        print("  ".join(f"{k}={fmt(v)}" for k, v in res.errors.items()))
    return 0


def _cmd_converge(args) -> int:
    cfg = _config_from_args(args)
    rep = converge(cfg, args.levels)
    print(f"{'n':>6} {'L1':>12} {'order':>6} {'L2':>12} {'order':>6} {'Linf':>12} {'order':>6}")
    for r in rep.rows:
        def o(v):
            return f"{v:6.2f}" if v is not None else " " * 6
        print(f"{r['n']:>6} {r['L1']:12.3e} {o(r['order_L1'])} {r['L2']:12.3e} "
              f"{o(r['order_L2'])} {r['Linf']:12.3e} {o(r['order_Linf'])}")
    return 0


def _cmd_list(args) -> int:
    for name in PROBLEM_NAMES:
        p = catalog(name)
        print(f"{name:16s} {p.ndim}D  T={p.t_final:.6g}  {p.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sldg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one problem to its final time")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("converge", help="mesh refinement study")
    _add_run_flags(p)
    p.add_argument("--levels", type=_int_list, default=[20, 40, 80, 160],
                   help="comma-separated mesh sizes (doubled for orders)")
    p.set_defaults(func=_cmd_converge)
    p = sub.add_parser("list-problems", help="show the benchmark catalog")
    p.set_defaults(func=_cmd_list)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SLDGError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        cells = getattr(exc, "cells", None)
        if cells:
            print(f"  cells: {cells}  time: {getattr(exc, 'time', None)}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
