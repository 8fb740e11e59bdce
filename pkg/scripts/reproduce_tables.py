"""Reproduce the convergence tables (1D linear, 1D variable coefficient, 2D linear,
rigid rotation, swirling deformation) and write one CSV per table."""

import argparse
from pathlib import Path

from sldg.harness import RunConfig, converge

TABLES = {
    "linear1d": [(k, "qc") for k in (1, 2, 3)],
    "varcoef1d": [(k, "qc") for k in (1, 2, 3)],
    "linear2d": [(1, "qc"), (2, "qc")],
    "rigid2d": [(1, "qc"), (2, "qc")],
    "swirl_cos": [(1, "quad"), (2, "quad"), (2, "qc")],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/tables")
    ap.add_argument("--problems", nargs="*", default=list(TABLES))
    ap.add_argument("--max-n", type=int, default=None, help="cap the finest mesh")
    args = ap.parse_args()
    for prob in args.problems:
        levels = [20, 40, 80, 160, 320] if prob.endswith("1d") else [20, 40, 80, 160]
        if args.max_n:
            levels = [n for n in levels if n <= args.max_n]
        for k, mode in TABLES[prob]:
            for cfl in (0.5, 2.5):
                out = Path(args.out) / f"{prob}_P{k}_{mode}_cfl{cfl}"
                rep = converge(RunConfig(problem=prob, k=k, mode=mode, cfl=cfl,
                                         output_dir=str(out)), levels)
                orders = " ".join(f"{o:.2f}" for o in rep.orders())
                print(f"{prob:10s} P{k} {mode:4s} cfl={cfl}: L2 {rep.errors()[-1]:.3e}  "
                      f"orders {orders}")


if __name__ == "__main__":
    main()
