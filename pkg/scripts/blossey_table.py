"""Blossey deformation flow at 60x60, dt = 1.5 dx, T = 2: L1/L2/Linf errors and wall
time for P1, P2 and P2-QC with and without the bound-preserving filter."""

import argparse

from sldg.harness import RunConfig, run

ROWS = [(1, "quad"), (2, "quad"), (2, "qc")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--cfl", type=float, default=1.5)
    args = ap.parse_args()
    print(f"{'scheme':12s} {'L1':>10s} {'L2':>10s} {'Linf':>10s} {'wall (s)':>9s}")
    for k, mode in ROWS:
        for lim in ("none", "bp"):
            res = run(RunConfig(problem="blossey", k=k, mode=mode, nx=args.n, cfl=args.cfl,
                                limiter=lim))
            name = f"P{k}{'-QC' if mode == 'qc' else ''}{'+BP' if lim == 'bp' else ''}"
            e = res.errors
            print(f"{name:12s} {e['L1']:10.3e} {e['L2']:10.3e} {e['Linf']:10.3e} "
                  f"{res.wall_time:9.2f}")


if __name__ == "__main__":
    main()
