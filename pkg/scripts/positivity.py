"""Swirling disk (g = 1, 80x80, dt = 2.5 dx, T = 5 pi): minimum certified value
over time with no limiter, the bound-preserving filter, and minmod + filter."""

import argparse

from sldg.harness import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=80)
    args = ap.parse_args()
    for lim in ("none", "bp", "minmod+bp"):
        res = run(RunConfig(problem="swirl_g1", k=2, mode="qc", nx=args.n, cfl=2.5, limiter=lim))
        lo = min(m for _, m in res.min_series)
        hi = res.final.coeffs[..., 0].max()
        print(f"{lim:10s} min certified value {lo:+.3e}  max cell average {hi:.4f}  "
              f"mass error {res.mass.max_abs():.1e}")


if __name__ == "__main__":
    main()
