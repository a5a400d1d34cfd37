"""Temporal convergence of the scheme on the model problem for sigma = 0.5 and 1.

For each sigma, halves tau a few times and compares against a fine
Crank-Nicolson reference on the same grid; writes one CSV per sigma.
"""

import argparse
from pathlib import Path

from memsys.model import DEFAULT_CHECKPOINTS, ModelProblem, compare_runs


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tau0", type=float, default=0.01)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--ref-steps", type=int, default=8000)
    p.add_argument("--out-dir", type=Path, default=Path("results/convergence"))
    args = p.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    taus = [args.tau0 / 2**k for k in range(args.levels)]
    for sigma in (0.5, 1.0):
        mp = ModelProblem(N1=args.grid, N2=args.grid, alpha=args.alpha, kernel_source="table1", sigma=sigma, T=1.0)
        rep = compare_runs(mp, taus, DEFAULT_CHECKPOINTS, ref_steps=args.ref_steps)
        rep.to_csv(args.out_dir / f"convergence_sigma{sigma}.csv")
        print(f"sigma={sigma}: observed orders (eps_inf) at t = {list(DEFAULT_CHECKPOINTS)}")
        for tau, row in zip(taus[1:], rep.orders_inf):
            print(f"  tau={tau:.5f} " + " ".join(f"{o:5.2f}" for o in row))


if __name__ == "__main__":
    main()
