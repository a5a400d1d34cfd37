"""Solution at the probe point over time, with and without memory.

Runs the model problem for c = 0 and for c = 1 with each tabulated alpha,
and writes probe_decay.csv with columns t, then one column per case.
"""

import argparse
from pathlib import Path

import numpy as np

from memsys._io import write_csv
from memsys.model import ModelProblem, solve_model

CASES = [("c0", 0.0, 0.5), ("c1_a0.25", 1.0, 0.25), ("c1_a0.5", 1.0, 0.5), ("c1_a0.75", 1.0, 0.75)]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--every", type=int, default=10, help="write every k-th level")
    p.add_argument("--out-dir", type=Path, default=Path("results/probe_decay"))
    args = p.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    cols, times = [], None
    for name, c, alpha in CASES:
        mp = ModelProblem(N1=args.grid, N2=args.grid, c=c, alpha=alpha, kernel_source="table1", tau=args.tau, T=args.T)
        res = solve_model(mp)
        times = np.asarray(res.times)
        cols.append(res.probes[:, 0])
        print(f"{name:10s} u*(T)={res.probes[-1, 0]:.4e}")
    sel = slice(None, None, args.every)
    rows = zip(times[sel], *(c[sel] for c in cols))
    write_csv(args.out_dir / "probe_decay.csv", ["t"] + [n for n, *_ in CASES], rows)


if __name__ == "__main__":
    main()
