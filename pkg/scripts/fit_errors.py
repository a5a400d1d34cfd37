"""Kernel approximation errors: fitted kernels for several m, and the tabulated ones.

Writes
  fit_errors.csv           m, eps_F_max, eps_f_max (t in [1e-3, 1e2]), positivity
  certify_table1_a*.csv    s/t tables for each tabulated alpha
"""

import argparse
from pathlib import Path

from memsys._io import write_csv
from memsys.kernel import AnalyticKernel
from memsys.ratapprox import FitConfig, certify, fit_exp_sum, table1_kernel, write_certification_csv


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--ms", type=int, nargs="+", default=[2, 4, 6, 8, 10, 12])
    p.add_argument("--out-dir", type=Path, default=Path("results/fit_errors"))
    args = p.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    kern = AnalyticKernel(args.alpha, args.delta)
    rows = []
    for m in args.ms:
        rep = fit_exp_sum(kern, FitConfig(m=m))
        cert = certify(kern, rep.kernel)
        rows.append((m, cert.eps_F_max, cert.eps_f_max_on_window, str(rep.positivity_ok)))
        print(f"m={m:3d} eps_F={cert.eps_F_max:.3e} eps_f={cert.eps_f_max_on_window:.3e}")
    write_csv(args.out_dir / "fit_errors.csv", ["m", "eps_F_max", "eps_f_max", "positivity_ok"], rows)

    if args.delta == 1.0:
        for alpha in (0.25, 0.5, 0.75):
            cert = certify(AnalyticKernel(alpha, 1.0), table1_kernel(alpha))
            stem = f"certify_table1_a{alpha}"
            write_certification_csv(cert, args.out_dir / f"{stem}_s.csv", args.out_dir / f"{stem}_t.csv")
            print(f"table alpha={alpha}: eps_F={cert.eps_F_max:.3e} eps_f={cert.eps_f_max_on_window:.3e}")


if __name__ == "__main__":
    main()
