"""Command-line harness for the model-problem experiments.

    memsys fit-kernel --alpha 0.5 --delta 1 --m 10 --smax 1000 --out-dir out/
    memsys solve --c 1 --alpha 0.5 --sigma 0.5 --tau 1e-3 --steps 100
    memsys compare --sigma 1 --taus 0.01 0.005 --checkpoints 0.5 1
    memsys convergence --sigma 0.5 --taus 0.02 0.01 0.005

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from ._io import fmt, write_csv
from .errors import (
    CheckpointMismatch,
    ConversionFailure,
    DomainError,
    FitFailure,
    InvariantError,
    NoConvergence,
    ParseError,
    QuadratureFailure,
    SingularMass,
    StabilityViolation,
)
from .kernel import AnalyticKernel
from .linop import GridLaplacian
from .model import DEFAULT_CHECKPOINTS, ModelProblem, build_kernel, compare_runs, solve_model
from .ratapprox import (
    FitConfig,
    certify,
    default_s_grid,
    default_t_grid,
    fit_exp_sum,
    save_coefficients,
    write_certification_csv,
)

log = logging.getLogger("memsys")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (FitFailure, ConversionFailure, NoConvergence, StabilityViolation, SingularMass, QuadratureFailure)
USAGE_ERRORS = (DomainError, InvariantError, ParseError, CheckpointMismatch, ValueError, FileNotFoundError)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be an integer >= 1, got {text}")
    return value


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON file with model-problem settings")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--m", type=_positive_int, help="number of exponential terms")
    p.add_argument("--c", type=float, help="memory coupling c >= 0")
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--steps", type=_positive_int, help="number of time steps (sets T = steps * tau)")
    p.add_argument("--T", type=float, dest="T", help="final time")
    p.add_argument("--grid", type=_positive_int, help="N1 = N2 = grid")
    p.add_argument("--kernel-file", type=Path)
    p.add_argument("--kernel-source", choices=["fit", "table1", "file"])
    p.add_argument("--smax", type=float, help="upper end of the Laplace fitting interval")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memsys", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-kernel", help="fit an exponential sum to the tempered power kernel")
    _common(p)
    p.add_argument("--samples", type=_positive_int, default=2000)
    p.add_argument("--no-gamma2", action="store_true", help="fit without the constant term")
    p.add_argument("--output", type=Path, help="coefficient file (default OUT_DIR/kernel.txt)")

    p = sub.add_parser("solve", help="run the scheme on the 2D model problem")
    _common(p)
    p.add_argument("--snapshots", type=float, nargs="*", default=[], help="times of full-field snapshots")
    p.add_argument("--probe", type=float, nargs=2, metavar=("X1", "X2"))
    p.add_argument("--monitor", choices=["fail", "warn", "off"], default="fail")

    for name, text in [("compare", "errors against a fine reference"), ("convergence", "observed orders in tau")]:
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--taus", type=float, nargs="+", required=True)
        p.add_argument("--checkpoints", type=float, nargs="+", default=list(DEFAULT_CHECKPOINTS))
        p.add_argument("--ref-steps", type=_positive_int, default=1000)
        p.add_argument("--ref-sigma", type=float, default=0.5)
    return parser


def model_from_args(args) -> ModelProblem:
    settings = {}
    if args.config:
        settings.update(json.loads(Path(args.config).read_text()))
    known = {f.name for f in fields(ModelProblem)}
    unknown = set(settings) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    flag_map = {
        "alpha": args.alpha,
        "delta": args.delta,
        "m": args.m,
        "c": args.c,
        "sigma": args.sigma,
        "tau": args.tau,
        "T": args.T,
        "s_max": args.smax,
        "kernel_source": args.kernel_source,
    }
    settings.update({k: v for k, v in flag_map.items() if v is not None})
    if args.grid is not None:
        settings["N1"] = settings["N2"] = args.grid
    if args.kernel_file is not None:
        settings["kernel_file"] = str(args.kernel_file)
        settings.setdefault("kernel_source", "file")
    if getattr(args, "probe", None):
        settings["probe"] = tuple(args.probe)
    if args.steps is not None:
        tau = settings.get("tau", ModelProblem.tau)
        settings["T"] = args.steps * tau
    return ModelProblem(**settings)


def cmd_fit_kernel(args) -> int:
    alpha = 0.5 if args.alpha is None else args.alpha
    delta = 1.0 if args.delta is None else args.delta
    kern = AnalyticKernel(alpha, delta)
    cfg = FitConfig(
        m=10 if args.m is None else args.m,
        s_max=1e3 if args.smax is None else args.smax,
        n_samples=args.samples,
        include_gamma2=not args.no_gamma2,
    )
    report = fit_exp_sum(kern, cfg, t_window=default_t_grid())
    out = args.out_dir
    path = args.output or out / "kernel.txt"
    save_coefficients(report.kernel, path)
    # report on the standard windows, not the fitter's own sample grid
    cert = certify(kern, report.kernel, default_s_grid(cfg.s_max), default_t_grid())
    write_certification_csv(cert, out / "certify_s.csv", out / "certify_t.csv")
    print(f"wrote {path}: m={report.kernel.m} gamma2={fmt(report.kernel.gamma2)}")
    print(f"eps_F_max={fmt(cert.eps_F_max)} eps_f_max={fmt(cert.eps_f_max_on_window)}")
    print(f"positivity_ok={report.positivity_ok}")
    return EXIT_OK if report.positivity_ok else EXIT_NUMERIC


def cmd_solve(args) -> int:
    mp = model_from_args(args)
    log.info("model problem %s", mp.to_dict())
    L = GridLaplacian(mp.N1, mp.N2)
    levels = []
    for t in args.snapshots:
        n = round(t / mp.tau)
        if not np.isclose(n * mp.tau, t) or n > mp.n_steps:
            raise CheckpointMismatch(f"snapshot time {t} is not a level of this run")
        levels.append(n)
    res = solve_model(mp, record=levels, monitor=args.monitor)
    out = args.out_dir
    write_csv(out / "probe.csv", ["n", "t", "value"], ((n, t, v) for n, (t, v) in enumerate(zip(res.times, res.probes[:, 0]))))
    res.energy.to_csv(out / "energy.csv")
    x1, x2 = L.nodes()
    for t, n in zip(args.snapshots, levels):
        write_csv(out / f"snapshot_t{fmt(t)}.csv", ["x1", "x2", "value"], zip(x1, x2, res.snapshots[n]))
    print(f"steps={mp.n_steps} T={fmt(mp.T)} u*(T)={fmt(res.probes[-1, 0])}")
    return EXIT_OK


def _check_geometric(taus):
    if len(taus) < 3:
        raise DomainError("need at least 3 tau values")
    r = np.asarray(taus[1:]) / np.asarray(taus[:-1])
    if not np.allclose(r, r[0], rtol=1e-9) or r[0] >= 1:
        raise DomainError("tau values must form a decreasing geometric progression")


def _compare(args):
    mp = model_from_args(args)
    log.info("model problem %s", mp.to_dict())
    kernel = build_kernel(mp) if mp.c else None
    return compare_runs(
        mp, args.taus, args.checkpoints, ref_steps=args.ref_steps, ref_sigma=args.ref_sigma, kernel=kernel
    )


def cmd_compare(args) -> int:
    report = _compare(args)
    report.to_csv(args.out_dir / "errors.csv")
    for tau, t, e2, ei, *_ in report.rows():
        print(f"tau={fmt(tau)} t={fmt(t)} eps_2={fmt(e2)} eps_inf={fmt(ei)}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    _check_geometric(args.taus)
    report = _compare(args)
    report.to_csv(args.out_dir / "convergence.csv")
    for i in range(1, len(report.taus)):
        cells = " ".join(f"{o:6.3f}" for o in report.orders_2[i - 1])
        print(f"tau={fmt(report.taus[i])} order_2 @ {report.checkpoints}: {cells}")
    return EXIT_OK


COMMANDS = {
    "fit-kernel": cmd_fit_kernel,
    "solve": cmd_solve,
    "compare": cmd_compare,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NUMERIC_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
