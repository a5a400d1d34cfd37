"""Two-dimensional relaxation problem on the unit square.

    w_t + c int_0^t k(t-s) w_s ds - Laplace(w) = 0,  w = 0 on the boundary,
    w(x, 0) = x1 (1 - x1^6) x2 (1 - x2^6),

discretized with the five-point Laplacian, so B = I, C = c I, A = -Laplace_h.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ._io import write_csv
from .errors import CheckpointMismatch, DomainError
from .kernel import AnalyticKernel, ExpSumKernel
from .linop import GridLaplacian, ScaledIdentity
from .ratapprox import FitConfig, fit_exp_sum, load_coefficients, table1_kernel
from .solver import ProblemSpec, RunResult, SchemeConfig, run

__all__ = [
    "ModelProblem",
    "ErrorReport",
    "default_u0",
    "build_kernel",
    "build_spec",
    "solve_model",
    "eps_2",
    "eps_inf",
    "compare_runs",
    "observed_orders",
    "DEFAULT_CHECKPOINTS",
]

DEFAULT_CHECKPOINTS = (0.05, 0.1, 0.25, 0.5, 1.0)


def default_u0(x1, x2):
    return x1 * (1 - x1**6) * x2 * (1 - x2**6)


@dataclass
class ModelProblem:
    """Configuration of one model-problem run.

    ``kernel_source`` is ``"fit"`` (AAA fit with ``m`` terms),
    ``"table1"`` (shipped coefficients, needs alpha in {0.25, 0.5, 0.75})
    or ``"file"`` (``kernel_file``).
    """

    N1: int = 64
    N2: int = 64
    c: float = 1.0
    alpha: float = 0.5
    delta: float = 1.0
    m: int = 10
    s_max: float = 1e3
    kernel_source: str = "fit"
    kernel_file: Optional[str] = None
    sigma: float = 0.5
    tau: float = 1e-3
    T: float = 1.0
    probe: tuple = (0.5, 0.5)

    def __post_init__(self):
        if self.N1 < 2 or self.N2 < 2:
            raise DomainError("grid needs N1, N2 >= 2")
        if not self.c >= 0:
            raise DomainError(f"c must be >= 0, got {self.c}")
        AnalyticKernel(self.alpha, self.delta)  # validates alpha, delta
        if self.kernel_source not in ("fit", "table1", "file"):
            raise DomainError(f"unknown kernel source {self.kernel_source!r}")
        if self.kernel_source == "file" and not self.kernel_file:
            raise DomainError("kernel_source='file' needs kernel_file")
        if not (0 < self.sigma <= 1):
            raise DomainError(f"sigma must lie in (0, 1], got {self.sigma}")
        if not self.tau > 0 or not self.T > 0:
            raise DomainError("tau and T must be positive")
        self.probe = tuple(float(p) for p in self.probe)

    @property
    def n_steps(self) -> int:
        n = round(self.T / self.tau)
        if n < 1 or not math.isclose(n * self.tau, self.T, rel_tol=1e-9):
            raise DomainError(f"T={self.T} is not a whole number of steps tau={self.tau}")
        return n

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(sigma=self.sigma, tau=self.tau, n_steps=self.n_steps)

    def to_dict(self) -> dict:
        return asdict(self)


def build_kernel(mp: ModelProblem) -> ExpSumKernel:
    if mp.kernel_source == "file":
        return load_coefficients(mp.kernel_file)
    if mp.kernel_source == "table1":
        if mp.delta != 1.0:
            raise DomainError("tabulated kernels are for delta = 1")
        return table1_kernel(mp.alpha)
    report = fit_exp_sum(AnalyticKernel(mp.alpha, mp.delta), FitConfig(m=mp.m, s_max=mp.s_max))
    return report.kernel


def build_spec(mp: ModelProblem, kernel: Optional[ExpSumKernel] = None, u0=None) -> ProblemSpec:
    L = GridLaplacian(mp.N1, mp.N2)
    if u0 is None:
        u0 = default_u0(*L.nodes())
    if mp.c == 0:
        kernel = ExpSumKernel()
    elif kernel is None:
        kernel = build_kernel(mp)
    B = ScaledIdentity(L.dim, 1.0, L.weight)
    C = ScaledIdentity(L.dim, mp.c, L.weight)
    return ProblemSpec(B=B, C=C, A=L, kernel=kernel, u0=u0)


def probe_index(L: GridLaplacian, point) -> int:
    """Index of the interior node nearest to ``point``."""
    i1 = min(max(round(point[0] / L.h1), 1), L.N1 - 1) - 1
    i2 = min(max(round(point[1] / L.h2), 1), L.N2 - 1) - 1
    return i1 * (L.N2 - 1) + i2


def solve_model(mp: ModelProblem, kernel=None, record=None, monitor="fail") -> RunResult:
    """Run the scheme on the model problem; probes hold u at ``mp.probe``."""
    spec = build_spec(mp, kernel)
    idx = probe_index(spec.A, mp.probe)
    return run(spec, mp.scheme(), record=record, probe=lambda y: y[idx], monitor=monitor)


def eps_2(y, ybar, weight: float) -> float:
    """Grid L2 norm of the difference (weight h1 h2)."""
    d = np.asarray(y) - np.asarray(ybar)
    return math.sqrt(weight * float(d @ d))


def eps_inf(y, ybar) -> float:
    return float(np.max(np.abs(np.asarray(y) - np.asarray(ybar))))


def levels_for(times, tau: float):
    out = []
    for t in times:
        n = round(t / tau)
        if not math.isclose(n * tau, t, rel_tol=1e-9, abs_tol=1e-14):
            raise CheckpointMismatch(f"checkpoint t={t} is not on the grid with step {tau}")
        out.append(n)
    return out


@dataclass
class ErrorReport:
    """Discrepancies against a reference at shared checkpoint times."""

    taus: list
    checkpoints: list
    eps_2: np.ndarray  # shape (len(taus), len(checkpoints))
    eps_inf: np.ndarray
    orders_2: np.ndarray = field(default=None)
    orders_inf: np.ndarray = field(default=None)

    def rows(self):
        for i, tau in enumerate(self.taus):
            for j, t in enumerate(self.checkpoints):
                o2 = self.orders_2[i - 1, j] if i > 0 else float("nan")
                oi = self.orders_inf[i - 1, j] if i > 0 else float("nan")
                yield tau, t, self.eps_2[i, j], self.eps_inf[i, j], o2, oi

    def to_csv(self, path):
        return write_csv(path, ["tau", "t", "eps_2", "eps_inf", "order_2", "order_inf"], self.rows())


def observed_orders(errors, taus=None) -> np.ndarray:
    """log(e_k / e_{k+1}) / log(tau_k / tau_{k+1}); log2 ratios if taus omitted."""
    e = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if taus is None:
            return np.log2(e[:-1] / e[1:])
        t = np.asarray(taus, dtype=float)
        return np.log(e[:-1] / e[1:]) / np.log(t[:-1] / t[1:])


def compare_runs(
    mp: ModelProblem,
    taus,
    checkpoints=DEFAULT_CHECKPOINTS,
    ref_steps: int = 1000,
    ref_sigma: float = 0.5,
    kernel=None,
    reference: Optional[dict] = None,
    workers: Optional[int] = None,
) -> ErrorReport:
    """Errors of runs at each tau against a fine reference run.

    The reference uses ``ref_sigma`` with ``ref_steps`` uniform steps on
    [0, T] and the same grid and kernel. Pass ``reference`` (level time ->
    field) to reuse a precomputed one. Runs at different tau go to a
    thread pool of ``workers`` threads (default: executor's choice).
    """
    checkpoints = list(checkpoints)
    if max(checkpoints) > mp.T * (1 + 1e-12):
        raise CheckpointMismatch(f"checkpoint beyond final time T={mp.T}")
    spec = build_spec(mp, kernel)
    if reference is None:
        ref_tau = mp.T / ref_steps
        ref_levels = levels_for(checkpoints, ref_tau)
        res = run(spec, SchemeConfig(ref_sigma, ref_tau, ref_steps), record=ref_levels, track_energy=False)
        reference = {t: res.snapshots[n] for t, n in zip(checkpoints, ref_levels)}
    weight = spec.A.weight

    def one(tau):
        levels = levels_for(checkpoints, tau)
        res = run(spec, SchemeConfig(mp.sigma, tau, max(levels)), record=levels, track_energy=False)
        return [res.snapshots[n] for n in levels]

    # runs at different tau are independent; each is sequential inside
    with ThreadPoolExecutor(max_workers=workers) as pool:
        fields_at = list(pool.map(one, taus))
    E2 = np.empty((len(taus), len(checkpoints)))
    Ei = np.empty_like(E2)
    for i, snaps in enumerate(fields_at):
        for j, (t, y) in enumerate(zip(checkpoints, snaps)):
            E2[i, j] = eps_2(y, reference[t], weight)
            Ei[i, j] = eps_inf(y, reference[t])
    report = ErrorReport(list(taus), checkpoints, E2, Ei)
    if len(taus) > 1:
        report.orders_2 = np.column_stack([observed_orders(E2[:, j], taus) for j in range(len(checkpoints))])
        report.orders_inf = np.column_stack([observed_orders(Ei[:, j], taus) for j in range(len(checkpoints))])
    else:
        report.orders_2 = report.orders_inf = np.empty((0, len(checkpoints)))
    return report


def with_overrides(mp: ModelProblem, **kw) -> ModelProblem:
    return replace(mp, **{k: v for k, v in kw.items() if v is not None})
