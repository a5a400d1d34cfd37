"""Two-level weighted scheme for B u' + int_0^t k(t-s) C u'(s) ds + A u = f.

With k(t) = sum a_i exp(-b_i t) the memory term becomes sum a_i C v_i where
the auxiliary states obey v_i' + b_i v_i = u'. Each time step eliminates the
auxiliary states explicitly and solves one SPD system

    (B + sigma tau (mu C + A)) y^{n+1} = chi^n,   mu = sum a_i / (1 + sigma b_i tau),

after which y_i^{n+1} = y^{n+1} / (1 + sigma b_i tau) + chi_i^n.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from ._io import write_csv
from .errors import StabilityViolation
from .kernel import ExpSumKernel
from .linop import LinearCombination, LinearOperator, cg, composite, inner, norm_D

__all__ = [
    "ProblemSpec",
    "SchemeConfig",
    "SolverState",
    "EnergyTrace",
    "RunResult",
    "absorb_gamma",
    "mu_coefficient",
    "initial_state",
    "step",
    "run",
    "energy",
    "scheme_residuals",
]



@dataclass(frozen=True)
class ProblemSpec:
    """Operators, kernel, source and initial value of the Cauchy problem.

    ``f`` maps t to a vector; ``None`` means f = 0. Any scalar memory
    coupling is folded into ``C``.
    """

    B: LinearOperator
    C: LinearOperator
    A: LinearOperator
    kernel: ExpSumKernel
    u0: np.ndarray
    f: Optional[Callable[[float], np.ndarray]] = None

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        object.__setattr__(self, "u0", u0)
        for name in ("B", "C", "A"):
            op = getattr(self, name)
            if op.dim != u0.shape[0]:
                raise ValueError(f"{name} has dimension {op.dim}, u0 has {u0.shape[0]}")

    @property
    def dim(self) -> int:
        return self.u0.shape[0]

    @property
    def weight(self) -> float:
        return self.A.weight

    def source(self, t: float) -> np.ndarray:
        if self.f is None:
            return np.zeros(self.dim)
        return np.asarray(self.f(t), dtype=float)


@dataclass(frozen=True)
class SchemeConfig:
    """Weight ``sigma`` in (0, 1], step ``tau`` and number of steps.

    Unconditional stability is guaranteed only for sigma >= 0.5.
    ``tol`` is the relative residual tolerance of the per-step CG solve.
    """

    sigma: float = 0.5
    tau: float = 1e-2
    n_steps: int = 100
    tol: float = 1e-10

    def __post_init__(self):
        if not (0.0 < self.sigma <= 1.0):
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")


@dataclass
class SolverState:
    n: int
    y: np.ndarray
    aux: list
    tau: float

    @property
    def t(self) -> float:
        return self.n * self.tau


class _ShiftedSource:
    def __init__(self, f, shift):
        self.f = f
        self.shift = shift

    def __call__(self, t):
        if self.f is None:
            return self.shift.copy()
        return np.asarray(self.f(t), dtype=float) + self.shift


def absorb_gamma(spec: ProblemSpec) -> ProblemSpec:
    """Fold the constant and delta parts of the kernel into the operators.

    The constant part gamma1 contributes gamma1 C (u(t) - u0), the delta
    part gamma2 contributes gamma2 C u'(t), hence

        B -> B + gamma2 C,  A -> A + gamma1 C,  f -> f + gamma1 C u0,

    and the kernel is reduced to its exponential terms.
    """
    k = spec.kernel
    g1, g2 = k.gamma1, k.gamma2
    if g1 == 0.0 and g2 == 0.0:
        return spec
    B = LinearCombination([(1.0, spec.B), (g2, spec.C)]) if g2 else spec.B
    A = LinearCombination([(1.0, spec.A), (g1, spec.C)]) if g1 else spec.A
    f = _ShiftedSource(spec.f, g1 * spec.C.apply(spec.u0)) if g1 else spec.f
    return replace(spec, B=B, A=A, f=f, kernel=k.regular_part())


def mu_coefficient(kernel: ExpSumKernel, sigma: float, tau: float) -> float:
    return float(np.sum(kernel.a / (1.0 + sigma * kernel.b * tau)))


def initial_state(spec: ProblemSpec, cfg: SchemeConfig) -> SolverState:
    return SolverState(0, spec.u0.copy(), [np.zeros(spec.dim) for _ in range(spec.kernel.m)], cfg.tau)


def _weighted_source(spec, cfg, n):
    s, tau = cfg.sigma, cfg.tau
    if spec.f is None:
        return np.zeros(spec.dim)
    return s * spec.source((n + 1) * tau) + (1.0 - s) * spec.source(n * tau)


def _advance(spec: ProblemSpec, cfg: SchemeConfig, state: SolverState):
    sigma, tau = cfg.sigma, cfg.tau
    a, b = spec.kernel.a, spec.kernel.b
    y = state.y
    denom = 1.0 + sigma * b * tau

    chi_aux = [((1.0 - (1.0 - sigma) * bi * tau) * yi - y) / di for bi, yi, di in zip(b, state.aux, denom)]
    f_ns = _weighted_source(spec, cfg, state.n)

    chi = tau * f_ns + spec.B.apply(y) - (1.0 - sigma) * tau * spec.A.apply(y)
    if spec.kernel.m:
        mem = np.zeros(spec.dim)
        for ai, bi, yi, ci in zip(a, b, state.aux, chi_aux):
            mem += (ai / bi) * (y - yi + ci)
        chi = chi + spec.C.apply(mem)

    D = composite(spec.B, spec.C, spec.A, mu_coefficient(spec.kernel, sigma, tau), sigma, tau)
    y_new = cg(D, chi, tol=cfg.tol, x0=y).x
    aux_new = [y_new / di + ci for di, ci in zip(denom, chi_aux)]
    return SolverState(state.n + 1, y_new, aux_new, tau), f_ns


def step(spec: ProblemSpec, cfg: SchemeConfig, state: SolverState) -> SolverState:
    """Advance one time level."""
    spec = absorb_gamma(spec)
    if len(state.aux) != spec.kernel.m:
        raise ValueError(f"state has {len(state.aux)} auxiliary vectors, kernel has {spec.kernel.m} terms")
    return _advance(spec, cfg, state)[0]


def energy(spec: ProblemSpec, state: SolverState) -> float:
    """||y||_A^2 + sum a_i ||y_i||_C^2 (operators of the absorbed problem)."""
    e = norm_D(spec.A, state.y) ** 2
    for ai, yi in zip(spec.kernel.a, state.aux):
        e += ai * norm_D(spec.C, yi) ** 2
    return e


def _inv_norm2(B: LinearOperator, f) -> float:
    if not np.any(f):
        return 0.0
    z = cg(B, f, tol=1e-13).x
    return inner(z, f, B.weight)


@dataclass
class EnergyTrace:
    """Discrete energy E^n and its a priori bound R^n per time level."""

    n: list = field(default_factory=list)
    t: list = field(default_factory=list)
    E: list = field(default_factory=list)
    R: list = field(default_factory=list)

    def append(self, n, t, E, R):
        self.n.append(n)
        self.t.append(t)
        self.E.append(E)
        self.R.append(R)

    @property
    def ratio(self) -> np.ndarray:
        R = np.asarray(self.R)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(R > 0, np.asarray(self.E) / R, np.nan)

    def violations(self, slack: float = 1e-10) -> np.ndarray:
        E, R = np.asarray(self.E), np.asarray(self.R)
        return np.nonzero(E > R + slack * (1.0 + R))[0]

    def to_csv(self, path):
        return write_csv(path, ["n", "t", "E", "R", "ratio"], zip(self.n, self.t, self.E, self.R, self.ratio))


@dataclass
class RunResult:
    state: SolverState
    energy: EnergyTrace
    snapshots: dict
    probes: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None


def _levels(record, cfg) -> set:
    if record is None:
        return set()
    if record == "all":
        return set(range(cfg.n_steps + 1))
    return {int(n) for n in record}


def run(
    spec: ProblemSpec,
    cfg: SchemeConfig,
    record: Iterable[int] | str | None = None,
    probe: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    monitor: str = "fail",
    slack: float = 1e-10,
    track_energy: bool = True,
) -> RunResult:
    """Run ``cfg.n_steps`` steps from y = u0, y_i = 0.

    ``record`` lists time levels whose primary solution is kept (or
    ``"all"``); ``probe`` maps y to a vector of probe values recorded at
    every level. ``monitor`` is ``"fail"``, ``"warn"`` or ``"off"`` and
    governs what happens when E^n > R^n + slack (1 + R^n). For sigma < 0.5
    the bound is not guaranteed and violations only warn.
    """
    if monitor not in ("fail", "warn", "off"):
        raise ValueError(f"unknown monitor mode {monitor!r}")
    spec = absorb_gamma(spec)
    if cfg.sigma < 0.5 and monitor == "fail":
        monitor = "warn"
    levels = _levels(record, cfg)
    state = initial_state(spec, cfg)
    trace = EnergyTrace()
    snapshots = {}
    probes = [] if probe is not None else None

    R = energy(spec, state) if track_energy else np.nan
    if track_energy:
        trace.append(0, 0.0, R, R)
    if 0 in levels:
        snapshots[0] = state.y.copy()
    if probes is not None:
        probes.append(np.atleast_1d(probe(state.y)))
    warned = False

    for _ in range(cfg.n_steps):
        state, f_ns = _advance(spec, cfg, state)
        if track_energy:
            R += 0.5 * cfg.tau * _inv_norm2(spec.B, f_ns)
            E = energy(spec, state)
            trace.append(state.n, state.t, E, R)
            if monitor != "off" and E > R + slack * (1.0 + R):
                msg = f"energy bound violated at level {state.n}: E={E:.6e} > R={R:.6e}"
                if monitor == "fail":
                    raise StabilityViolation(msg, level=state.n, energy=E, bound=R)
                if not warned:
                    warnings.warn(msg, RuntimeWarning, stacklevel=2)
                    warned = True
        if state.n in levels:
            snapshots[state.n] = state.y.copy()
        if probes is not None:
            probes.append(np.atleast_1d(probe(state.y)))

    times = np.arange(cfg.n_steps + 1) * cfg.tau
    return RunResult(
        state=state,
        energy=trace,
        snapshots=snapshots,
        probes=None if probes is None else np.array(probes),
        times=times,
    )


def scheme_residuals(spec: ProblemSpec, cfg: SchemeConfig, old: SolverState, new: SolverState):
    """Relative residuals of the un-eliminated two-level equations.

    Returns ``(main, aux)``: the residual of the primary equation (times
    tau) and of each auxiliary equation (times tau), each divided by the
    largest norm among the terms it balances.
    """
    spec = absorb_gamma(spec)
    sigma, tau = cfg.sigma, cfg.tau
    a, b = spec.kernel.a, spec.kernel.b
    dy = new.y - old.y
    y_s = sigma * new.y + (1 - sigma) * old.y
    f_ns = _weighted_source(spec, cfg, old.n)
    c = a / b if spec.kernel.m else np.zeros(0)

    terms = [spec.B.apply(dy), tau * spec.A.apply(y_s), -tau * f_ns]
    if spec.kernel.m:
        terms.append(spec.C.apply(np.sum(c) * dy))
        mem = np.zeros(spec.dim)
        for ci, yo, yn in zip(c, old.aux, new.aux):
            mem += ci * (yn - yo)
        terms.append(-spec.C.apply(mem))
    r = sum(terms)
    main = np.linalg.norm(r) / max(max(np.linalg.norm(t) for t in terms), 1e-300)

    aux = []
    for bi, yo, yn in zip(b, old.aux, new.aux):
        parts = [yn - yo, tau * bi * (sigma * yn + (1 - sigma) * yo), -dy]
        aux.append(np.linalg.norm(sum(parts)) / max(max(np.linalg.norm(p) for p in parts), 1e-300))
    return main, aux
