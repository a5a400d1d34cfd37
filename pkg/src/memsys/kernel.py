"""Memory kernels: the tempered power kernel and exponential sums.

The exponential-sum kernel

    k(t) = gamma1 + gamma2 * delta(t) + sum_i a_i exp(-b_i t)

has Laplace transform gamma1/s + gamma2 + sum_i a_i/(b_i + s). The delta
part is never evaluated pointwise; the solver folds it into the operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvariantError

__all__ = [
    "AnalyticKernel",
    "ExpSumKernel",
    "PositivityReport",
    "eval_kernel",
    "eval_laplace",
    "eval_expsum",
    "eval_expsum_laplace",
    "check_positive_type",
    "default_positivity_grid",
]


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True)
class AnalyticKernel:
    """Tempered power kernel k(t) = t^(-alpha) exp(-delta t) / Gamma(1 - alpha).

    Attributes
    ----------
    alpha : float
        Singularity exponent, 0 < alpha < 1.
    delta : float
        Tempering rate, delta >= 0. For delta = 0 the kernel generates the
        Caputo derivative of order alpha.
    """

    alpha: float
    delta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.delta >= 0.0):
            raise DomainError(f"delta must be >= 0, got {self.delta}")

    def __call__(self, t):
        return eval_kernel(self, t)

    def laplace(self, s):
        return eval_laplace(self, s)

    def interval_integral(self, lo: float, hi: float) -> float:
        """Exact integral of k over [lo, hi] via the regularized incomplete gamma."""
        from scipy.special import gammainc

        if lo < 0 or hi < lo:
            raise DomainError(f"bad interval [{lo}, {hi}]")
        p = 1.0 - self.alpha
        if self.delta == 0.0:
            return (hi**p - lo**p) / (p * math.gamma(p))
        d = self.delta
        return d ** (-p) * (gammainc(p, d * hi) - gammainc(p, d * lo))


def eval_kernel(kern: AnalyticKernel, t):
    """Evaluate t^(-alpha) exp(-delta t) / Gamma(1 - alpha) for t > 0."""
    tt, scalar = _as_array(t)
    if np.any(~(tt > 0)):
        raise DomainError("kernel is singular at t = 0; need t > 0")
    out = tt ** (-kern.alpha) * np.exp(-kern.delta * tt) / math.gamma(1.0 - kern.alpha)
    return float(out) if scalar else out


def eval_laplace(kern: AnalyticKernel, s):
    """Laplace transform (s + delta)^(alpha - 1)."""
    ss, scalar = _as_array(s)
    shifted = ss + kern.delta
    if np.any(ss < 0) or np.any(~(shifted > 0)):
        raise DomainError("Laplace transform needs s >= 0 and s + delta > 0")
    out = shifted ** (kern.alpha - 1.0)
    return float(out) if scalar else out


@dataclass(frozen=True)
class ExpSumKernel:
    """Sum-of-exponentials kernel with optional constant and delta parts.

    Attributes
    ----------
    gamma1 : float
        Constant part of the kernel (Laplace term gamma1 / s).
    gamma2 : float
        Weight of the delta-function part (Laplace constant term).
    terms : tuple of (a_i, b_i)
        Weights and decay rates, all strictly positive unless constructed
        with ``check=False``.
    """

    gamma1: float = 0.0
    gamma2: float = 0.0
    terms: tuple = ()
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple((float(a), float(b)) for a, b in self.terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "gamma1", float(self.gamma1))
        object.__setattr__(self, "gamma2", float(self.gamma2))
        if not self.check:
            return
        if not (self.gamma1 >= 0.0 and self.gamma2 >= 0.0):
            raise InvariantError(
                f"gamma1, gamma2 must be >= 0 (got {self.gamma1}, {self.gamma2})"
            )
        for i, (a, b) in enumerate(terms, start=1):
            if not (a > 0.0 and b > 0.0 and math.isfinite(a) and math.isfinite(b)):
                raise InvariantError(f"term {i}: need a > 0, b > 0, got a={a}, b={b}")

    @classmethod
    def from_arrays(cls, a, b, gamma1=0.0, gamma2=0.0, check=True):
        return cls(gamma1, gamma2, tuple(zip(np.ravel(a), np.ravel(b))), check=check)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def a(self) -> np.ndarray:
        return np.array([a for a, _ in self.terms], dtype=float)

    @property
    def b(self) -> np.ndarray:
        return np.array([b for _, b in self.terms], dtype=float)

    def regular_part(self) -> "ExpSumKernel":
        """The pure exponential part, with gamma1 = gamma2 = 0."""
        return ExpSumKernel(0.0, 0.0, self.terms, check=self.check)

    def __call__(self, t):
        return eval_expsum(self, t)

    def laplace(self, s):
        return eval_expsum_laplace(self, s)

    def interval_integral(self, lo: float, hi: float) -> float:
        """Integral of the regular part over [lo, hi]."""
        a, b = self.a, self.b
        return float(
            self.gamma1 * (hi - lo) + np.sum(a / b * (np.exp(-b * lo) - np.exp(-b * hi)))
        )


def eval_expsum(kern: ExpSumKernel, t):
    """Regular part gamma1 + sum a_i exp(-b_i t)."""
    tt, scalar = _as_array(t)
    a, b = kern.a, kern.b
    out = kern.gamma1 + np.exp(-np.multiply.outer(tt, b)) @ a
    return float(out) if scalar else out


def eval_expsum_laplace(kern: ExpSumKernel, s):
    """gamma1/s + gamma2 + sum a_i / (b_i + s)."""
    ss, scalar = _as_array(s)
    if np.any(ss < 0):
        raise DomainError("Laplace transform evaluated at s < 0")
    a, b = kern.a, kern.b
    out = kern.gamma2 + (1.0 / np.add.outer(ss, b)) @ a
    if kern.gamma1 != 0.0:
        if np.any(ss == 0):
            raise DomainError("gamma1 / s is singular at s = 0")
        out = out + kern.gamma1 / ss
    return float(out) if scalar else out


def default_positivity_grid() -> np.ndarray:
    return np.logspace(-4, 2, 200)


@dataclass
class PositivityReport:
    t: np.ndarray
    k: np.ndarray
    dk: np.ndarray
    d2k: np.ndarray
    nonnegative: bool
    nonincreasing: bool
    convex: bool

    @property
    def ok(self) -> bool:
        return self.nonnegative and self.nonincreasing and self.convex


def check_positive_type(kern: ExpSumKernel, t_grid=None) -> PositivityReport:
    """Check the pointwise sufficient conditions k >= 0, k' <= 0, k'' >= 0.

    Derivatives are taken in closed form from the exponential terms.
    """
    t = default_positivity_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be nonempty, positive and strictly increasing")
    a, b = kern.a, kern.b
    e = np.exp(-np.multiply.outer(t, b))
    k = kern.gamma1 + e @ a
    dk = -(e @ (a * b))
    d2k = e @ (a * b * b)
    return PositivityReport(
        t=t,
        k=k,
        dk=dk,
        d2k=d2k,
        nonnegative=bool(np.all(k >= 0)),
        nonincreasing=bool(np.all(dk <= 0)),
        convex=bool(np.all(d2k >= 0)),
    )
