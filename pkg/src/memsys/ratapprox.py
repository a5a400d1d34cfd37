"""Exponential-sum kernels from rational approximation of the Laplace transform.

A fit of K(s) on [0, s_max] by gamma2 + sum a_i / (b_i + s) is, term by
term, the Laplace transform of gamma2 delta(t) + sum a_i exp(-b_i t). The
rational approximant is built with AAA (greedy barycentric rational
approximation), converted to pole/residue form and checked for the sign
conditions a_i > 0, b_i > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from ._io import atomic_write_text, write_csv
from .errors import ConversionFailure, DomainError, FitFailure, ParseError
from .kernel import ExpSumKernel, check_positive_type

__all__ = [
    "FitConfig",
    "FitReport",
    "Certification",
    "Barycentric",
    "PartialFractions",
    "aaa",
    "poles_to_terms",
    "fit_exp_sum",
    "certify",
    "default_s_grid",
    "default_t_grid",
    "sample_grid",
    "load_coefficients",
    "save_coefficients",
    "format_coefficients",
    "parse_coefficients",
    "table1_kernel",
    "TABLE1",
    "write_certification_csv",
]


# Coefficients of the m = 10 fits of (s + 1)^(alpha - 1) on [0, 1e3].
TABLE1 = {
    0.25: dict(
        gamma2=2.652102e-04,
        a=[5.521381e-01, 2.880242e-01, 2.752413e-01, 3.105713e-01, 3.787098e-01,
           4.824220e-01, 6.372698e-01, 8.891043e-01, 1.408493e+00, 3.276183e+00],
        b=[1.020117e+00, 1.366452e+00, 2.383162e+00, 4.913933e+00, 1.118313e+01,
           2.712735e+01, 6.947911e+01, 1.907182e+02, 5.988445e+02, 2.794376e+03],
    ),
    0.5: dict(
        gamma2=4.969023e-03,
        a=[2.819331e-01, 3.375860e-01, 4.623698e-01, 6.873945e-01, 1.072155e+00,
           1.730473e+00, 2.904397e+00, 5.242115e+00, 1.131457e+01, 4.224693e+01],
        b=[1.047498e+00, 1.485379e+00, 2.727644e+00, 5.845661e+00, 1.364996e+01,
           3.361376e+01, 8.670029e+01, 2.388307e+02, 7.591537e+02, 3.797078e+03],
    ),
    0.75: dict(
        gamma2=7.245547e-02,
        a=[1.104072e-01, 2.289235e-01, 4.363529e-01, 8.492928e-01, 1.692847e+00,
           3.462139e+00, 7.385665e+00, 1.729807e+01, 5.160519e+01, 3.306752e+02],
        b=[1.083461e+00, 1.631796e+00, 3.155924e+00, 7.015601e+00, 1.675636e+01,
           4.174784e+01, 1.081333e+02, 2.986573e+02, 9.649405e+02, 5.301624e+03],
    ),
}

_TABLE1_FILES = {0.25: "table1_alpha0.25.txt", 0.5: "table1_alpha0.5.txt", 0.75: "table1_alpha0.75.txt"}


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_exp_sum`.

    ``n_samples`` points are placed at s = 0 and log-spaced over
    [1e-6 s_max, s_max].
    """

    m: int = 10
    s_max: float = 1e3
    n_samples: int = 2000
    include_gamma2: bool = True
    max_attempts: int = 3

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be an integer >= 1, got {self.m}")
        if not self.s_max > 0:
            raise DomainError(f"s_max must be > 0, got {self.s_max}")
        if self.n_samples < 4 * self.m:
            raise DomainError(f"n_samples must be >= 4 m = {4 * self.m}, got {self.n_samples}")


@dataclass
class Certification:
    """Pointwise error series behind the reported maxima."""

    s: np.ndarray
    K: np.ndarray
    K_fit: np.ndarray
    eps_F: np.ndarray
    t: np.ndarray
    k: np.ndarray
    k_fit: np.ndarray
    eps_f: np.ndarray


@dataclass
class FitReport:
    kernel: ExpSumKernel
    eps_F_max: float
    eps_f_max_on_window: float
    positivity_ok: bool
    series: Optional[Certification] = field(default=None, repr=False)
    attempts: int = 1


@dataclass
class Barycentric:
    """r(z) = sum(w_j f_j / (z - z_j)) / sum(w_j / (z - z_j))."""

    support_points: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        zj, fj, wj = self.support_points, self.values, self.weights
        with np.errstate(divide="ignore", invalid="ignore"):
            C = 1.0 / np.subtract.outer(z, zj)
            r = (C @ (wj * fj)) / (C @ wj)
        hit = np.equal.outer(z, zj)
        rows, cols = np.nonzero(hit)
        r[rows] = fj[cols]
        return r


@dataclass
class PartialFractions:
    """gamma2 + sum residues_i / (s - poles_i); poles are -b_i."""

    gamma2: float
    residues: np.ndarray
    poles: np.ndarray

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self.gamma2 + (1.0 / np.subtract.outer(s, self.poles)) @ self.residues

    @property
    def a(self):
        return self.residues

    @property
    def b(self):
        return -self.poles


def aaa(z, f, max_support: int, rtol: float = 1e-13) -> Barycentric:
    """Greedy AAA fit using at most ``max_support`` support points.

    Stops early once the max error on the sample set is below
    ``rtol * max|f|``.
    """
    z = np.asarray(z, dtype=float)
    f = np.asarray(f, dtype=float)
    if z.shape != f.shape or z.ndim != 1:
        raise ValueError("z and f must be 1-D arrays of equal length")
    if max_support < 1 or max_support > len(z):
        raise ValueError("max_support must be in [1, len(z)]")
    scale = np.max(np.abs(f))
    free = np.ones(len(z), dtype=bool)
    r = np.full_like(f, np.mean(f))
    idx = []
    w = np.ones(1)
    for _ in range(max_support):
        err = np.where(free, np.abs(f - r), -1.0)
        j = int(np.argmax(err))
        if idx and err[j] <= rtol * scale:
            break
        idx.append(j)
        free[j] = False
        zj, fj = z[idx], f[idx]
        C = 1.0 / np.subtract.outer(z[free], zj)
        loewner = (f[free][:, None] - fj[None, :]) * C
        _, _, vh = np.linalg.svd(loewner, full_matrices=False)
        w = vh[-1]
        r = f.copy()
        r[free] = (C @ (w * fj)) / (C @ w)
    return Barycentric(z[idx].copy(), f[idx].copy(), w.copy())


def poles_to_terms(support_points, weights, values, imag_tol: float = 1e-8) -> PartialFractions:
    """Convert a barycentric rational function to pole/residue form.

    Poles are the finite generalized eigenvalues of the arrowhead pencil;
    residues are N(p) / D'(p); the constant is r(infinity).
    """
    zj = np.asarray(support_points, dtype=float)
    wj = np.asarray(weights, dtype=float)
    fj = np.asarray(values, dtype=float)
    n = len(zj)
    if n == 0:
        raise ConversionFailure("empty barycentric representation")
    wsum = np.sum(wj)
    if wsum == 0 or not np.isfinite(wsum):
        raise ConversionFailure("degree deficient representation: sum of weights vanishes")
    gamma2 = float(np.sum(wj * fj) / wsum)
    if n == 1:
        return PartialFractions(gamma2, np.zeros(0), np.zeros(0))

    E = np.zeros((n + 1, n + 1))
    E[0, 1:] = wj
    E[1:, 0] = 1.0
    E[1:, 1:] = np.diag(zj)
    M = np.eye(n + 1)
    M[0, 0] = 0.0
    ev = scipy.linalg.eigvals(E, M)
    poles = ev[np.isfinite(ev)]
    if len(poles) != n - 1:
        raise ConversionFailure(
            f"pencil is defective: {len(poles)} finite eigenvalues, expected {n - 1}"
        )
    C = 1.0 / np.subtract.outer(poles, zj)
    residues = (C @ (wj * fj)) / (-(C**2) @ wj)
    if not np.all(np.isfinite(residues)):
        raise ConversionFailure("nonfinite residues (pole coincides with a support point)")

    scale = np.maximum(np.abs(poles), 1.0)
    if np.all(np.abs(poles.imag) <= imag_tol * scale):
        poles = poles.real
        residues = residues.real
    order = np.argsort(-np.real(poles))
    return PartialFractions(gamma2, residues[order], poles[order])


def sample_grid(s_max: float, n: int, jitter: float = 0.0, seed: int = 0) -> np.ndarray:
    """s = 0 plus n - 1 log-spaced points in [1e-6 s_max, s_max]."""
    e = np.linspace(-6.0, 0.0, n - 1)
    if jitter:
        rng = np.random.default_rng(seed)
        e[1:-1] += jitter * (e[1] - e[0]) * rng.uniform(-0.5, 0.5, n - 3)
    return np.concatenate(([0.0], s_max * 10.0**e))


def default_s_grid(s_max: float = 1e3, n: int = 2000) -> np.ndarray:
    return np.concatenate(([0.0], np.logspace(np.log10(s_max) - 6, np.log10(s_max), n)))


def default_t_grid(lo: float = 1e-3, hi: float = 1e2, n: int = 500) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _refit_residues(poles, s, f):
    """Least-squares residues for fixed poles with no constant term."""
    M = 1.0 / np.subtract.outer(s, poles)
    scale = np.max(np.abs(M), axis=0)
    coef, *_ = np.linalg.lstsq(M / scale, f, rcond=None)
    return coef / scale


def _pad_terms(a, b, m, s_max, scale):
    # Early AAA convergence leaves fewer than m poles; fill with inert terms.
    a, b = list(a), list(b)
    j = 0
    while len(a) < m:
        j += 1
        b.append(s_max * (1 + j))
        a.append(1e-15 * scale * b[-1] / s_max)
    return np.array(a), np.array(b)


def _attempt(kern, cfg: FitConfig, s, f):
    scale = float(np.max(np.abs(f)))
    bary = aaa(s, f, cfg.m + 1)
    pf = poles_to_terms(bary.support_points, bary.weights, bary.values)
    if np.iscomplexobj(pf.poles):
        raise FitFailure("complex poles in fit", poles=pf.poles, residues=pf.residues)
    poles, res = pf.poles, pf.residues
    gamma2 = pf.gamma2
    # Terms whose contribution is below roundoff are Froissart-type artefacts.
    contrib = np.abs(res) / np.maximum(np.abs(poles), 1e-300)
    spurious = (contrib < 1e-13 * scale) & ((res <= 0) | (poles >= 0))
    poles, res = poles[~spurious], res[~spurious]
    if not cfg.include_gamma2:
        res = _refit_residues(poles, s, f)
        gamma2 = 0.0
    inside = (poles >= 0) & (poles <= cfg.s_max)
    if np.any(poles >= 0):
        where = "inside" if np.any(inside) else "outside"
        raise FitFailure(
            f"pole(s) {poles[poles >= 0]} at nonnegative s ({where} [0, s_max])",
            poles=poles,
            residues=res,
        )
    if np.any(res <= 0):
        raise FitFailure(f"nonpositive residue(s) {res[res <= 0]}", poles=poles, residues=res)
    if gamma2 < 0:
        if gamma2 < -1e-13 * scale:
            raise FitFailure(f"negative constant term {gamma2}")
        gamma2 = 0.0
    a, b = _pad_terms(res, -poles, cfg.m, cfg.s_max, scale)
    order = np.argsort(b)
    return ExpSumKernel.from_arrays(a[order], b[order], gamma1=0.0, gamma2=gamma2)


def fit_exp_sum(kern, cfg: FitConfig = FitConfig(), t_window=None) -> FitReport:
    """Fit gamma2 + sum_{i<=m} a_i/(b_i + s) to ``kern.laplace`` on [0, s_max].

    ``kern`` needs a ``laplace(s)`` method; if it is also callable, the
    kernel error on ``t_window`` is certified as well. Up to
    ``cfg.max_attempts`` fits are tried on increasingly perturbed sample
    grids before giving up with :class:`FitFailure`.
    """
    last = None
    for attempt in range(cfg.max_attempts):
        s = sample_grid(cfg.s_max, cfg.n_samples, jitter=0.5 * attempt, seed=attempt)
        f = np.asarray(kern.laplace(s), dtype=float)
        if not np.all(np.isfinite(f)):
            raise DomainError("K(s) is not finite on the sample grid")
        try:
            fitted = _attempt(kern, cfg, s, f)
        except (FitFailure, ConversionFailure) as exc:
            last = exc
            continue
        report = certify(kern, fitted, s_grid=s, t_grid=t_window)
        report.attempts = attempt + 1
        return report
    if isinstance(last, FitFailure):
        raise FitFailure(
            f"fit failed after {cfg.max_attempts} attempts: {last}",
            poles=last.poles,
            residues=last.residues,
        ) from last
    raise FitFailure(f"fit failed after {cfg.max_attempts} attempts: {last}") from last


def certify(kern_true, kern_fit: ExpSumKernel, s_grid=None, t_grid=None) -> FitReport:
    """Maximum errors |K_fit - K| on ``s_grid`` and |k_fit - k| on ``t_grid``.

    The kernel error is skipped (reported as nan) when ``kern_true`` is not
    callable in the time domain.
    """
    s = default_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if s.size == 0 or t.size == 0:
        raise DomainError("grids must be nonempty")
    if np.any(t <= 0):
        raise DomainError("t_grid must be strictly positive")
    K = np.asarray(kern_true.laplace(s), dtype=float)
    K_fit = np.asarray(kern_fit.laplace(s), dtype=float)
    eps_F = np.abs(K_fit - K)
    k_fit = np.asarray(kern_fit(t), dtype=float)
    if callable(kern_true):
        k = np.asarray(kern_true(t), dtype=float)
        eps_f = np.abs(k_fit - k)
        eps_f_max = float(np.max(eps_f))
    else:
        k = np.full_like(t, np.nan)
        eps_f = np.full_like(t, np.nan)
        eps_f_max = float("nan")
    series = Certification(s, K, K_fit, eps_F, t, k, k_fit, eps_f)
    return FitReport(
        kernel=kern_fit,
        eps_F_max=float(np.max(eps_F)),
        eps_f_max_on_window=eps_f_max,
        positivity_ok=check_positive_type(kern_fit).ok,
        series=series,
    )


def write_certification_csv(report: FitReport, s_path, t_path):
    c = report.series
    write_csv(s_path, ["s", "K", "K_tilde", "eps_F"], zip(c.s, c.K, c.K_fit, c.eps_F))
    write_csv(t_path, ["t", "k", "k_tilde", "eps_f"], zip(c.t, c.k, c.k_fit, c.eps_f))


# -- coefficient files --------------------------------------------------------
#
#   m gamma1 gamma2
#   a_1 b_1
#   ...
#   a_m b_m


def _num(x: float) -> str:
    return f"{x:.16e}"


def format_coefficients(kern: ExpSumKernel) -> str:
    lines = [f"{kern.m} {_num(kern.gamma1)} {_num(kern.gamma2)}"]
    lines += [f"{_num(a)} {_num(b)}" for a, b in kern.terms]
    return "\n".join(lines) + "\n"


def parse_coefficients(text: str) -> ExpSumKernel:
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), start=1)]
    lines = [(i, parts) for i, parts in lines if parts]
    if not lines:
        raise ParseError("empty coefficient file", 1)
    lineno, head = lines[0]
    if len(head) != 3:
        raise ParseError("header must read 'm gamma1 gamma2'", lineno)
    try:
        m = int(head[0])
        gamma1, gamma2 = float(head[1]), float(head[2])
    except ValueError as exc:
        raise ParseError(f"bad header: {exc}", lineno) from None
    if m < 0:
        raise ParseError(f"negative term count {m}", lineno)
    body = lines[1:]
    if len(body) != m:
        where = body[m][0] if len(body) > m else (body[-1][0] + 1 if body else lineno + 1)
        raise ParseError(f"expected {m} coefficient lines, found {len(body)}", where)
    terms = []
    for lineno, parts in body:
        if len(parts) != 2:
            raise ParseError("expected 'a_i b_i'", lineno)
        try:
            terms.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return ExpSumKernel(gamma1, gamma2, tuple(terms))


def save_coefficients(kern: ExpSumKernel, path) -> Path:
    return atomic_write_text(path, format_coefficients(kern))


def load_coefficients(path) -> ExpSumKernel:
    return parse_coefficients(Path(path).read_text())


def table1_path(alpha: float):
    try:
        name = _TABLE1_FILES[alpha]
    except KeyError:
        raise DomainError(f"no tabulated kernel for alpha={alpha}; have {sorted(_TABLE1_FILES)}") from None
    return resources.files("memsys") / "data" / name


def table1_kernel(alpha: float) -> ExpSumKernel:
    """Shipped m = 10 kernel for alpha in {0.25, 0.5, 0.75}, delta = 1."""
    return parse_coefficients(table1_path(alpha).read_text())
