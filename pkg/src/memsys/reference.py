"""Independent reference solutions used to check the time-stepping scheme.

``dense_coupled_reference`` integrates the assembled block system of the
primary and auxiliary states with classical RK4. ``nonlocal_quadrature_reference``
never forms auxiliary states: it discretizes the convolution directly with
product-integration weights of the true kernel.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
from scipy import integrate

from .errors import QuadratureFailure, SingularMass
from .kernel import AnalyticKernel, ExpSumKernel
from .linop import LinearCombination, cg
from .solver import ProblemSpec, absorb_gamma

__all__ = [
    "block_operators",
    "dense_coupled_reference",
    "product_weights",
    "nonlocal_quadrature_reference",
    "kernel_l1_error",
    "kernel_mismatch_contribution",
]

DENSE_LIMIT = 2000
NONLOCAL_DIM_LIMIT = 512
NONLOCAL_STEP_LIMIT = 4000


def block_operators(spec: ProblemSpec):
    """Dense block mass and stiffness matrices of the coupled local system.

    Mass: [[B + sum c_i C, -c_1 C, ...], [-c_i C, c_i C (diagonal)]] with
    c_i = a_i / b_i; stiffness: diag(A, a_1 C, ..., a_m C).
    """
    spec = absorb_gamma(spec)
    d, m = spec.dim, spec.kernel.m
    if d * (m + 1) > DENSE_LIMIT:
        raise ValueError(f"coupled system of size {d * (m + 1)} exceeds dense limit {DENSE_LIMIT}")
    B, C, A = spec.B.to_dense(), spec.C.to_dense(), spec.A.to_dense()
    a, b = spec.kernel.a, spec.kernel.b
    c = a / b if m else np.zeros(0)
    n = d * (m + 1)
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    M[:d, :d] = B + np.sum(c) * C
    K[:d, :d] = A
    for i in range(m):
        blk = slice(d * (i + 1), d * (i + 2))
        M[:d, blk] = -c[i] * C
        M[blk, :d] = -c[i] * C
        M[blk, blk] = c[i] * C
        K[blk, blk] = a[i] * C
    return M, K


def dense_coupled_reference(spec: ProblemSpec, t_end: float, fine_steps: int, return_all: bool = False):
    """Primary solution at ``t_end`` from RK4 on the assembled block system.

    The mass matrix is Cholesky-factorized once. Raises ``ValueError`` if
    ``fine_steps`` is too small for RK4 to be stable on the stiffest mode.
    """
    spec = absorb_gamma(spec)
    d, m = spec.dim, spec.kernel.m
    M, K = block_operators(spec)
    try:
        factor = scipy.linalg.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMass(f"block mass matrix is not positive definite: {exc}") from exc
    G = scipy.linalg.cho_solve(factor, K)
    h = t_end / fine_steps
    rho = float(np.max(np.abs(np.linalg.eigvals(G)))) if G.size else 0.0
    if h * rho > 2.5:
        need = math.ceil(t_end * rho / 2.5)
        raise ValueError(f"fine_steps={fine_steps} too coarse for RK4 (spectral radius {rho:.3e}); need >= {need}")

    forced = spec.f is not None
    if forced:
        E0 = np.zeros((d * (m + 1), d))
        E0[:d] = np.eye(d)
        Minv_e = scipy.linalg.cho_solve(factor, E0)

    def rhs(t, v):
        out = -G @ v
        if forced:
            out += Minv_e @ spec.source(t)
        return out

    v = np.zeros(d * (m + 1))
    v[:d] = spec.u0
    history = [v[:d].copy()] if return_all else None
    t = 0.0
    for n in range(fine_steps):
        t = n * h
        k1 = rhs(t, v)
        k2 = rhs(t + h / 2, v + h / 2 * k1)
        k3 = rhs(t + h / 2, v + h / 2 * k2)
        k4 = rhs(t + h, v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if return_all:
            history.append(v[:d].copy())
    if return_all:
        return np.array(history)
    return v[:d].copy()


def _quad(fun, lo, hi, **kw):
    val, err, *rest = integrate.quad(fun, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200, full_output=1, **kw)
    info = rest[1] if len(rest) > 1 else ""
    if len(rest) > 1 and err > 1e-8 * max(abs(val), 1e-12):
        raise QuadratureFailure(f"quadrature failed on [{lo}, {hi}]: {info}", interval=(lo, hi))
    return val


def product_weights(kernel, tau: float, n: int) -> np.ndarray:
    """W_j = integral of k over [j tau, (j+1) tau], j = 0 .. n-1.

    For the tempered power kernel the singular factor r^(-alpha) on the
    first interval is handled by an algebraic weight function. A delta
    part gamma2 of an exponential-sum kernel is added to W_0.
    """
    W = np.empty(n)
    if isinstance(kernel, AnalyticKernel):
        g = math.gamma(1.0 - kernel.alpha)
        smooth = lambda r: math.exp(-kernel.delta * r) / g  # noqa: E731
        W[0] = _quad(smooth, 0.0, tau, weight="alg", wvar=(-kernel.alpha, 0.0))
        full = lambda r: r ** (-kernel.alpha) * smooth(r)  # noqa: E731
        for j in range(1, n):
            W[j] = _quad(full, j * tau, (j + 1) * tau)
        return W
    if isinstance(kernel, ExpSumKernel):
        reg = kernel.regular_part()
        fun = lambda r: float(reg(r)) + kernel.gamma1  # noqa: E731
        for j in range(n):
            W[j] = _quad(fun, j * tau, (j + 1) * tau)
        W[0] += kernel.gamma2
        return W
    for j in range(n):
        W[j] = _quad(kernel, j * tau, (j + 1) * tau)
    return W


def nonlocal_quadrature_reference(spec: ProblemSpec, tau: float, n_steps: int, kernel=None, tol: float = 1e-12):
    """Backward-Euler trajectory of the nonlocal equation, history kept in full.

    At level n+1 with increments D_k = y^{k+1} - y^k,

        B D_n + sum_{j=0}^{n} W_j C D_{n-j} + tau A y^{n+1} = tau f(t^{n+1}),

    with product-integration weights W_j from :func:`product_weights`.
    ``kernel`` overrides ``spec.kernel`` (e.g. an :class:`AnalyticKernel`).
    Returns the array of all levels, shape (n_steps + 1, dim).
    """
    kernel = spec.kernel if kernel is None else kernel
    d = spec.dim
    if d > NONLOCAL_DIM_LIMIT:
        raise ValueError(f"dimension {d} exceeds limit {NONLOCAL_DIM_LIMIT}")
    if n_steps > NONLOCAL_STEP_LIMIT:
        raise ValueError(f"n_steps {n_steps} exceeds limit {NONLOCAL_STEP_LIMIT}")
    W = product_weights(kernel, tau, n_steps)
    D = LinearCombination([(1.0, spec.B), (W[0], spec.C), (tau, spec.A)])
    Bw = LinearCombination([(1.0, spec.B), (W[0], spec.C)])

    Y = np.empty((n_steps + 1, d))
    Y[0] = spec.u0
    incs = np.empty((n_steps, d))
    for n in range(n_steps):
        hist = np.zeros(d)
        if n:
            # sum_{j=1}^{n} W_j D_{n-j}
            hist = W[1 : n + 1] @ incs[n - 1 :: -1][:n]
        rhs = Bw.apply(Y[n]) - spec.C.apply(hist) + tau * spec.source((n + 1) * tau)
        Y[n + 1] = cg(D, rhs, tol=tol, x0=Y[n]).x
        incs[n] = Y[n + 1] - Y[n]
    return Y


def kernel_l1_error(kernel, approx, T: float, n_pieces: int = 200) -> float:
    """Integral of |k - k_approx| over (0, T), the regular parts only.

    The integrand is split on a log-spaced partition so the singularity of
    a tempered power kernel at the origin is resolved; the piece (0, t_0)
    with t_0 = 1e-12 T is bounded by the integral of k plus t_0 k_approx(0).
    """
    reg = approx.regular_part() if isinstance(approx, ExpSumKernel) else approx
    edges = np.concatenate(([0.0], np.logspace(-12, 0, n_pieces + 1) * T))
    head = kernel.interval_integral(0.0, edges[1]) if hasattr(kernel, "interval_integral") else 0.0
    total = head + edges[1] * abs(float(reg(0.0)))
    diff = lambda r: abs(float(kernel(r)) - float(reg(r)))  # noqa: E731
    for lo, hi in zip(edges[1:-1], edges[2:]):
        total += integrate.quad(diff, lo, hi, limit=200, epsabs=1e-15, epsrel=1e-10)[0]
    return total


def kernel_mismatch_contribution(spec: ProblemSpec, kernel, tau: float, levels) -> float:
    """Accumulated effect of replacing ``kernel`` by ``spec.kernel`` along a trajectory.

    With D_k = y^{k+1} - y^k taken from ``levels`` (shape (n+1, dim)) and
    dW_j the integral of k - k_approx over [j tau, (j+1) tau], the memory
    terms of the two nonlocal equations differ at level n by
    r_n = C sum_j dW_j D_{n-j}. Returns sum_n max|r_n|, a bound on the
    induced sup-norm deviation when B is the (weighted) identity and the
    backward-Euler step is sup-norm contractive.
    """
    levels = np.asarray(levels)
    n = levels.shape[0] - 1
    if n < 1:
        return 0.0
    dW = product_weights(kernel, tau, n) - product_weights(spec.kernel, tau, n)
    D = np.diff(levels, axis=0)
    total = 0.0
    for k in range(n):
        total += float(np.max(np.abs(spec.C.apply(dW[: k + 1] @ D[k::-1]))))
    return total
