"""Self-adjoint positive definite operators on finite-dimensional spaces.

Vectors are plain 1-D float arrays. Each operator carries the weight of the
inner product of its space: 1 for abstract vectors, h1*h2 for grid
functions. The weight enters inner products and norms only; operators act
on nodal values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import NegativeQuadraticForm, NoConvergence

__all__ = [
    "LinearOperator",
    "ScaledIdentity",
    "DiagonalOperator",
    "MatrixOperator",
    "GridLaplacian",
    "LinearCombination",
    "inner",
    "norm",
    "norm_D",
    "cg",
    "solve_spd",
    "composite",
    "CGResult",
]


class LinearOperator:
    """Abstract SPD operator.

    Subclasses implement ``apply`` and set ``dim``, ``weight`` and the
    declared lower bound ``nu`` of (Dv, v) / (v, v).
    """

    dim: int
    weight: float = 1.0
    nu: float = 0.0

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: operator {self.dim}, vector {v.shape}")
        return v

    def __call__(self, v):
        return self.apply(v)

    def __matmul__(self, v):
        return self.apply(v)

    def to_dense(self) -> np.ndarray:
        cols = [self.apply(e) for e in np.eye(self.dim)]
        return np.column_stack(cols)

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __rmul__(self, c):
        return LinearCombination([(float(c), self)])


class ScaledIdentity(LinearOperator):
    def __init__(self, dim: int, c: float = 1.0, weight: float = 1.0):
        self.dim = int(dim)
        self.c = float(c)
        self.weight = float(weight)
        self.nu = self.c

    def apply(self, v):
        return self.c * self._check(v)

    def to_dense(self):
        return self.c * np.eye(self.dim)

    def __repr__(self):
        return f"ScaledIdentity(dim={self.dim}, c={self.c})"


class DiagonalOperator(LinearOperator):
    def __init__(self, diag, weight: float = 1.0):
        self.diag = np.asarray(diag, dtype=float).copy()
        self.dim = len(self.diag)
        self.weight = float(weight)
        self.nu = float(np.min(self.diag))

    def apply(self, v):
        return self.diag * self._check(v)

    def to_dense(self):
        return np.diag(self.diag)


class MatrixOperator(LinearOperator):
    """Explicit symmetric matrix (dense or scipy.sparse)."""

    def __init__(self, matrix, weight: float = 1.0, nu=None):
        self.matrix = matrix
        self.dim = matrix.shape[0]
        self.weight = float(weight)
        if nu is None:
            dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
            nu = float(np.linalg.eigvalsh(0.5 * (dense + dense.T))[0])
        self.nu = nu

    def apply(self, v):
        return np.asarray(self.matrix @ self._check(v)).ravel()

    def to_dense(self):
        return self.matrix.toarray() if sp.issparse(self.matrix) else np.array(self.matrix, dtype=float)


class GridLaplacian(LinearOperator):
    """Five-point -Laplacian on the interior nodes of the unit square.

    Homogeneous Dirichlet data; vectors hold the (N1-1)*(N2-1) interior
    values with x1 varying slowest (index i1*(N2-1) + i2).
    """

    def __init__(self, N1: int, N2: int | None = None):
        N2 = N1 if N2 is None else N2
        if N1 < 2 or N2 < 2:
            raise ValueError("need N1, N2 >= 2 for a nonempty interior")
        self.N1, self.N2 = int(N1), int(N2)
        self.h1, self.h2 = 1.0 / N1, 1.0 / N2
        self.shape = (self.N1 - 1, self.N2 - 1)
        self.dim = self.shape[0] * self.shape[1]
        self.weight = self.h1 * self.h2
        self.nu = self.eigenvalue(1, 1)

    def eigenvalue(self, k: int, l: int) -> float:
        return 4.0 / self.h1**2 * math.sin(k * math.pi * self.h1 / 2) ** 2 + 4.0 / self.h2**2 * math.sin(
            l * math.pi * self.h2 / 2
        ) ** 2

    @property
    def nu_max(self) -> float:
        return self.eigenvalue(self.N1 - 1, self.N2 - 1)

    def apply(self, v):
        w = self._check(v).reshape(self.shape)
        out = (2.0 / self.h1**2 + 2.0 / self.h2**2) * w
        out[1:, :] -= w[:-1, :] / self.h1**2
        out[:-1, :] -= w[1:, :] / self.h1**2
        out[:, 1:] -= w[:, :-1] / self.h2**2
        out[:, :-1] -= w[:, 1:] / self.h2**2
        return out.ravel()

    def nodes(self):
        """Interior node coordinates (x1, x2), each of length dim."""
        x1 = np.arange(1, self.N1) * self.h1
        x2 = np.arange(1, self.N2) * self.h2
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        return X1.ravel(), X2.ravel()

    def to_sparse(self):
        def lap1(n, h):
            return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2

        n1, n2 = self.shape
        return (sp.kron(lap1(n1, self.h1), sp.eye(n2)) + sp.kron(sp.eye(n1), lap1(n2, self.h2))).tocsr()

    def to_dense(self):
        return self.to_sparse().toarray()

    def __repr__(self):
        return f"GridLaplacian(N1={self.N1}, N2={self.N2})"


class LinearCombination(LinearOperator):
    """v -> sum_k c_k D_k v, evaluated term by term in a fixed order."""

    def __init__(self, terms: Sequence[tuple[float, LinearOperator]]):
        terms = [(float(c), op) for c, op in terms if c != 0.0] or [(0.0, terms[0][1])]
        dims = {op.dim for _, op in terms}
        if len(dims) != 1:
            raise ValueError(f"dimension mismatch in combination: {sorted(dims)}")
        weights = {op.weight for _, op in terms}
        if len(weights) != 1:
            raise ValueError("operators live in spaces with different inner-product weights")
        self.terms = terms
        self.dim = dims.pop()
        self.weight = weights.pop()
        self.nu = sum(c * op.nu for c, op in terms if c > 0)

    def apply(self, v):
        v = self._check(v)
        out = np.zeros(self.dim)
        for c, op in self.terms:
            out += c * op.apply(v)
        return out

    def to_dense(self):
        return sum(c * op.to_dense() for c, op in self.terms)

    def __repr__(self):
        return " + ".join(f"{c:g}*{op!r}" for c, op in self.terms)


def inner(v, w, weight: float = 1.0) -> float:
    return weight * float(np.dot(v, w))


def norm(v, weight: float = 1.0) -> float:
    return math.sqrt(inner(v, v, weight))


def norm_D(D: LinearOperator, v, tol: float = 1e-12) -> float:
    """Energy norm sqrt((Dv, v)) in the space of ``D``."""
    q = inner(D.apply(v), v, D.weight)
    if q < 0:
        scale = inner(v, v, D.weight)
        if q < -tol * max(scale, 1e-300) * max(abs(D.nu), 1.0):
            raise NegativeQuadraticForm(f"(Dv, v) = {q:.3e} < 0")
        return 0.0
    return math.sqrt(q)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def cg(D: LinearOperator, rhs, tol: float = 1e-10, max_iter: int | None = None, x0=None) -> CGResult:
    """Plain conjugate gradients, stopping on ||D x - rhs|| <= tol ||rhs||."""
    b = np.asarray(rhs, dtype=float)
    max_iter = 10 * D.dim if max_iter is None else max_iter
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - D.apply(x) if x0 is not None else b.copy()
    rr = float(r @ r)
    target = (tol * bnorm) ** 2
    if rr <= target:
        return CGResult(x, 0, math.sqrt(rr) / bnorm)
    p = r.copy()
    for it in range(1, max_iter + 1):
        Dp = D.apply(p)
        pDp = float(p @ Dp)
        if pDp <= 0:
            raise NoConvergence(f"operator not positive definite (p^T D p = {pDp:.3e})", math.sqrt(rr) / bnorm, it)
        alpha = rr / pDp
        x += alpha * p
        r -= alpha * Dp
        rr_new = float(r @ r)
        if rr_new <= target:
            # confirm against the true residual; recursion drift can fool the test
            true_r = b - D.apply(x)
            rr_true = float(true_r @ true_r)
            if rr_true <= target:
                return CGResult(x, it, math.sqrt(rr_true) / bnorm)
            r = true_r
            rr_new = rr_true
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = float(np.linalg.norm(b - D.apply(x))) / bnorm
    raise NoConvergence(f"CG did not converge in {max_iter} iterations (residual {res:.3e})", res, max_iter)


def solve_spd(D: LinearOperator, rhs, tol: float = 1e-10, max_iter: int | None = None, x0=None) -> np.ndarray:
    return cg(D, rhs, tol=tol, max_iter=max_iter, x0=x0).x


def composite(B: LinearOperator, C: LinearOperator, A: LinearOperator, mu: float, sigma: float, tau: float):
    """The operator B + sigma tau (mu C + A) of the per-step system."""
    if not (0.0 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (0, 1], got {sigma}")
    if tau < 0 or mu < 0:
        raise ValueError("need tau >= 0 and mu >= 0")
    st = sigma * tau
    return LinearCombination([(1.0, B), (st * mu, C), (st, A)])
