import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memsys.errors import NegativeQuadraticForm, NoConvergence
from memsys.linop import (
    DiagonalOperator,
    GridLaplacian,
    LinearCombination,
    MatrixOperator,
    ScaledIdentity,
    cg,
    composite,
    inner,
    norm,
    norm_D,
    solve_spd,
)
from memsys.problems import random_spd


def test_single_node_laplacian():
    L = GridLaplacian(2, 2)
    assert L.dim == 1
    assert L.apply(np.array([1.0])) == pytest.approx([16.0])


def test_scaled_identity_apply():
    v = np.array([1.0, -2.0, 3.0])
    assert ScaledIdentity(3, 2.5).apply(v) == pytest.approx(2.5 * v)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        GridLaplacian(4).apply(np.ones(3))
    with pytest.raises(ValueError):
        LinearCombination([(1.0, ScaledIdentity(3)), (1.0, ScaledIdentity(4))])


def _eigvec(L, k, l):
    x1, x2 = L.nodes()
    return np.sin(k * np.pi * x1) * np.sin(l * np.pi * x2)


@pytest.mark.parametrize("N1,N2", [(4, 4), (8, 5), (16, 16), (3, 16)])
def test_laplacian_eigen_identity(N1, N2):
    L = GridLaplacian(N1, N2)
    for k in range(1, N1):
        for l in range(1, N2):
            v = _eigvec(L, k, l)
            lam = 4 / L.h1**2 * math.sin(k * math.pi * L.h1 / 2) ** 2 + 4 / L.h2**2 * math.sin(l * math.pi * L.h2 / 2) ** 2
            assert np.max(np.abs(L.apply(v) - lam * v)) <= 1e-10 * lam


def test_laplacian_smallest_eigenvalue():
    L = GridLaplacian(8, 6)
    eig = np.linalg.eigvalsh(L.to_dense())
    assert eig[0] == pytest.approx(L.nu, rel=1e-12)
    assert eig[-1] == pytest.approx(L.nu_max, rel=1e-12)


def test_laplacian_sparse_matches_matrix_free():
    L = GridLaplacian(7, 5)
    v = np.random.default_rng(3).standard_normal(L.dim)
    assert L.to_sparse() @ v == pytest.approx(L.apply(v), rel=1e-13)


def _shipped_operators(rng):
    L = GridLaplacian(6, 7)
    return [
        L,
        ScaledIdentity(L.dim, 3.0, L.weight),
        DiagonalOperator(rng.uniform(1, 2, 10)),
        random_spd(rng, 10),
        composite(ScaledIdentity(L.dim, 1.0, L.weight), ScaledIdentity(L.dim, 2.0, L.weight), L, 0.7, 0.5, 0.1),
    ]


def test_self_adjointness():
    rng = np.random.default_rng(0)
    for D in _shipped_operators(rng):
        for _ in range(100):
            v, w = rng.standard_normal((2, D.dim))
            lhs, rhs = inner(D.apply(v), w), inner(v, D.apply(w))
            assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(v) * np.linalg.norm(w) * max(1.0, np.abs(D.to_dense()).max())


def test_rayleigh_quotient_above_nu():
    rng = np.random.default_rng(1)
    for D in _shipped_operators(rng):
        for _ in range(50):
            v = rng.standard_normal(D.dim)
            assert inner(D.apply(v), v) >= (D.nu - 1e-10) * inner(v, v)


def test_norms():
    v = np.array([3.0, 4.0])
    assert norm_D(ScaledIdentity(2), v) == pytest.approx(5.0)
    assert norm_D(ScaledIdentity(2, 4.0), v) == pytest.approx(2 * 5.0)
    L = GridLaplacian(2, 2)
    assert norm(np.array([1.0]), L.weight) ** 2 == pytest.approx(0.25)
    assert norm_D(ScaledIdentity(1, 1.0, L.weight), np.array([1.0])) ** 2 == pytest.approx(0.25)


def test_negative_quadratic_form():
    D = MatrixOperator(np.array([[-1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(NegativeQuadraticForm):
        norm_D(D, np.array([1.0, 0.0]))


def test_cg_identity_one_iteration():
    rhs = np.array([1.0, 2.0, 3.0])
    res = cg(ScaledIdentity(3), rhs)
    assert res.iterations == 1
    assert res.x == pytest.approx(rhs)
    assert solve_spd(ScaledIdentity(2, 4.0), np.array([8.0, 8.0])) == pytest.approx([2.0, 2.0])


@pytest.mark.parametrize("N", [4, 6, 8])
def test_cg_matches_dense_solve(N):
    L = GridLaplacian(N)
    rhs = np.random.default_rng(N).standard_normal(L.dim)
    tol = 1e-10
    x = solve_spd(L, rhs, tol=tol)
    assert np.linalg.norm(L.apply(x) - rhs) <= tol * np.linalg.norm(rhs)
    direct = np.linalg.solve(L.to_dense(), rhs)
    assert np.linalg.norm(x - direct) <= tol * np.linalg.norm(direct) * np.linalg.cond(L.to_dense())


def test_cg_no_convergence():
    L = GridLaplacian(16)
    with pytest.raises(NoConvergence) as info:
        cg(L, np.ones(L.dim), tol=1e-14, max_iter=3)
    assert info.value.residual > 0


def test_cg_zero_rhs():
    assert solve_spd(GridLaplacian(4), np.zeros(9)) == pytest.approx(np.zeros(9))


def test_composite_examples():
    n = 4
    I = ScaledIdentity(n)
    v = np.arange(1.0, n + 1)
    B = DiagonalOperator([1.0, 2.0, 3.0, 4.0])
    assert composite(B, I, I, 5.0, 1.0, 0.0).apply(v) == pytest.approx(B.apply(v))
    assert composite(I, I, I, 1.0, 0.5, 2.0).apply(v) == pytest.approx(3.0 * v)
    assert composite(I, I, I, 1.0, 0.5, 2.0).to_dense() == pytest.approx(3.0 * np.eye(n))


def test_composite_positivity_with_laplacian():
    L = GridLaplacian(8)
    I = ScaledIdentity(L.dim, 1.0, L.weight)
    D = composite(I, ScaledIdentity(L.dim, 2.0, L.weight), L, 0.3, 0.5, 0.01)
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.standard_normal(L.dim)
        assert inner(D.apply(v), v) / inner(v, v) >= 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 10.0), st.floats(0.01, 1.0), st.floats(0.0, 5.0), st.integers(0, 1000))
def test_composite_linearity(mu, sigma, tau, seed):
    rng = np.random.default_rng(seed)
    B, C, A = (random_spd(rng, 6) for _ in range(3))
    v = rng.standard_normal(6)
    expected = B.apply(v) + sigma * tau * mu * C.apply(v) + sigma * tau * A.apply(v)
    assert composite(B, C, A, mu, sigma, tau).apply(v) == pytest.approx(expected, rel=1e-13, abs=1e-13)
