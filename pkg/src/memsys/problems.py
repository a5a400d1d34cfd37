"""Random SPD test problems."""

import numpy as np

from .kernel import ExpSumKernel
from .linop import MatrixOperator
from .solver import ProblemSpec


def random_spd(rng: np.random.Generator, d: int, lo: float = 1.0, hi: float = 10.0) -> MatrixOperator:
    """Symmetric matrix with eigenvalues drawn uniformly from [lo, hi]."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(lo, hi, d)
    M = (Q * eig) @ Q.T
    return MatrixOperator(0.5 * (M + M.T), nu=float(eig.min()))


def random_kernel(rng: np.random.Generator, m: int, b_range=(0.1, 50.0)) -> ExpSumKernel:
    a = rng.uniform(0.1, 3.0, m)
    b = np.exp(rng.uniform(np.log(b_range[0]), np.log(b_range[1]), m))
    return ExpSumKernel.from_arrays(a, b)


class TrigSource:
    """f(t) = sum_k c_k sin(w_k t + p_k), vector valued."""

    def __init__(self, rng, d, n_modes=3):
        self.c = rng.standard_normal((n_modes, d))
        self.w = rng.uniform(0.5, 10.0, n_modes)
        self.p = rng.uniform(0, 2 * np.pi, n_modes)

    def __call__(self, t):
        return np.sin(self.w * t + self.p) @ self.c


def random_problem(rng, d=5, m=3, forced=True, a_range=(1.0, 10.0), b_range=(0.1, 50.0)) -> ProblemSpec:
    B = random_spd(rng, d, 0.5, 2.0)
    C = random_spd(rng, d, 0.5, 2.0)
    A = random_spd(rng, d, *a_range)
    f = TrigSource(rng, d) if forced else None
    return ProblemSpec(B, C, A, random_kernel(rng, m, b_range), rng.standard_normal(d), f)
