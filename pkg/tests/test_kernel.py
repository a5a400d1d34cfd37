import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from memsys.errors import DomainError, InvariantError
from memsys.kernel import (
    AnalyticKernel,
    ExpSumKernel,
    check_positive_type,
    eval_expsum,
    eval_expsum_laplace,
    eval_kernel,
    eval_laplace,
)
from memsys.ratapprox import table1_kernel

alphas = st.floats(0.01, 0.99)
deltas = st.floats(0.0, 10.0)


def exp_sum_kernels(max_terms=6):
    term = st.tuples(st.floats(1e-3, 1e2), st.floats(1e-3, 1e3))
    return st.builds(
        lambda g1, terms: ExpSumKernel(g1, 0.0, tuple(terms)),
        st.floats(0.0, 2.0),
        st.lists(term, min_size=0, max_size=max_terms),
    )


def test_gamma_factor_accuracy():
    # math.gamma stands in for a hand-rolled Lanczos series; check it on (0, 1)
    for x in np.linspace(0.01, 0.99, 50):
        ref = mpmath.gamma(mpmath.mpf(float(x)))
        assert abs(math.gamma(x) / float(ref) - 1) < 1e-12


def test_eval_kernel_examples():
    assert eval_kernel(AnalyticKernel(0.5, 0.0), 1.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    # e^-1 / sqrt(pi), 30-digit mpmath value
    assert eval_kernel(AnalyticKernel(0.5, 1.0), 1.0) == pytest.approx(0.207553748710297351670134124721, rel=1e-14)
    assert eval_kernel(AnalyticKernel(0.25, 1.0), 4.0) > eval_kernel(AnalyticKernel(0.25, 4.0), 4.0)


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_eval_kernel_domain(t):
    with pytest.raises(DomainError):
        eval_kernel(AnalyticKernel(0.5, 1.0), t)


@pytest.mark.parametrize("alpha,delta", [(0.0, 1.0), (1.0, 1.0), (0.5, -0.1)])
def test_analytic_kernel_invariants(alpha, delta):
    with pytest.raises(DomainError):
        AnalyticKernel(alpha, delta)


def test_eval_laplace_examples():
    assert eval_laplace(AnalyticKernel(0.5, 1.0), 0.0) == 1.0
    assert eval_laplace(AnalyticKernel(0.5, 1.0), 3.0) == pytest.approx(0.5, rel=1e-15)
    assert eval_laplace(AnalyticKernel(0.75, 1.0), 15.0) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(DomainError):
        eval_laplace(AnalyticKernel(0.5, 0.0), 0.0)


def test_analytic_laplace_matches_quadrature():
    k = AnalyticKernel(0.5, 1.0)
    for s in [0.0, 0.7, 5.0]:
        # algebraic weight handles t^(-1/2) on [0, 1]; the tail is smooth
        head, _ = integrate.quad(
            lambda t: math.exp(-(k.delta + s) * t) / math.gamma(0.5), 0, 1, weight="alg", wvar=(-0.5, 0)
        )
        tail, _ = integrate.quad(lambda t: eval_kernel(k, t) * math.exp(-s * t), 1, np.inf)
        assert head + tail == pytest.approx(eval_laplace(k, s), rel=1e-9)


def test_interval_integral_matches_quad():
    k = AnalyticKernel(0.3, 2.0)
    ref, _ = integrate.quad(lambda t: eval_kernel(k, t), 0.5, 1.5)
    assert k.interval_integral(0.5, 1.5) == pytest.approx(ref, rel=1e-12)
    k0 = AnalyticKernel(0.3, 0.0)
    ref, _ = integrate.quad(lambda t: eval_kernel(k0, t), 0.5, 1.5)
    assert k0.interval_integral(0.5, 1.5) == pytest.approx(ref, rel=1e-12)


def test_eval_expsum_examples():
    k = ExpSumKernel(terms=[(2.0, 1.0)])
    assert eval_expsum(k, 0.0) == 2.0
    assert eval_expsum(k, math.log(2)) == pytest.approx(1.0, rel=1e-15)
    assert eval_expsum(ExpSumKernel(gamma1=0.5), 7.0) == 0.5


def test_eval_expsum_laplace_examples():
    assert eval_expsum_laplace(ExpSumKernel(terms=[(1.0, 1.0)]), 1.0) == 0.5
    for s in [0.0, 1.0, 1e3]:
        assert eval_expsum_laplace(ExpSumKernel(gamma2=0.3), s) == 0.3
    with pytest.raises(DomainError):
        eval_expsum_laplace(ExpSumKernel(gamma1=1.0), 0.0)
    assert eval_expsum_laplace(ExpSumKernel(gamma1=2.0), 4.0) == 0.5


def test_table1_laplace_at_zero():
    # 30-digit sum of the tabulated partial fractions
    k = table1_kernel(0.5)
    assert eval_expsum_laplace(k, 0.0) == pytest.approx(0.999999976339333862816278853236, rel=1e-14)
    assert abs(eval_expsum_laplace(k, 0.0) - 1.0) < 1e-7


def test_expsum_invariants():
    with pytest.raises(InvariantError):
        ExpSumKernel(terms=[(-1.0, 1.0)])
    with pytest.raises(InvariantError):
        ExpSumKernel(terms=[(1.0, 0.0)])
    with pytest.raises(InvariantError):
        ExpSumKernel(gamma1=-0.1)
    k = ExpSumKernel(terms=[(-1.0, 1.0)], check=False)
    assert k.m == 1


def test_positivity_diagnostics():
    good = ExpSumKernel(terms=[(1.0, 2.0), (0.5, 30.0)])
    assert check_positive_type(good).ok
    bad = ExpSumKernel(terms=[(-1.0, 1.0)], check=False)
    rep = check_positive_type(bad)
    assert not rep.nonnegative
    assert not rep.ok
    for alpha in (0.25, 0.5, 0.75):
        assert check_positive_type(table1_kernel(alpha)).ok
    with pytest.raises(DomainError):
        check_positive_type(good, [1.0, 0.5])


@given(exp_sum_kernels(), st.lists(st.floats(0.0, 50.0), min_size=3, max_size=30))
def test_expsum_monotone_and_convex(kern, ts):
    t = np.unique(np.asarray(ts))
    k = eval_expsum(kern, t)
    assert np.all(np.diff(k) <= 1e-12 * (1 + np.abs(k[:-1])))
    rep = check_positive_type(kern, t[t > 0]) if np.any(t > 0) else None
    if rep is not None:
        assert rep.ok


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(0.5, 20.0)), min_size=1, max_size=4), st.floats(0.5, 5.0))
def test_expsum_laplace_consistency(terms, s):
    kern = ExpSumKernel(gamma2=0.25, terms=tuple(terms))
    val, _ = integrate.quad(lambda t: eval_expsum(kern, t) * math.exp(-s * t), 0, 200, limit=200)
    assert val == pytest.approx(eval_expsum_laplace(kern, s) - kern.gamma2, abs=1e-6)


@given(alphas, deltas, st.floats(0.0, 1e3))
def test_laplace_shift_identity(alpha, delta, s):
    if s + delta == 0:
        return
    lhs = eval_laplace(AnalyticKernel(alpha, delta), s)
    rhs = eval_laplace(AnalyticKernel(alpha, 0.0), s + delta)
    assert lhs == pytest.approx(rhs, rel=1e-14)


@given(alphas, deltas, st.floats(1e-6, 1e2))
def test_kernel_tempering_identity(alpha, delta, t):
    lhs = eval_kernel(AnalyticKernel(alpha, delta), t)
    rhs = eval_kernel(AnalyticKernel(alpha, 0.0), t) * math.exp(-delta * t)
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-300)
