"""Tests for the polynomial / linear algebra kernel."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polypol.algebra import (
    CLUSTER_TOL,
    LinearSolveReport,
    MultiPoly,
    UniPoly,
    grlex_monomials,
    jacobian2,
    monomials_up_to,
    normalize_phase,
    nullspace,
    resultant_wrt_last,
    uni_roots,
)
from polypol.errors import DegenerateInputError

RNG = np.random.default_rng(20260814)


def random_poly(nvars: int, degree: int, rng=RNG) -> MultiPoly:
    monos = monomials_up_to(nvars, degree)
    coeffs = rng.normal(size=len(monos)) + 1j * rng.normal(size=len(monos))
    return MultiPoly.from_coeff_vector(nvars, monos, coeffs)


# ----------------------------------------------------------------------
# monomial order


def test_grlex_quintic_count_and_head():
    monos = grlex_monomials(3, 5)
    assert len(monos) == 21
    assert monos[0] == (5, 0, 0)
    assert monos[-1] == (0, 0, 5)
    # strictly decreasing in the order key
    keys = [(sum(e), e) for e in monos]
    assert keys == sorted(keys, reverse=True)


def test_monomials_up_to_degree_order():
    monos = monomials_up_to(2, 3)
    assert len(monos) == 10
    assert monos[0] == (3, 0)
    assert monos[-1] == (0, 0)
    degs = [sum(e) for e in monos]
    assert degs == sorted(degs, reverse=True)


# ----------------------------------------------------------------------
# multivariate arithmetic


def test_square_of_binomial():
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    p = (x + y) ** 2
    assert p.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}


def test_add_mul_consistent_with_pointwise():
    p = random_poly(3, 3)
    q = random_poly(3, 2)
    for _ in range(10):
        pt = RNG.normal(size=3) + 1j * RNG.normal(size=3)
        assert (p + q)(pt) == pytest.approx(p(pt) + q(pt), rel=1e-11)
        assert (p * q)(pt) == pytest.approx(p(pt) * q(pt), rel=1e-10)


def test_diff_against_complex_step():
    # complex-step differentiation is exact to machine precision for the
    # real part, which pins the formal derivative without cancellation
    p = random_poly(2, 4).real_part()
    h = 1e-30
    for _ in range(5):
        x0, y0 = RNG.normal(size=2)
        dx = p([x0 + 1j * h, y0]).imag / h
        dy = p([x0, y0 + 1j * h]).imag / h
        assert p.diff(0)([x0, y0]).real == pytest.approx(dx, rel=1e-12, abs=1e-12)
        assert p.diff(1)([x0, y0]).real == pytest.approx(dy, rel=1e-12, abs=1e-12)


def test_jacobian2_on_known_pair():
    # f = x^2 + y^2, g = x y:  J = 2x*x - y*2y = 2x^2 - 2y^2
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    J = jacobian2(x * x + y * y, x * y)
    assert J.terms == {(2, 0): 2.0, (0, 2): -2.0}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 1000))
def test_homogeneous_scaling(degree, seed):
    rng = np.random.default_rng(seed)
    monos = grlex_monomials(3, degree)
    p = MultiPoly.from_coeff_vector(3, monos, rng.normal(size=len(monos)))
    assert p.is_homogeneous()
    pt = rng.normal(size=3) + 1j * rng.normal(size=3)
    lam = 0.5 + rng.random()
    assert p([lam * c for c in pt]) == pytest.approx(lam ** degree * p(pt), rel=1e-10)


def test_substitute_linear_matches_pointwise():
    p = random_poly(3, 3)
    M = RNG.normal(size=(3, 3))
    q = p.substitute_linear(M)
    for _ in range(6):
        pt = RNG.normal(size=3)
        assert q(pt) == pytest.approx(p(M @ pt), rel=1e-10)


def test_homogenize_dehomogenize_roundtrip():
    p = random_poly(2, 3)
    P = p.homogenize()
    assert P.nvars == 3
    assert P.is_homogeneous()
    back = P.dehomogenize()
    pt = RNG.normal(size=2)
    assert back(pt) == pytest.approx(p(pt), rel=1e-12)


def test_eval_grid_matches_scalar_eval():
    p = random_poly(2, 4).real_part()
    xs = np.linspace(-1.5, 1.5, 7)
    ys = np.linspace(-2.0, 2.0, 5)
    X, Y = np.meshgrid(xs, ys)
    G = p.eval_grid(X, Y)
    assert G[2, 3] == pytest.approx(p([X[2, 3], Y[2, 3]]).real, rel=1e-12)


# ----------------------------------------------------------------------
# univariate roots


def test_uni_roots_simple_cubic():
    p = UniPoly.from_roots([1.0, -2.0, 3.5], lead=2.0)
    roots = uni_roots(p)
    assert sorted(r.real for r, _ in roots) == pytest.approx([-2.0, 1.0, 3.5], abs=1e-10)
    assert all(m == 1 for _, m in roots)


def test_uni_roots_double_root_multiplicity():
    p = UniPoly.from_roots([0.5, 0.5, -1.0])
    roots = uni_roots(p)
    mult = {round(r.real, 6): m for r, m in roots}
    assert mult[0.5] == 2
    assert mult[-1.0] == 1


def test_uni_roots_rejects_zero():
    with pytest.raises(DegenerateInputError):
        uni_roots(UniPoly([0.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_uni_roots_multiplicities_sum_to_degree(seed, degree):
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    coeffs[-1] += 3.0  # keep the leading coefficient honest
    p = UniPoly(coeffs)
    roots = uni_roots(p)
    assert sum(m for _, m in roots) == p.degree
    for r, _ in roots:
        assert abs(p(r)) < 1e-6 * p.norm()


def test_uni_roots_no_spurious_merging():
    # well-separated roots stay separate at the default tolerance
    p = UniPoly.from_roots([1.0, 1.0 + 1e-3, -3.0])
    roots = uni_roots(p, cluster_tol=CLUSTER_TOL)
    assert sorted(m for _, m in roots) == [1, 1, 1]


def test_unipoly_trims_trailing_noise():
    p = UniPoly([1.0, 2.0, 1e-16])
    assert p.degree == 1


# ----------------------------------------------------------------------
# nullspace


def test_nullspace_of_constructed_rank():
    # 6x5 matrix of rank 3 by construction
    A = RNG.normal(size=(6, 3)) @ RNG.normal(size=(3, 5))
    rep = nullspace(A)
    assert isinstance(rep, LinearSolveReport)
    assert rep.rank == 3
    assert rep.nullity == 2
    assert np.linalg.norm(A @ rep.nullspace) < 1e-10 * rep.singular_values[0]


def test_nullspace_full_rank_square():
    A = RNG.normal(size=(4, 4)) + np.eye(4) * 5
    rep = nullspace(A)
    assert rep.rank == 4
    assert rep.nullity == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_nullspace_residual_property(seed, nullity):
    rng = np.random.default_rng(seed)
    n = 6
    r = n - nullity
    A = rng.normal(size=(n + 2, r)) @ rng.normal(size=(r, n))
    rep = nullspace(A)
    assert rep.rank == r
    resid = np.linalg.norm(A @ rep.nullspace)
    assert resid < 1e-9 * max(rep.singular_values[0], 1.0)


def test_normalize_phase_first_entry_real_positive():
    v = np.array([0.0, -2.0j, 1.0 + 1.0j])
    w = normalize_phase(v)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    assert abs(w[1].imag) < 1e-12
    assert w[1].real > 0


# ----------------------------------------------------------------------
# resultants


def test_resultant_circle_and_diagonal():
    # x^2 + y^2 - 1 = 0 and y = x meet where 2x^2 = 1
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    one = MultiPoly.constant(2, 1.0)
    res = resultant_wrt_last(x * x + y * y - one, x - y)
    roots = uni_roots(res)
    vals = sorted(r.real for r, _ in roots)
    assert vals == pytest.approx([-np.sqrt(0.5), np.sqrt(0.5)], abs=1e-9)


def test_resultant_two_circles_tangency_line():
    # unit circles centered at 0 and (1, 0) meet on the line x = 1/2
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    one = MultiPoly.constant(2, 1.0)
    f = x * x + y * y - one
    g = (x - one) * (x - one) + y * y - one
    res = resultant_wrt_last(f, g)
    roots = uni_roots(res)
    # x = 1/2 is a double root of the resultant, so its computed location
    # carries square-root conditioning; dedupe at a looser scale first
    reals = sorted({round(r.real, 6) for r, m in roots if abs(r.imag) < 1e-6})
    assert reals == pytest.approx([0.5], abs=1e-6)
