import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterkit import (
    DivergenceError,
    UnreachableTargetError,
    cluster_series,
    hayman_functionals,
    make_explicit_weights,
    make_power_weights,
    size_power_sum,
    size_power_sum_multi,
    solve_multiset_saddle,
    solve_ratio_saddle,
    solve_set_saddle,
)


# -- size power sums ---------------------------------------------------------


def test_geometric_sum_values(partition_weights):
    assert size_power_sum(partition_weights, 0.5, 0) == pytest.approx(1.0, rel=1e-12)
    assert size_power_sum(partition_weights, 0.5, 1) == pytest.approx(2.0, rel=1e-12)


def test_single_term_sum(single_atom):
    assert size_power_sum(single_atom, 0.3, 3) == pytest.approx(0.3, rel=1e-15)


def test_divergence_at_radius(partition_weights, geometric_weights):
    with pytest.raises(DivergenceError):
        size_power_sum(partition_weights, 1.0, 0)
    with pytest.raises(DivergenceError):
        size_power_sum(geometric_weights, 0.6, 0)
    with pytest.raises(DivergenceError):
        size_power_sum_multi(make_explicit_weights([1.0]), 1.0, 0, 1)


def test_repetition_sum_log2(single_atom):
    # sum_j j^{-1} r^j at r = 1/2 (the j-weight is j^(t-1))
    got = size_power_sum_multi(single_atom, 0.5, 0, 0)
    assert got == pytest.approx(math.log(2.0), rel=1e-12)


def test_repetition_sum_matches_euler_exponent(partition_weights):
    # sum_j C(r^j)/j equals the multiset exponent series evaluated at r
    from clusterkit.series import _multiset_exponent

    r = 0.55
    expo = _multiset_exponent(partition_weights, 220)
    direct = float(np.exp(expo[1:] + np.arange(1, 221) * math.log(r)).sum())
    got = size_power_sum_multi(partition_weights, r, 0, 0)
    assert got == pytest.approx(direct, rel=1e-10)


def test_repetition_sum_close_to_plain_sum_when_rho_small():
    # for rho << 1 the j >= 2 terms are a bounded remainder
    w = make_power_weights(1.0, 0.15)
    r = 0.14
    plain = size_power_sum(w, r, 0)
    rep = size_power_sum_multi(w, r, 0, 1)
    # remainder bound: sum_{j>=2} A_0(r^j) <= A_0(r^2)/(1 - r)
    assert rep >= plain
    assert rep - plain <= size_power_sum(w, r * r, 0) / (1 - r) + 1e-12


def test_sum_consistency_with_series(geometric_weights):
    r = 0.31
    c = cluster_series(geometric_weights, 400)
    direct = float(np.exp(c.logcoeffs[1:] + np.arange(1, 401) * math.log(r)).sum())
    assert size_power_sum(geometric_weights, r, 0) == pytest.approx(direct, rel=1e-12)


@given(chi=st.floats(0.02, 2.0), alpha=st.floats(0.3, 3.0))
@settings(max_examples=25, deadline=None)
def test_hoelder_chain(chi, alpha):
    w = make_power_weights(alpha, 1.0)
    r = math.exp(-chi)
    A0 = size_power_sum(w, r, 0)
    A1 = size_power_sum(w, r, 1)
    A2 = size_power_sum(w, r, 2)
    assert A1 * A1 <= A2 * A0 * (1 + 1e-12)


@pytest.mark.parametrize("alpha,rho", [(1.0, 1.0), (2.0, 1.0), (1.0, 0.5), (0.5, 0.8)])
def test_variance_is_radial_derivative_of_mean(alpha, rho):
    # b(r) = r a'(r) via central differences at a few radii
    w = make_power_weights(alpha, rho)
    rng = np.random.default_rng(7)
    for _ in range(5):
        r = rho * math.exp(-rng.uniform(0.05, 1.0))
        h = 1e-6 * r
        da = (size_power_sum(w, r + h, 1) - size_power_sum(w, r - h, 1)) / (2 * h)
        b = size_power_sum(w, r, 2)
        assert b == pytest.approx(r * da, rel=1e-5)


# -- Hayman functionals ------------------------------------------------------


def test_functionals_single_atom(single_atom):
    a, b, c = hayman_functionals(("set", 0), single_atom, 0.77)
    assert (a, b, c) == pytest.approx((0.77, 0.77, 0.77))


def test_functionals_set_ell_zero(partition_weights):
    a, _, _ = hayman_functionals(("set", 0), partition_weights, 0.5)
    assert a == pytest.approx(2.0, rel=1e-12)


def test_functionals_multiset_single_atom(single_atom):
    a, _, _ = hayman_functionals(("multiset", ()), single_atom, 0.5)
    assert a == pytest.approx(1.0, rel=1e-12)  # sum_j r^j at 1/2


def test_functionals_ell_shift(partition_weights):
    r = 0.6
    a0, b0, _ = hayman_functionals(("set", 0), partition_weights, r)
    a2, b2, _ = hayman_functionals(("set", 2), partition_weights, r)
    A0 = size_power_sum(partition_weights, r, 0)
    A1 = size_power_sum(partition_weights, r, 1)
    A2 = size_power_sum(partition_weights, r, 2)
    assert a2 - a0 == pytest.approx(2 * A1 / A0, rel=1e-12)
    assert b2 - b0 == pytest.approx(2 * (A2 / A0 - (A1 / A0) ** 2), rel=1e-10)


# -- solvers -----------------------------------------------------------------


def test_set_saddle_closed_form(partition_weights):
    sp = solve_set_saddle(partition_weights, 100)
    expect = (201 - math.sqrt(401)) / 200  # root of z/(1-z)^2 = 100
    assert sp.r == pytest.approx(expect, rel=1e-12)
    assert abs(sp.residual) <= 1e-9 * 100
    assert sp.b_val > 0


def test_set_saddle_polynomial(single_atom):
    sp = solve_set_saddle(single_atom, 5)
    assert sp.r == pytest.approx(5.0, rel=1e-14)
    assert sp.residual == pytest.approx(0.0, abs=1e-12)


def test_set_saddle_decay_scaling(partition_weights):
    # eta_n * sqrt(n) -> 1 for single-size-ish weights with alpha = 1
    for n in (10**4, 10**6):
        sp = solve_set_saddle(partition_weights, n)
        assert sp.chi * math.sqrt(n) == pytest.approx(1.0, rel=0.02)


def test_multiset_saddle_single_atom(single_atom):
    sp = solve_multiset_saddle(single_atom, 50)
    assert sp.r == pytest.approx(50 / 51, rel=1e-10)  # q/(1-q) = n


def test_multiset_saddle_partitions(partition_weights):
    sp = solve_multiset_saddle(partition_weights, 100)
    assert sp.chi == pytest.approx(math.sqrt(math.pi**2 / 600), rel=0.05)
    assert abs(sp.residual) <= 1e-9 * 100


def test_multiset_saddle_below_set_saddle(geometric_weights):
    n = 60
    q = solve_multiset_saddle(geometric_weights, n)
    z = solve_set_saddle(geometric_weights, n)
    assert q.r < z.r  # repetition sum exceeds the plain sum pointwise


def test_ratio_saddle_closed_form(partition_weights):
    sp = solve_ratio_saddle(partition_weights, 100, 10)
    assert sp.r == pytest.approx(0.9, rel=1e-12)
    assert sp.target == pytest.approx(10.0)


def test_ratio_saddle_degenerate_single_atom(single_atom):
    with pytest.raises(UnreachableTargetError):
        solve_ratio_saddle(single_atom, 7, 7)


def test_ratio_saddle_unreachable_above_max_size():
    w = make_explicit_weights([1.0, 1.0])
    with pytest.raises(UnreachableTargetError):
        solve_ratio_saddle(w, 30, 10)  # n/N = 3 > largest size 2


@pytest.mark.parametrize(
    "alpha,rho,n", [(1.0, 1.0, 37), (2.0, 1.0, 250), (1.0, 0.5, 80), (0.7, 0.9, 33)]
)
def test_solver_residual_invariant(alpha, rho, n):
    w = make_power_weights(alpha, rho)
    for solver in (solve_set_saddle, solve_multiset_saddle):
        sp = solver(w, n)
        assert abs(sp.residual) <= 1e-9 * max(1.0, n)
        assert 0 < sp.r < rho
        assert sp.b_val > 0
    sp = solve_ratio_saddle(w, n, max(2, n // 9))
    assert abs(sp.residual) <= 1e-9 * max(1.0, sp.target)
