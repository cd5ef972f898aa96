import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

import oracles
from clusterkit import (
    ClusterStructure,
    ContractViolationError,
    LogSeries,
    OutOfRangeError,
    SizeLimitError,
    bivariate_multiset_coeffs,
    bivariate_set_coeffs,
    brute_force_structure_sum,
    cluster_series,
    coeff,
    euler_transform,
    exact_distribution,
    exact_structure_law,
    full_series,
    largest_cdf,
    make_explicit_weights,
    make_power_weights,
    restricted_series,
    series_exp,
    series_product,
)
from clusterkit.series import bivariate_multiset_coeffs_yrec, iter_partitions
from conftest import weight_matrix


def logs_to_values(s: LogSeries):
    return np.exp(s.logcoeffs)


# -- cluster series ----------------------------------------------------------


def test_cluster_series_examples(partition_weights, linear_weights, geometric_weights):
    assert logs_to_values(cluster_series(partition_weights, 3)) == pytest.approx([0, 1, 1, 1])
    assert logs_to_values(cluster_series(linear_weights, 4)) == pytest.approx([0, 1, 2, 3, 4])
    assert logs_to_values(cluster_series(geometric_weights, 3)) == pytest.approx([0, 2, 4, 8])


# -- series_exp --------------------------------------------------------------


def test_exp_of_x_is_exponential(single_atom):
    b = series_exp(cluster_series(single_atom, 8))
    for n in range(9):
        assert b.logcoeffs[n] == pytest.approx(-math.lgamma(n + 1), abs=1e-12)


def test_exp_zero_series():
    z = LogSeries(5, np.full(6, -np.inf))
    b = series_exp(z)
    assert b.logcoeffs[0] == 0.0
    assert np.all(np.isneginf(b.logcoeffs[1:]))


def test_exp_requires_zero_constant_term():
    bad = LogSeries(3, np.array([0.0, -np.inf, -np.inf, -np.inf]))
    with pytest.raises(ContractViolationError):
        series_exp(bad)


def test_sets_of_lists_against_structure_oracle(partition_weights):
    # n! [x^n] exp(x/(1-x)) = 1, 1, 3, 13, 73 ...
    s = series_exp(cluster_series(partition_weights, 6))
    for n in range(7):
        got = math.exp(s.logcoeffs[n] + math.lgamma(n + 1))
        assert got == pytest.approx(oracles.sets_of_lists(6)[n], rel=1e-12)
        direct = brute_force_structure_sum(partition_weights, n, "set")
        assert math.exp(s.logcoeffs[n]) == pytest.approx(direct, rel=1e-10)


# -- euler transform ---------------------------------------------------------


def test_partition_numbers_small(partition_weights):
    g = euler_transform(partition_weights, 10)
    expect = oracles.partition_numbers(10)
    for n in range(11):
        assert math.exp(g.logcoeffs[n]) == pytest.approx(expect[n], rel=1e-12)


def test_single_atom_multiset_is_geometric(single_atom):
    g = euler_transform(single_atom, 5)
    assert logs_to_values(g) == pytest.approx([1, 1, 1, 1, 1, 1])


def test_size_two_atom_multiset():
    w = make_explicit_weights([0.0, 1.0])
    g = euler_transform(w, 7)
    vals = logs_to_values(g)
    assert vals[[0, 2, 4, 6]] == pytest.approx([1, 1, 1, 1])
    assert np.all(vals[[1, 3, 5, 7]] == 0)


def test_coeff_p100(partition_weights):
    g = euler_transform(partition_weights, 100)
    lv, sign = coeff(g, 100)
    assert sign == 1
    assert math.exp(lv) == pytest.approx(190569292, rel=1e-11)


def test_coeff_out_of_range(partition_weights):
    g = euler_transform(partition_weights, 5)
    with pytest.raises(OutOfRangeError):
        coeff(g, 6)
    assert coeff(g, 0) == (0.0, 1)


# -- restricted series -------------------------------------------------------


def test_restricted_max_size_one(partition_weights):
    r = restricted_series(partition_weights, 5, "multiset", "max_size", 1)
    assert logs_to_values(r) == pytest.approx([1] * 6)


def test_restricted_parts_at_most_two(partition_weights):
    r = restricted_series(partition_weights, 4, "multiset", "max_size", 2)
    assert logs_to_values(r) == pytest.approx([1, 1, 2, 2, 3])


def test_restricted_set_no_singletons(partition_weights):
    r = restricted_series(partition_weights, 3, "set", "min_size", 1)
    got = [math.exp(r.logcoeffs[n] + math.lgamma(n + 1)) if r.logcoeffs[n] > -np.inf else 0 for n in range(4)]
    assert got == pytest.approx([1, 0, 2, 6])


# -- brute force -------------------------------------------------------------


def test_partition_count_by_enumeration(partition_weights):
    assert brute_force_structure_sum(partition_weights, 6, "multiset") == pytest.approx(11.0)


def test_set_omega_sum(partition_weights):
    assert brute_force_structure_sum(partition_weights, 3, "set") == pytest.approx(13.0 / 6.0)


def test_real_weight_binomial():
    w = make_explicit_weights([2.5])
    assert brute_force_structure_sum(w, 2, "multiset") == pytest.approx(4.375)


def test_brute_force_cap(partition_weights):
    with pytest.raises(SizeLimitError):
        brute_force_structure_sum(partition_weights, 31, "multiset")


def test_partition_generator_counts():
    assert sum(1 for _ in iter_partitions(10)) == oracles.partition_numbers(10)[10]


@pytest.mark.parametrize("name,w", weight_matrix())
@pytest.mark.parametrize("model", ["set", "multiset"])
def test_oracle_equivalence_small(name, w, model):
    K = 12
    s = full_series(w, K, model)
    for n in range(K + 1):
        direct = brute_force_structure_sum(w, n, model)
        lv, sign = coeff(s, n)
        if direct == 0.0:
            assert sign == 0
        else:
            assert math.exp(lv) == pytest.approx(direct, rel=1e-10)


# -- formal log round trip ---------------------------------------------------


@given(
    coeffs=st.lists(st.floats(0.0, 3.0), min_size=1, max_size=12),
)
@settings(max_examples=40, deadline=None)
def test_exp_log_round_trip(coeffs):
    K = len(coeffs)
    la = np.full(K + 1, -np.inf)
    for i, c in enumerate(coeffs, start=1):
        la[i] = math.log(c) if c > 0 else -np.inf
    b = series_exp(LogSeries(K, la))
    back = oracles.series_log_floats(np.exp(b.logcoeffs))
    expect = np.exp(la)
    expect[0] = 0.0
    assert np.allclose(back, expect, rtol=1e-10, atol=1e-10)


# -- bivariate tables --------------------------------------------------------


def test_bivariate_set_small(partition_weights):
    row = bivariate_set_coeffs(partition_weights, 4)
    vals = np.exp(row + math.lgamma(5))
    # n=4: [24, 36, 12, 1] for N=1..4 (sequences split into N blocks)
    assert vals[1:] == pytest.approx([24, 36, 12, 1], rel=1e-10)
    assert row[0] == -np.inf
    assert vals[1:].sum() == pytest.approx(73.0, rel=1e-10)


def test_bivariate_set_matches_binomial(partition_weights):
    n = 17
    row = bivariate_set_coeffs(partition_weights, n)
    for N in range(1, n + 1):
        expect = math.lgamma(n) - math.lgamma(N) - math.lgamma(n - N + 1) - math.lgamma(N + 1)
        assert row[N] == pytest.approx(expect, abs=1e-9)


def test_bivariate_multiset_partitions_of_five(partition_weights):
    row = bivariate_multiset_coeffs(partition_weights, 5)
    vals = [round(math.exp(v)) if v > -np.inf else 0 for v in row]
    assert vals == [0, 1, 2, 2, 1, 1]


def test_bivariate_multiset_row_sum_is_partition_number(partition_weights):
    for n in (6, 9, 12):
        row = bivariate_multiset_coeffs(partition_weights, n)
        assert math.exp(logsumexp(row)) == pytest.approx(
            oracles.partition_numbers(12)[n], rel=1e-10
        )


def test_bivariate_multiset_size_two_atom():
    w = make_explicit_weights([0.0, 1.0])
    row = bivariate_multiset_coeffs(w, 6)
    assert math.exp(row[3]) == pytest.approx(1.0)
    assert np.all(np.isneginf(np.delete(row, 3)))


@pytest.mark.parametrize("name,w", weight_matrix())
def test_bivariate_consistency_with_univariate(name, w):
    n = 14
    set_row = bivariate_set_coeffs(w, n)
    multi_row = bivariate_multiset_coeffs(w, n)
    se, _ = coeff(full_series(w, n, "set"), n)
    ge, _ = coeff(full_series(w, n, "multiset"), n)
    assert logsumexp(set_row) == pytest.approx(se, abs=1e-10 * max(1, abs(se)))
    assert logsumexp(multi_row) == pytest.approx(ge, abs=1e-10 * max(1, abs(ge)))


def test_bivariate_multiset_against_y_recurrence(geometric_weights, partition_weights):
    for w in (geometric_weights, partition_weights):
        a = bivariate_multiset_coeffs(w, 24)
        b = bivariate_multiset_coeffs_yrec(w, 24)
        mask = ~np.isneginf(a)
        assert np.array_equal(mask, ~np.isneginf(b))
        assert np.allclose(a[mask], b[mask], atol=1e-9)


# -- exact distributions -----------------------------------------------------


def test_largest_cdf_partitions_of_three(partition_weights):
    t = exact_distribution(partition_weights, 3, "largest", "multiset")
    assert t.values == pytest.approx([0, 1 / 3, 2 / 3, 1.0])


def test_kappa_table_set_model(partition_weights):
    t = exact_distribution(partition_weights, 3, "kappa", "set")
    assert t.values == pytest.approx([0, 6 / 13, 6 / 13, 1 / 13])
    assert t.values.sum() == pytest.approx(1.0)


def test_smallest_survival_starts_at_one(partition_weights):
    t = exact_distribution(partition_weights, 6, "smallest", "multiset", s_max=6)
    assert t.values[0] == 1.0
    assert np.all(np.diff(t.values) <= 1e-15)
    # P(M > s) for partitions of 6: count partitions with all parts > s
    # parts > 1: 4 of 11; parts > 2: 2 of 11 (3+3, 6); parts > 5: 1 (6)
    assert t.values[1] == pytest.approx(4 / 11)
    assert t.values[2] == pytest.approx(2 / 11)
    assert t.values[5] == pytest.approx(1 / 11)


def test_largest_cdf_monotone(geometric_weights):
    for model in ("set", "multiset"):
        cdf = largest_cdf(geometric_weights, [20], model)[20]
        assert np.all(np.diff(cdf) >= -1e-14)
        assert cdf[-1] == pytest.approx(1.0, rel=1e-12)


def test_structure_law_sums_to_one(partition_weights):
    law = exact_structure_law(partition_weights, 8, "multiset")
    assert len(law) == oracles.partition_numbers(8)[8]
    assert sum(law.values()) == pytest.approx(1.0)
    v = np.zeros(9, dtype=np.int64)
    v[8] = 1
    assert ClusterStructure(8, v).key() in law


# -- products ----------------------------------------------------------------


def test_series_product_matches_known_convolution(partition_weights):
    s = full_series(partition_weights, 10, "set")
    c = cluster_series(partition_weights, 10)
    prod = series_product(s, c)
    # [x^n] e^C * C = sum_k c_k [x^{n-k}] e^C
    for n in range(1, 11):
        expect = logsumexp([s.logcoeffs[n - k] for k in range(1, n + 1)])
        assert prod.logcoeffs[n] == pytest.approx(expect, abs=1e-10)


def test_csv_export_schema(tmp_path, partition_weights):
    g = euler_transform(partition_weights, 10)
    path = tmp_path / "series.csv"
    g.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,value_log,value"
    assert len(lines) == 12
    t = exact_distribution(partition_weights, 5, "kappa", "multiset")
    tpath = tmp_path / "table.csv"
    t.to_csv(tpath)
    assert tpath.read_text().splitlines()[0] == "index,value_log,value"
    import json

    parsed = json.loads(t.to_json())
    assert parsed["n"] == 5 and parsed["table_kind"] == "pmf"
