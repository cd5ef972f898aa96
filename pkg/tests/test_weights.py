import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterkit import (
    HSpec,
    InvalidParameterError,
    WeightSequence,
    make_explicit_weights,
    make_power_weights,
    verify_oscillating_bounds,
    weight_at,
)


def test_partition_weights_are_all_one():
    w = make_power_weights(1.0, 1.0)
    for k in (1, 2, 7, 100):
        assert weight_at(w, k) == pytest.approx(1.0)


def test_linear_weights():
    assert weight_at(make_power_weights(2.0, 1.0), 3) == pytest.approx(3.0)


def test_geometric_weights():
    assert weight_at(make_power_weights(1.0, 0.5), 4) == pytest.approx(16.0)


def test_inverse_sqrt_weights():
    assert weight_at(make_power_weights(0.5, 1.0), 4) == pytest.approx(0.5)


def test_explicit_leading_zeros():
    w = make_explicit_weights([0.0, 0.0, 5.0])
    assert weight_at(w, 2) == 0.0
    assert weight_at(w, 3) == 5.0
    assert weight_at(w, 9) == 0.0
    assert w.m == 3


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        make_power_weights(0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        make_power_weights(1.0, 1.5)
    with pytest.raises(InvalidParameterError):
        make_power_weights(1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        make_explicit_weights([])
    with pytest.raises(InvalidParameterError):
        make_explicit_weights([0.0, 0.0])
    with pytest.raises(InvalidParameterError):
        make_explicit_weights([1.0, -2.0])


def test_log_h_weights_positive_at_one():
    w = make_power_weights(1.0, 1.0, HSpec("logpow", 2.0))
    assert weight_at(w, 1) == pytest.approx(weight_at(w, 2))
    assert weight_at(w, 10) == pytest.approx(math.log(10.0) ** 2)


@given(
    alpha=st.floats(0.2, 4.0),
    rho=st.floats(0.05, 1.0),
    p=st.floats(-2.0, 2.0),
)
@settings(max_examples=40, deadline=None)
def test_power_law_identity(alpha, rho, p):
    # c_k * rho^k * k^(1-alpha) recovers h(k) across the whole range
    w = make_power_weights(alpha, rho, HSpec("logpow", p))
    ks = np.unique(np.geomspace(1, 1e6, 40).astype(int))
    logs = w.log_weight(ks) + ks * math.log(rho) + (1.0 - alpha) * np.log(ks)
    expect = w.h.log_at(ks)
    assert np.allclose(logs, expect, rtol=0, atol=1e-9 * np.maximum(1, np.abs(expect)))


def test_oscillating_bounds_partition_weights():
    w = make_power_weights(1.0, 1.0)
    rep = verify_oscillating_bounds(w, 0.9, 1.1, 0.5, 2.0, 1, 100)
    assert rep.all_ok


def test_oscillating_bounds_linear_weights():
    w = make_power_weights(2.0, 1.0)
    rep = verify_oscillating_bounds(w, 1.5, 2.5, 0.5, 2.0, 2, 100)
    assert rep.all_ok


def test_oscillating_bounds_failure_case():
    w = make_power_weights(1.0, 1.0)
    rep = verify_oscillating_bounds(w, 2.0, 3.0, 1.0, 1.0, 2, 10)
    assert not rep.all_ok
    assert not rep.lower_ok[0]  # k = 2: lower envelope 2 > c_2 = 1


@given(alpha=st.floats(0.3, 3.0), rho=st.floats(0.1, 1.0))
@settings(max_examples=30, deadline=None)
def test_oscillating_tight_envelope_is_exact(alpha, rho):
    w = make_power_weights(alpha, rho)
    rep = verify_oscillating_bounds(w, alpha, alpha, 1.0, 1.0, 1, 200)
    assert rep.all_ok


def test_config_round_trip():
    cfg = {"kind": "power", "alpha": 1.0, "rho": 1.0, "h": {"type": "const", "c": 1.0}}
    w = WeightSequence.from_config(cfg)
    assert w.to_config() == cfg
    cfg2 = {"kind": "explicit", "values": [0.0, 1.0, 2.5], "rho": 0.5}
    w2 = WeightSequence.from_config(cfg2)
    assert w2.to_config() == cfg2
    assert w2.radius == math.inf
    assert w2.multiset_radius == 1.0


def test_immutability():
    w = make_power_weights(1.0, 1.0)
    with pytest.raises(Exception):
        w.alpha = 2.0
