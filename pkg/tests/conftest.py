import numpy as np
import pytest

from clusterkit import make_explicit_weights, make_power_weights


@pytest.fixture(scope="session")
def partition_weights():
    return make_power_weights(1.0, 1.0)


@pytest.fixture(scope="session")
def linear_weights():
    # c_k = k
    return make_power_weights(2.0, 1.0)


@pytest.fixture(scope="session")
def geometric_weights():
    # c_k = 2^k, rho = 1/2
    return make_power_weights(1.0, 0.5)


@pytest.fixture(scope="session")
def single_atom():
    # c_1 = 1 only: exp(x) in the set model, 1/(1-x) in the multiset model
    return make_explicit_weights([1.0])


def weight_matrix():
    """The four weight models exercised across the oracle tests."""
    return [
        ("ones", make_power_weights(1.0, 1.0)),
        ("linear", make_power_weights(2.0, 1.0)),
        ("geometric", make_power_weights(1.0, 0.5)),
        ("single", make_explicit_weights([1.0])),
    ]


def assert_close(a, b, rel=1e-10, abs_=0.0):
    assert np.isclose(a, b, rtol=rel, atol=abs_), f"{a} vs {b}"
