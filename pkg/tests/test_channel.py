import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bincs import channel, glauber, sensing
from bincs.errors import ParameterError


def test_bernoulli_rate():
    x = channel.sample_bernoulli_signal(200_000, 0.01, seed=1)
    assert x.dtype == np.int8
    assert set(np.unique(x)) <= {0, 1}
    # 4 standard errors
    assert abs(x.mean() - 0.01) < 4 * math.sqrt(0.01 * 0.99 / 200_000)


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.1])
def test_bernoulli_rejects_rho(rho):
    with pytest.raises(ParameterError):
        channel.sample_bernoulli_signal(10, rho)


def test_noise_variance():
    A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(2 ** 14, 2 ** 11, 16), seed=0)
    x = np.zeros(2 ** 14, dtype=np.int8)
    sig = 0.7
    z = np.concatenate([channel.measure(A, x, sig, seed=s).y for s in range(20)])
    assert z.var() == pytest.approx(sig ** 2, rel=0.02)


def test_noiseless_measure(small_matrix):
    x = channel.sample_bernoulli_signal(256, 0.05, seed=3)
    m = channel.measure(small_matrix, x, 0.0, alpha=2.0)
    np.testing.assert_array_equal(m.y, 2.0 * small_matrix.to_dense() @ x)
    m0 = channel.measure(small_matrix, np.zeros(256), 0.0)
    assert not m0.y.any()


def test_measure_rejects():
    A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(8, 4, 2), seed=0)
    with pytest.raises(ParameterError):
        channel.measure(A, np.zeros(8), -1.0)
    with pytest.raises(ParameterError):
        channel.measure(A, np.zeros(8), 1.0, alpha=0.0)


def test_ber_cases():
    x = np.array([1, 0, 0, 1, 0])
    assert channel.ber(x, x, 2) == 0.0
    assert channel.ber(x, 1 - x, 2) == 2.5
    assert channel.ber(x, np.zeros(5), 2) == 1.0
    with pytest.raises(ParameterError):
        channel.ber(x, x[:4], 2)
    with pytest.raises(ParameterError):
        channel.ber(x, x, 0)


@given(db=st.floats(-40, 40), em=st.floats(0.1, 100), bits=st.floats(1, 30))
def test_ebn0_roundtrip(db, em, bits):
    s = channel.ebn0_to_sigma(db, em, bits)
    assert channel.sigma_to_ebn0(s, em, bits) == pytest.approx(db, abs=1e-9)


def test_threshold_ebn0():
    sigma2 = glauber.mixing_threshold(16, 128)
    assert sigma2 == 508.0
    db = channel.sigma_to_ebn0(math.sqrt(sigma2), 16, 14)
    assert abs(db - (-29.5)) < 0.2


def test_trial_rng_keys():
    a = channel.trial_rng(1, 2, 3).random(4)
    assert np.array_equal(a, channel.trial_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, channel.trial_rng(1, 3, 2).random(4))
    assert not np.array_equal(a, channel.trial_rng(2, 2, 3).random(4))
