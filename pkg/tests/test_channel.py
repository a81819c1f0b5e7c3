import numpy as np
import pytest

from noisyfb.channel import ChannelSpec, ma1_covariance, toeplitz_covariance, white_covariance
from noisyfb.errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite


def _ma1_by_expectation(alpha, n):
    # E[W_i W_j] with W_i = U_i + alpha U_{i-1}, written out term by term
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            terms = [(i, 1.0), (i - 1, alpha)]
            other = [(j, 1.0), (j - 1, alpha)]
            m[i, j] = sum(a * b for u, a in terms for v, b in other if u == v)
    return m


def test_ma1_white_is_identity():
    np.testing.assert_array_equal(ma1_covariance(0.0, 3), np.eye(3))


@pytest.mark.parametrize("alpha", [0.5, 0.9, -0.3])
def test_ma1_matches_expectation_oracle(alpha):
    np.testing.assert_allclose(ma1_covariance(alpha, 5), _ma1_by_expectation(alpha, 5), atol=1e-15)


def test_ma1_examples():
    np.testing.assert_allclose(ma1_covariance(0.5, 2), [[1.25, 0.5], [0.5, 1.25]])
    np.testing.assert_allclose(ma1_covariance(0.9, 2), [[1.81, 0.9], [0.9, 1.81]])


@pytest.mark.parametrize("alpha", [1.0, -1.0, 1.5])
def test_ma1_rejects_unit_root(alpha):
    with pytest.raises(InvalidParameter):
        ma1_covariance(alpha, 4)


def test_ma1_is_toeplitz_builder():
    for alpha in (0.1, 0.5, 0.9):
        r = np.zeros(7)
        r[:2] = 1 + alpha**2, alpha
        np.testing.assert_array_equal(ma1_covariance(alpha, 7), toeplitz_covariance(r))


@pytest.mark.parametrize("n", [1, 2, 8, 30, 64])
@pytest.mark.parametrize("alpha", [-0.95, -0.5, 0.1, 0.5, 0.95])
def test_ma1_positive_definite(alpha, n):
    assert np.linalg.eigvalsh(ma1_covariance(alpha, n))[0] > 0


def test_white_covariance():
    np.testing.assert_array_equal(white_covariance(1.0, 2), np.eye(2))
    np.testing.assert_array_equal(white_covariance(0.8, 1), [[0.8]])
    np.testing.assert_array_equal(white_covariance(1e-8, 3), 1e-8 * np.eye(3))
    for bad in (0.0, -1.0):
        with pytest.raises(InvalidParameter):
            white_covariance(bad, 2)


def test_toeplitz_covariance():
    np.testing.assert_array_equal(toeplitz_covariance([1, 0, 0]), np.eye(3))
    np.testing.assert_array_equal(toeplitz_covariance([1.25, 0.5]), ma1_covariance(0.5, 2))


@pytest.mark.parametrize("autocov", [(1, 0.99, -0.99), (1, 0.9, 0.2), (1, 1.5)])
def test_toeplitz_rejects_indefinite(autocov):
    idx = np.arange(len(autocov))
    assert np.linalg.eigvalsh(np.asarray(autocov)[np.abs(idx[:, None] - idx)])[0] < 0
    with pytest.raises(NotPositiveDefinite):
        toeplitz_covariance(autocov)


def test_toeplitz_accepts_nearly_singular_pd():
    # eigenvalues 0.01, 0.01, 2.98: positive definite despite the strong correlation
    m = toeplitz_covariance([1, 0.99, 0.99])
    np.testing.assert_allclose(np.linalg.eigvalsh(m), [0.01, 0.01, 2.98], atol=1e-12)


def test_channel_spec_validation():
    ch = ChannelSpec.ma1(0.5, 0.2, 4, 10.0)
    assert ch.n == 4
    np.testing.assert_allclose(ch.k_wv, ch.k_w + 0.2 * np.eye(4))
    np.testing.assert_allclose(ch.k_w @ ch.k_w_inv, np.eye(4), atol=1e-12)
    with pytest.raises(NotPositiveDefinite):
        ChannelSpec(1.0, np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        ChannelSpec(1.0, np.ones((2, 2)), np.eye(2))
    with pytest.raises(InvalidParameter):
        ChannelSpec(0.0, np.eye(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        ChannelSpec(1.0, np.eye(2), np.eye(3))


def test_channel_spec_is_immutable():
    ch = ChannelSpec.ma1(0.5, 1.0, 3, 10.0)
    with pytest.raises(ValueError):
        ch.k_w[0, 0] = 5.0
    with pytest.raises(AttributeError):
        ch.power = 3.0
