"""Channel specifications: forward/feedback noise covariances and power budget."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite
from .numerics import cholesky, eigh, spd_inverse, sym


def ma1_covariance(alpha: float, n: int) -> NDArray:
    """Covariance of W_i = U_i + alpha U_{i-1} with unit-variance white U."""
    if n < 1:
        raise InvalidParameter(f"block length must be >= 1, got {n}")
    if not abs(alpha) < 1.0:
        raise InvalidParameter(f"MA(1) parameter must satisfy |alpha| < 1, got {alpha}")
    autocov = np.zeros(n)
    autocov[0] = 1.0 + alpha * alpha
    if n > 1:
        autocov[1] = alpha
    return toeplitz_covariance(autocov)


def white_covariance(sigma: float, n: int) -> NDArray:
    """``sigma * I_n``; ``sigma`` is a variance."""
    if n < 1:
        raise InvalidParameter(f"block length must be >= 1, got {n}")
    if not sigma > 0.0:
        raise InvalidParameter(f"noise variance must be positive, got {sigma}")
    return sigma * np.eye(n)


def toeplitz_covariance(autocov: ArrayLike) -> NDArray:
    r = np.asarray(autocov, dtype=float).ravel()
    if r.size < 1:
        raise InvalidParameter("autocovariance sequence is empty")
    idx = np.arange(r.size)
    m = r[np.abs(idx[:, None] - idx[None, :])]
    if not eigh(m)[0][0] > 0.0:
        raise NotPositiveDefinite("autocovariance sequence is not positive definite")
    return m


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Additive Gaussian noise channel with additive Gaussian noise feedback.

    Parameters
    ----------
    power : float
        Average transmit power per channel use.
    k_w, k_v : array_like
        Forward and feedback noise covariances, both n x n positive definite.
    """

    power: float
    k_w: NDArray
    k_v: NDArray
    n: int = field(init=False)

    def __post_init__(self):
        k_w, k_v = sym(self.k_w), sym(self.k_v)
        if k_w.shape != k_v.shape:
            raise DimensionMismatch(f"k_w {k_w.shape} and k_v {k_v.shape} differ in order")
        if not self.power > 0.0:
            raise InvalidParameter(f"power must be positive, got {self.power}")
        for name, m in (("k_w", k_w), ("k_v", k_v)):
            try:
                cholesky(m)
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(f"{name} is not positive definite") from exc
        k_w.flags.writeable = False
        k_v.flags.writeable = False
        object.__setattr__(self, "k_w", k_w)
        object.__setattr__(self, "k_v", k_v)
        object.__setattr__(self, "power", float(self.power))
        object.__setattr__(self, "n", k_w.shape[0])

    @classmethod
    def ma1(cls, alpha: float, sigma: float, n: int, power: float) -> "ChannelSpec":
        """MA(1) forward noise with white feedback noise of variance ``sigma``."""
        return cls(power, ma1_covariance(alpha, n), white_covariance(sigma, n))

    @cached_property
    def k_wv(self) -> NDArray:
        return sym(self.k_w + self.k_v)

    @cached_property
    def k_w_inv(self) -> NDArray:
        return spd_inverse(self.k_w)

    @cached_property
    def k_v_inv(self) -> NDArray:
        return spd_inverse(self.k_v)

    @cached_property
    def k_wv_inv(self) -> NDArray:
        return spd_inverse(self.k_wv)
