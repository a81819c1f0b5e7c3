"""Closed-form Gaussian information measures of a linear feedback coding scheme.

The channel is ``x = s + B (w + v)``, ``y = x + w`` with ``s``, ``w``, ``v``
independent zero-mean Gaussians. Every rate is in bits per channel use and
carries the 1/2 of the Gaussian entropy formula.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSpec
from .errors import DimensionMismatch, InvalidParameter
from .numerics import chol_logdet2, cholesky, min_eig_psd_check, schur_complement, strict_lower_entries, sym


@dataclass(frozen=True, eq=False)
class CodingScheme:
    """Strictly lower triangular feedback matrix ``b`` and message covariance ``k_s``."""

    b: NDArray
    k_s: NDArray
    n: int = field(init=False)

    def __post_init__(self):
        b = np.array(self.b, dtype=float, ndmin=2)
        k_s = sym(self.k_s)
        if b.shape != k_s.shape:
            raise DimensionMismatch(f"b {b.shape} and k_s {k_s.shape} differ in order")
        strict_lower_entries(b)
        n = k_s.shape[0]
        if not min_eig_psd_check(k_s, 1e-9 * abs(np.trace(k_s)) / n):
            raise InvalidParameter("k_s is not positive semidefinite")
        b.flags.writeable = False
        k_s.flags.writeable = False
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "k_s", k_s)
        object.__setattr__(self, "n", n)

    @classmethod
    def open_loop(cls, k_s: NDArray) -> "CodingScheme":
        k_s = np.asarray(k_s, dtype=float)
        return cls(np.zeros_like(k_s), k_s)


def _check(scheme: CodingScheme, chan: ChannelSpec) -> None:
    if scheme.n != chan.n:
        raise DimensionMismatch(f"scheme order {scheme.n} != channel order {chan.n}")


class JointCov:
    """Joint law of the stacked vector (S, W, V, X, Y).

    Stored as the block-diagonal covariance of the independent sources
    (S, W, V) together with the transfer maps taking them to X and Y.
    """

    SIGNALS = ("S", "W", "V", "X", "Y")

    def __init__(self, scheme: CodingScheme, chan: ChannelSpec):
        _check(scheme, chan)
        n = chan.n
        eye, zero, b = np.eye(n), np.zeros((n, n)), scheme.b
        self.n = n
        self.base = np.zeros((3 * n, 3 * n))
        for k, m in enumerate((scheme.k_s, chan.k_w, chan.k_v)):
            self.base[k * n:(k + 1) * n, k * n:(k + 1) * n] = m
        self.maps = {
            "S": np.hstack([eye, zero, zero]),
            "W": np.hstack([zero, eye, zero]),
            "V": np.hstack([zero, zero, eye]),
            "X": np.hstack([eye, b, b]),
            "Y": np.hstack([eye, eye + b, b]),
        }

    def transfer(self, items) -> NDArray:
        """Stack transfer rows for ``items``, a sequence of (signal, index-or-slice)."""
        return np.vstack([np.atleast_2d(self.maps[name][idx]) for name, idx in items])

    def cov(self, items) -> NDArray:
        t = self.transfer(items)
        return sym(t @ self.base @ t.T)

    def block(self, *names: str) -> NDArray:
        """Covariance of the concatenation of whole signals, e.g. ``block("Y", "X")``."""
        return self.cov([(name, slice(None)) for name in names])


def stacked_covariance(scheme: CodingScheme, chan: ChannelSpec) -> JointCov:
    return JointCov(scheme, chan)


def _output_noise_cov(scheme: CodingScheme, chan: ChannelSpec) -> NDArray:
    ib = np.eye(chan.n) + scheme.b
    return ib @ chan.k_w @ ib.T + scheme.b @ chan.k_v @ scheme.b.T


def achievable_rate(scheme: CodingScheme, chan: ChannelSpec) -> float:
    """(1/n) I(S^n; Y^n) in bits per use."""
    _check(scheme, chan)
    noise = _output_noise_cov(scheme, chan)
    return (chol_logdet2(noise + scheme.k_s) - chol_logdet2(noise)) / (2 * chan.n)


message_rate = achievable_rate


def power_usage(scheme: CodingScheme, chan: ChannelSpec) -> float:
    """Average input power (1/n) tr(K_s + B (K_w + K_v) B^T)."""
    _check(scheme, chan)
    b = scheme.b
    return float(np.trace(scheme.k_s) + np.trace(b @ chan.k_wv @ b.T)) / chan.n


def conditional_directed_info_rate(scheme: CodingScheme, chan: ChannelSpec) -> float:
    """(1/n) I(X^n -> Y^n | V^n); does not depend on the feedback noise."""
    _check(scheme, chan)
    ib = np.eye(chan.n) + scheme.b
    num = chol_logdet2(ib @ chan.k_w @ ib.T + scheme.k_s)
    return (num - chol_logdet2(chan.k_w)) / (2 * chan.n)


def directed_info_rate(scheme: CodingScheme, chan: ChannelSpec) -> float:
    """(1/n) sum_i I(X^i; Y_i | Y^{i-1}).

    Sum over i of h(Y_i | Y^{i-1}) is h(Y^n). The terms h(Y_i | Y^{i-1}, X^i)
    are the Cholesky pivots of Y_i in the interleaved ordering
    X_1, Y_1, X_2, Y_2, ..., where each Y_i is preceded by exactly its
    conditioning set.
    """
    joint = JointCov(scheme, chan)
    n = chan.n
    order = [(sig, i) for i in range(n) for sig in ("X", "Y")]
    low = cholesky(joint.cov(order))
    cond = 2.0 * np.sum(np.log2(np.diag(low)[1::2]))
    return (chol_logdet2(joint.block("Y")) - cond) / (2 * n)


def mutual_info_rate(scheme: CodingScheme, chan: ChannelSpec) -> float:
    """(1/n) I(X^n; Y^n)."""
    joint = JointCov(scheme, chan)
    n = chan.n
    cond_y = schur_complement(joint.block("Y", "X"), n)
    return (chol_logdet2(joint.block("Y")) - chol_logdet2(cond_y)) / (2 * n)


def modified_channel_rate(scheme: CodingScheme, k_noise: NDArray) -> float:
    """Rate over the degraded channel y = s + (I + B) z with z ~ N(0, k_noise)."""
    ib = np.eye(scheme.n) + scheme.b
    num = chol_logdet2(ib @ k_noise @ ib.T + scheme.k_s)
    return (num - chol_logdet2(k_noise)) / (2 * scheme.n)
