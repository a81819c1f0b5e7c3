"""Monte Carlo cross-validation of the closed-form rates.

Samples come from numpy's PCG64 bit generator, seeded explicitly, so every
estimate is reproducible from its seed.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSpec
from .errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite, RankDeficiency
from .info import (
    CodingScheme,
    achievable_rate,
    conditional_directed_info_rate,
    directed_info_rate,
    message_rate,
    mutual_info_rate,
    power_usage,
)
from .numerics import cholesky, eigh, sym

CHAIN_SLACK = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _factor(m: NDArray) -> NDArray:
    """A factor L with L L^T = m; PSD matrices that fail Cholesky use the eigen square root."""
    if not np.any(m):
        return np.zeros_like(m)
    try:
        return cholesky(m)
    except NotPositiveDefinite:
        lam, q = eigh(m)
        if lam[0] < -1e-9 * abs(np.trace(m)) / m.shape[0]:
            raise
        return q * np.sqrt(np.maximum(lam, 0.0))


@dataclass(frozen=True)
class Block:
    """``num`` sampled blocks; each array has shape (num, n)."""

    s: NDArray
    w: NDArray
    v: NDArray
    x: NDArray
    y: NDArray


def sample_block(scheme: CodingScheme, chan: ChannelSpec, rng: np.random.Generator, num: int = 1) -> Block:
    if scheme.n != chan.n:
        raise DimensionMismatch(f"scheme order {scheme.n} != channel order {chan.n}")
    n = chan.n
    s, w, v = (rng.standard_normal((num, n)) @ _factor(k).T for k in (scheme.k_s, chan.k_w, chan.k_v))
    x = s + (w + v) @ scheme.b.T
    return Block(s, w, v, x, x + w)


@dataclass(frozen=True)
class McEstimate:
    rate_estimate: float
    analytic: float
    num_samples: int
    seed: int
    plugin_cov_condition: float


def _logdet2(m: NDArray) -> float:
    try:
        low = np.linalg.cholesky(sym(m))
    except np.linalg.LinAlgError as exc:
        raise RankDeficiency("empirical covariance is not positive definite") from exc
    return 2.0 * float(np.sum(np.log2(np.diag(low))))


def mc_rate(scheme: CodingScheme, chan: ChannelSpec, num_samples: int, seed: int) -> McEstimate:
    """Plug-in estimate of (1/n) [h(Y) - h(Y | S)] from sampled blocks.

    h(Y | S) uses the residual of the least-squares regression of Y on S,
    which also covers a rank-deficient (or zero) message covariance.
    """
    n = chan.n
    if num_samples < 10 * n:
        raise InvalidParameter(f"need at least {10 * n} samples for order {n}, got {num_samples}")
    blk = sample_block(scheme, chan, make_rng(seed), num_samples)
    cov_y = blk.y.T @ blk.y / num_samples
    coef, *_ = np.linalg.lstsq(blk.s, blk.y, rcond=None)
    resid = blk.y - blk.s @ coef
    cov_res = resid.T @ resid / num_samples
    estimate = (_logdet2(cov_y) - _logdet2(cov_res)) / (2 * n)
    return McEstimate(
        rate_estimate=estimate,
        analytic=achievable_rate(scheme, chan),
        num_samples=num_samples,
        seed=seed,
        plugin_cov_condition=float(np.linalg.cond(cov_y)),
    )


@dataclass(frozen=True)
class ChainCheck:
    message: float
    conditional_directed: float
    directed: float
    mutual: float
    passed: bool

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.message, self.conditional_directed, self.directed, self.mutual)


def lemma_chain_check(scheme: CodingScheme, chan: ChannelSpec, slack: float = CHAIN_SLACK) -> ChainCheck:
    """Evaluate I(M;Y) <= I(X->Y|V) <= I(X->Y) <= I(X;Y), per channel use."""
    vals = (
        message_rate(scheme, chan),
        conditional_directed_info_rate(scheme, chan),
        directed_info_rate(scheme, chan),
        mutual_info_rate(scheme, chan),
    )
    passed = all(lo <= hi + slack for lo, hi in zip(vals, vals[1:]))
    return ChainCheck(*vals, passed=passed)


def random_feasible_scheme(chan: ChannelSpec, rng: np.random.Generator) -> CodingScheme:
    """Random scheme drawing exactly 90% of the power budget."""
    n = chan.n
    b = np.tril(rng.uniform(-0.5, 0.5, (n, n)), -1)
    a = rng.standard_normal((n, n))
    k_s = a @ a.T + 1e-6 * np.eye(n)
    used = power_usage(CodingScheme(b, k_s), chan)
    # power is homogeneous of degree 1 in (K_s, B B^T): scale K_s by c, B by sqrt(c)
    c = 0.9 * chan.power / used
    return CodingScheme(np.sqrt(c) * b, c * k_s)
