"""Rate programs for the noisy-feedback Gaussian channel.

Four quantities are computed from a :class:`ChannelSpec`:

* ``UPPER`` -- conditional directed information bound, a max-det program in
  (H, B) whose objective is ``log det [[K_v^-1, B^T], [B, H]]``;
* ``LOWER`` -- capacity of the degraded channel ``y = s + (I + B)(w + v)``;
* ``IDEAL_FEEDBACK`` -- the same program with noiseless feedback;
* ``OPEN_LOOP`` -- water-filling over the eigenvalues of K_w.

In every program H is the output covariance and the message covariance is
recovered as a Schur complement of the LMI.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSpec
from .errors import CrossCheckFailure, RecoveryFailure
from .info import CodingScheme, achievable_rate, conditional_directed_info_rate, modified_channel_rate
from .maxdet import MaxDetInstance, SolveReport, VarLayout, solve
from .numerics import chol_logdet2, eigh, sym

CROSS_CHECK_TOL = 1e-5
CLIP_REL = 1e-7


class BoundKind(str, Enum):
    UPPER = "upper"
    LOWER = "lower"
    IDEAL_FEEDBACK = "idealfb"
    OPEN_LOOP = "openloop"


@dataclass(frozen=True, eq=False)
class BoundResult:
    kind: BoundKind
    rate: float
    scheme: Optional[CodingScheme]
    report: Optional[SolveReport]
    cross_check: float

    @property
    def ok(self) -> bool:
        return self.report is None or self.report.ok


def _start(layout: VarLayout, k_base: NDArray) -> tuple[NDArray, NDArray]:
    n = layout.n
    return layout.pack(k_base, np.zeros((n, n))), layout.pack(np.eye(n), np.zeros((n, n)))


def _power_map(k: NDArray):
    def power(h, b):
        return np.trace(h) - 2.0 * np.sum(k * b) - np.trace(k)

    return power


def upper_bound_instance(chan: ChannelSpec, layout: Optional[VarLayout] = None) -> MaxDetInstance:
    """Conditional directed information program.

    The LMI is arranged so that its Schur complement onto the H block is
    ``H - (I+B) K_w (I+B)^T - B K_v B^T``, i.e. the message covariance.
    """
    n = chan.n
    layout = layout or VarLayout(n)
    eye, zero = np.eye(n), np.zeros((n, n))
    k_w_inv, k_v_inv = chan.k_w_inv, chan.k_v_inv

    def objective(h, b):
        return np.block([[k_v_inv, b.T], [b, h]])

    def lmi(h, b):
        ib = eye + b
        return np.block([[h, ib, b], [ib.T, k_w_inv, zero], [b.T, zero, k_v_inv]])

    return MaxDetInstance(
        layout=layout,
        objective_map=objective,
        objective_order=2 * n,
        objective_offset=(chol_logdet2(chan.k_w) - chol_logdet2(chan.k_v)) / (2 * n),
        power_map=_power_map(chan.k_w),
        power_budget=n * chan.power,
        lmi_maps=(lmi,),
        lmi_orders=(3 * n,),
        start=_start(layout, chan.k_w),
        name="upper",
    )


def _degraded_instance(k_noise: NDArray, power: float, layout: VarLayout, name: str) -> MaxDetInstance:
    n = layout.n
    eye = np.eye(n)
    k_inv = np.linalg.inv(k_noise)
    k_inv = (k_inv + k_inv.T) / 2

    def lmi(h, b):
        ib = eye + b
        return np.block([[h, ib], [ib.T, k_inv]])

    return MaxDetInstance(
        layout=layout,
        objective_map=lambda h, b: h,
        objective_order=n,
        objective_offset=chol_logdet2(k_noise) / (2 * n),
        power_map=_power_map(k_noise),
        power_budget=n * power,
        lmi_maps=(lmi,),
        lmi_orders=(2 * n,),
        start=_start(layout, k_noise),
        name=name,
    )


def lower_bound_instance(chan: ChannelSpec, layout: Optional[VarLayout] = None) -> MaxDetInstance:
    return _degraded_instance(chan.k_wv, chan.power, layout or VarLayout(chan.n), "lower")


def ideal_fb_instance(chan: ChannelSpec, layout: Optional[VarLayout] = None) -> MaxDetInstance:
    return _degraded_instance(chan.k_w, chan.power, layout or VarLayout(chan.n), "idealfb")


def open_loop_instance(chan: ChannelSpec) -> MaxDetInstance:
    """The ideal-feedback program with B frozen at zero."""
    return _degraded_instance(chan.k_w, chan.power, VarLayout(chan.n, freeze_b=True), "openloop")


def water_filling(noise_eigs: NDArray, total_power: float) -> tuple[NDArray, float]:
    """Powers ``max(0, mu - lambda_i)`` summing to ``total_power``, and the level mu.

    ``noise_eigs`` must be ascending. The level is found by scanning the
    number of active modes, so no iteration tolerance is involved.
    """
    lam = np.asarray(noise_eigs, dtype=float)
    csum = np.cumsum(lam)
    k = lam.size
    for active in range(lam.size, 0, -1):
        mu = (total_power + csum[active - 1]) / active
        if mu > lam[active - 1]:
            k = active
            break
    mu = (total_power + csum[k - 1]) / k
    return np.maximum(0.0, mu - lam), mu


def open_loop_capacity(chan: ChannelSpec) -> BoundResult:
    n = chan.n
    lam, q = eigh(chan.k_w)
    powers, _ = water_filling(lam, n * chan.power)
    k_s = sym(q @ np.diag(powers) @ q.T)
    scheme = CodingScheme.open_loop(k_s)
    rate = float(np.sum(np.log2(1.0 + powers / lam))) / (2 * n)
    return BoundResult(BoundKind.OPEN_LOOP, rate, scheme, None, achievable_rate(scheme, chan))


def recover_scheme(kind: BoundKind, chan: ChannelSpec, h_opt: NDArray, b_opt: NDArray) -> CodingScheme:
    """Message covariance implied by a solver point, clipped onto the PSD cone.

    Eigenvalues in ``[-1e-7 * tr(H)/n, 0)`` are zeroed; anything more negative
    means the point was not feasible.
    """
    n = chan.n
    ib = np.eye(n) + b_opt
    if kind is BoundKind.UPPER:
        k_s = h_opt - ib @ chan.k_w @ ib.T - b_opt @ chan.k_v @ b_opt.T
    elif kind is BoundKind.LOWER:
        k_s = h_opt - ib @ chan.k_wv @ ib.T
    else:
        k_s = h_opt - ib @ chan.k_w @ ib.T
    lam, q = eigh(k_s)
    threshold = CLIP_REL * abs(np.trace(h_opt)) / n
    if lam[0] < -threshold:
        raise RecoveryFailure(f"{kind.value}: recovered K_s has eigenvalue {lam[0]:.3e} < -{threshold:.3e}")
    if lam[0] < 0:
        k_s = q @ np.diag(np.maximum(lam, 0.0)) @ q.T
    return CodingScheme(b_opt, k_s)


_BUILDERS = {
    BoundKind.UPPER: upper_bound_instance,
    BoundKind.LOWER: lower_bound_instance,
    BoundKind.IDEAL_FEEDBACK: ideal_fb_instance,
}


def program_rate(kind: BoundKind, scheme: CodingScheme, chan: ChannelSpec) -> float:
    """Rate of ``scheme`` under the objective of program ``kind``, from info measures."""
    if kind is BoundKind.UPPER:
        return conditional_directed_info_rate(scheme, chan)
    if kind is BoundKind.LOWER:
        return modified_channel_rate(scheme, chan.k_wv)
    if kind is BoundKind.IDEAL_FEEDBACK:
        return modified_channel_rate(scheme, chan.k_w)
    return achievable_rate(scheme, chan)


def compute_bound(kind, chan: ChannelSpec, **opts) -> BoundResult:
    """Build, solve, recover and cross-check one bound.

    ``opts`` are forwarded to :func:`noisyfb.maxdet.solve`.
    """
    kind = BoundKind(kind)
    if kind is BoundKind.OPEN_LOOP:
        return open_loop_capacity(chan)
    report = solve(_BUILDERS[kind](chan), **opts)
    if report.h_opt is None:
        return BoundResult(kind, np.nan, None, report, np.nan)
    scheme = recover_scheme(kind, chan, report.h_opt, report.b_opt)
    check = program_rate(kind, scheme, chan)
    if report.ok and abs(report.rate - check) > CROSS_CHECK_TOL:
        raise CrossCheckFailure(f"{kind.value}: program value {report.rate:.9g} vs recomputed {check:.9g}")
    return BoundResult(kind, report.rate, scheme, report, check)
