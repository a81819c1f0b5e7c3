"""Independent reference computations used by several test modules."""

import numpy as np
from scipy.optimize import minimize_scalar


def _best_logdet2_2x2(a, budget):
    """max log2 det(a + K) over PSD 2x2 K with tr K <= budget (closed-form water-filling)."""
    l1, l2 = np.linalg.eigvalsh(a)
    if budget >= l2 - l1:
        return 2.0 * np.log2((budget + l1 + l2) / 2.0)
    return np.log2((l1 + budget) * l2)


def n2_feedback_rate(b21, k_fwd, k_wv, power, k_norm):
    """Rate of the best K_s for a fixed feedback gain b21 at block length 2.

    ``k_fwd`` is the noise seen through (I + B), ``k_wv`` prices B in the power
    constraint and ``k_norm`` is the normalizing determinant's matrix.
    """
    b = np.array([[0.0, 0.0], [b21, 0.0]])
    ib = np.eye(2) + b
    budget = 2 * power - np.trace(b @ k_wv @ b.T)
    if budget < 0:
        return -np.inf
    a = ib @ k_fwd @ ib.T
    return (_best_logdet2_2x2(a, budget) - np.log2(np.linalg.det(k_norm))) / 4.0


def n2_brute_force(kind, chan, grid=20001):
    """Dense grid over b21 followed by a bounded scalar refinement around the best cell."""
    if kind == "upper":
        args = (chan.k_w, chan.k_wv, chan.power, chan.k_w)
    else:
        args = (chan.k_wv, chan.k_wv, chan.power, chan.k_wv)
    b_max = np.sqrt(2 * chan.power / args[1][0, 0])
    bs = np.linspace(-b_max, b_max, grid)
    vals = np.array([n2_feedback_rate(b, *args) for b in bs])
    k = int(np.argmax(vals))
    lo, hi = bs[max(k - 1, 0)], bs[min(k + 1, grid - 1)]
    res = minimize_scalar(lambda b: -n2_feedback_rate(b, *args), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(vals[k], -res.fun)


def water_filling_rate(eigs, total_power):
    """Open-loop rate by bisection on the water level (independent of the sorted scan)."""
    eigs = np.asarray(eigs, dtype=float)
    lo, hi = eigs.min(), eigs.max() + total_power
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        if np.sum(np.maximum(0.0, mu - eigs)) > total_power:
            hi = mu
        else:
            lo = mu
    p = np.maximum(0.0, lo - eigs)
    return float(np.sum(np.log2(1 + p / eigs))) / (2 * eigs.size)


def ma1_eigenvalues(alpha, n):
    """Closed-form spectrum of the tridiagonal Toeplitz MA(1) covariance."""
    k = np.arange(1, n + 1)
    return 1 + alpha**2 + 2 * alpha * np.cos(k * np.pi / (n + 1))
