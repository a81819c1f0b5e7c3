"""Path-following solver for determinant-maximization programs.

Programs have the form::

    maximize    (1/2n) log2 det G(theta) - c0
    subject to  M_k(theta) >= 0            (linear matrix inequalities)
                p(theta) <= budget         (one linear power constraint)

where theta collects the free entries of a symmetric n x n block H and,
unless frozen, of a strictly lower triangular n x n block B. G, M_k and p
are affine; they are supplied as callables of (H, B) and their coefficients
are recovered by probing, so any affine recipe can be plugged in.

The method is a primal barrier method: for increasing t the centering
problem

    minimize  -t (1/2n) log2 det G - sum_k ln det M_k - ln(budget - p)

is solved by damped Newton steps. At an exact center the duality gap is
``(sum_k order(M_k) + 1) / t`` in bits per use.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from numpy.typing import NDArray

from .errors import MalformedInstance, NoStrictInterior, NumericalFailure
from .numerics import strict_lower, sym

log = logging.getLogger(__name__)

LN2 = np.log(2.0)

MatrixMap = Callable[[NDArray, NDArray], NDArray]


@dataclass(frozen=True)
class VarLayout:
    """Packing of (H, B) into the flat variable vector theta.

    H contributes its upper-triangular entries in row-major order, B its
    strictly-lower entries in row-major order, optionally permuted by
    ``b_perm`` (theta's k-th B slot holds strict-lower position
    ``b_perm[k]``). With ``freeze_b`` B is identically zero and has no slots.
    """

    n: int
    freeze_b: bool = False
    b_perm: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 1:
            raise MalformedInstance(f"block length must be >= 1, got {self.n}")
        if self.b_perm is not None and sorted(self.b_perm) != list(range(self.nb_full)):
            raise MalformedInstance("b_perm is not a permutation of the B slots")

    @property
    def nh(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def nb_full(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def nb(self) -> int:
        return 0 if self.freeze_b else self.nb_full

    @property
    def size(self) -> int:
        return self.nh + self.nb

    def unpack(self, theta: NDArray) -> tuple[NDArray, NDArray]:
        theta = np.asarray(theta, dtype=float)
        n = self.n
        h = np.zeros((n, n))
        h[np.triu_indices(n)] = theta[:self.nh]
        h = h + np.triu(h, 1).T
        free = np.zeros(self.nb_full)
        if not self.freeze_b:
            b_part = theta[self.nh:]
            if self.b_perm is None:
                free = b_part.copy()
            else:
                free[list(self.b_perm)] = b_part
        return h, strict_lower(free, n)

    def pack(self, h: NDArray, b: NDArray) -> NDArray:
        n = self.n
        h_part = sym(h)[np.triu_indices(n)]
        if self.freeze_b:
            return h_part
        free = np.asarray(b, dtype=float)[np.tril_indices(n, -1)]
        if self.b_perm is not None:
            free = free[list(self.b_perm)]
        return np.concatenate([h_part, free])


@dataclass(frozen=True, eq=False)
class MaxDetInstance:
    """A determinant-maximization program over (H, B).

    ``start`` is an optional (anchor, direction) pair of theta vectors: the
    anchor is typically on the boundary of the feasible set and
    ``anchor + s * direction`` enters the interior for small s > 0.
    """

    layout: VarLayout
    objective_map: MatrixMap
    objective_order: int
    objective_offset: float
    power_map: Callable[[NDArray, NDArray], float]
    power_budget: float
    lmi_maps: Sequence[MatrixMap]
    lmi_orders: Sequence[int]
    start: Optional[tuple] = None
    name: str = "maxdet"

    @property
    def n(self) -> int:
        return self.layout.n

    def objective(self, theta: NDArray) -> float:
        g = self.objective_map(*self.layout.unpack(theta))
        sign, logdet = np.linalg.slogdet(sym(g))
        if sign <= 0:
            return -np.inf
        return logdet / LN2 / (2 * self.n) - self.objective_offset

    def power(self, theta: NDArray) -> float:
        return float(self.power_map(*self.layout.unpack(theta)))


class Status(str, Enum):
    OPTIMAL = "Optimal"
    MAX_ITERATIONS = "MaxIterations"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True, eq=False)
class SolveReport:
    status: Status
    rate: float
    h_opt: Optional[NDArray]
    b_opt: Optional[NDArray]
    gap: float
    kkt_residual: float
    iterations: int
    wall_time: float
    theta: Optional[NDArray] = None
    history: tuple = ()
    certificate: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# validation


def _probe_points(size: int, rng: np.random.Generator, count: int = 3) -> list[NDArray]:
    return [rng.standard_normal(size) for _ in range(count)]


def validate(instance: MaxDetInstance) -> None:
    """Check orders, symmetry and affineness of every map.

    Affineness is probed by comparing each map at a convex combination of two
    random points with the same combination of its values.
    """
    layout = instance.layout
    rng = np.random.default_rng(20240601)
    maps = [("objective", instance.objective_map, instance.objective_order)]
    if len(instance.lmi_maps) != len(instance.lmi_orders):
        raise MalformedInstance("lmi_maps and lmi_orders differ in length")
    maps += [(f"lmi[{k}]", f, order) for k, (f, order) in enumerate(zip(instance.lmi_maps, instance.lmi_orders))]
    pts = _probe_points(layout.size, rng)
    lam = 0.3
    for label, f, order in maps:
        vals = [np.asarray(f(*layout.unpack(p)), dtype=float) for p in pts]
        for v in vals:
            if v.shape != (order, order):
                raise MalformedInstance(f"{label}: expected order {order}, map returned shape {v.shape}")
            if not np.allclose(v, v.T, rtol=0, atol=1e-12 * (1 + np.abs(v).max())):
                raise MalformedInstance(f"{label}: map output is not symmetric")
        mid = np.asarray(f(*layout.unpack(lam * pts[0] + (1 - lam) * pts[1])), dtype=float)
        expect = lam * vals[0] + (1 - lam) * vals[1]
        scale = 1.0 + max(np.abs(v).max() for v in vals)
        if np.abs(mid - expect).max() > 1e-9 * scale:
            raise MalformedInstance(f"{label}: map is not affine (convex-combination probe failed)")
    pw = [instance.power(p) for p in pts]
    mid = instance.power(lam * pts[0] + (1 - lam) * pts[1])
    if abs(mid - (lam * pw[0] + (1 - lam) * pw[1])) > 1e-9 * (1 + max(map(abs, pw))):
        raise MalformedInstance("power: map is not affine (convex-combination probe failed)")
    if instance.objective_order < 1 or any(o < 1 for o in instance.lmi_orders):
        raise MalformedInstance("matrix orders must be positive")


# ---------------------------------------------------------------------------
# compiled affine maps


class _AffineLMI:
    """Sparse representation M(theta) = M0 + sum_i theta_i A_i, with the A_i
    stored as lower-triangle entries (var, row, col, coef), row >= col."""

    def __init__(self, f: MatrixMap, layout: VarLayout, order: int):
        self.order = order
        zero = np.zeros(layout.size)
        m0 = sym(f(*layout.unpack(zero)))
        rows_l, cols_l = np.tril_indices(order)
        var, row, col, coef = [], [], [], []
        for i in range(layout.size):
            e = zero.copy()
            e[i] = 1.0
            a = sym(f(*layout.unpack(e))) - m0
            vals = a[rows_l, cols_l]
            nz = np.nonzero(vals)[0]
            var.append(np.full(nz.size, i))
            row.append(rows_l[nz])
            col.append(cols_l[nz])
            coef.append(vals[nz])
        self.m0 = m0
        self.var = np.concatenate(var).astype(np.intp)
        self.row = np.concatenate(row).astype(np.intp)
        self.col = np.concatenate(col).astype(np.intp)
        self.coef = np.concatenate(coef)
        self.nvar = layout.size
        self.log_scale = 0.0  # ln det of the congruence applied by equilibrate()
        self._refresh()

    def _refresh(self):
        # half-weight on diagonal entries so that A_i = sum c (E_rc + E_cr)
        self.half = np.where(self.row == self.col, 0.5 * self.coef, self.coef)
        self.flat_lo = self.row * self.order + self.col
        self.flat_up = self.col * self.order + self.row
        self.incidence = scipy.sparse.csr_matrix(
            (self.half, (self.var, np.arange(self.var.size))), shape=(self.nvar, self.var.size)
        )

    def equilibrate(self, theta: NDArray) -> None:
        """Congruence-scale by D = diag(M(theta))^{-1/2}; ln det changes by 2 sum ln D."""
        d = np.diag(self.value(theta))
        if np.any(d <= 0):
            return
        s = 1.0 / np.sqrt(d)
        self.m0 = self.m0 * np.outer(s, s)
        self.coef = self.coef * s[self.row] * s[self.col]
        self.log_scale += 2.0 * np.sum(np.log(s))
        self._refresh()

    def value(self, theta: NDArray) -> NDArray:
        w = self.half * theta[self.var]
        size = self.order * self.order
        m = self.m0.ravel() + np.bincount(self.flat_lo, w, size) + np.bincount(self.flat_up, w, size)
        return m.reshape(self.order, self.order)

    def factor(self, theta: NDArray) -> Optional[NDArray]:
        """Cholesky factor of M(theta), or None outside the open PD cone."""
        try:
            return scipy.linalg.cholesky(self.value(theta), lower=True, check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            return None

    def logdet(self, theta: NDArray) -> float:
        low = self.factor(theta)
        if low is None:
            return -np.inf
        return 2.0 * float(np.sum(np.log(np.diag(low))))

    def derivatives(self, low: NDArray) -> tuple[NDArray, NDArray]:
        """Gradient and Hessian of -ln det M at the point with factor ``low``."""
        linv = scipy.linalg.solve_triangular(low, np.eye(self.order), lower=True, check_finite=False)
        s = linv.T @ linv
        grad = -2.0 * np.bincount(self.var, self.half * s[self.row, self.col], self.nvar)
        r, c = self.row, self.col
        # tr(S (E_rc+E_cr) S (E_uv+E_vu)) = 2 (S_ru S_cv + S_rv S_cu)
        t = 2.0 * (s[np.ix_(r, r)] * s[np.ix_(c, c)] + s[np.ix_(r, c)] * s[np.ix_(c, r)])
        pt = self.incidence @ t
        hess = (self.incidence @ pt.T).T
        return grad, 0.5 * (hess + hess.T)


@dataclass
class _Compiled:
    instance: MaxDetInstance
    g: _AffineLMI
    lmis: list
    p0: float
    p_grad: NDArray
    budget: float
    weight: float  # converts ln det G to bits per use

    @property
    def barrier_degree(self) -> int:
        return sum(m.order for m in self.lmis) + 1

    def slack(self, theta: NDArray) -> float:
        return self.budget - (self.p0 + self.p_grad @ theta)

    def objective(self, theta: NDArray) -> float:
        ld = self.g.logdet(theta)
        return self.weight * (ld - self.g.log_scale) - self.instance.objective_offset

    def barrier_value(self, theta: NDArray, t: float) -> float:
        s = self.slack(theta)
        if not s > 0:
            return np.inf
        total = -t * self.weight * self.g.logdet(theta) - np.log(s)
        for m in self.lmis:
            total -= m.logdet(theta)
        return total if np.isfinite(total) else np.inf


def _compile(instance: MaxDetInstance) -> _Compiled:
    layout = instance.layout
    zero = np.zeros(layout.size)
    p0 = instance.power(zero)
    p_grad = np.empty(layout.size)
    for i in range(layout.size):
        e = zero.copy()
        e[i] = 1.0
        p_grad[i] = instance.power(e) - p0
    return _Compiled(
        instance=instance,
        g=_AffineLMI(instance.objective_map, layout, instance.objective_order),
        lmis=[_AffineLMI(f, layout, o) for f, o in zip(instance.lmi_maps, instance.lmi_orders)],
        p0=p0,
        p_grad=p_grad,
        budget=float(instance.power_budget),
        weight=1.0 / (LN2 * 2 * instance.n),
    )


def _strictly_feasible(instance: MaxDetInstance, theta: NDArray) -> bool:
    if not instance.power(theta) < instance.power_budget:
        return False
    h, b = instance.layout.unpack(theta)
    for f in (instance.objective_map, *instance.lmi_maps):
        try:
            np.linalg.cholesky(sym(f(h, b)))
        except np.linalg.LinAlgError:
            return False
    return True


def feasible_start(instance: MaxDetInstance, max_halvings: int = 60) -> NDArray:
    """Strictly feasible theta found by a line search along the instance's start ray.

    The first trial step spends half of the remaining power budget; the step
    is halved until every constraint holds strictly.
    """
    if instance.start is None:
        raise NoStrictInterior(f"{instance.name}: no start hint supplied")
    anchor, direction = (np.asarray(v, dtype=float) for v in instance.start)
    p_anchor = instance.power(anchor)
    rate = instance.power(anchor + direction) - p_anchor
    room = instance.power_budget - p_anchor
    if not room > 0:
        raise NoStrictInterior(f"{instance.name}: power budget leaves no strict interior")
    step = 0.5 * room / rate if rate > 0 else 1.0
    for _ in range(max_halvings):
        theta = anchor + step * direction
        if _strictly_feasible(instance, theta):
            return theta
        step *= 0.5
    raise NoStrictInterior(f"{instance.name}: line search from the start hint found no interior point")


# ---------------------------------------------------------------------------
# certification


def certify(instance: MaxDetInstance, theta: NDArray) -> dict:
    """Feasibility and stationarity diagnostics recomputed from the raw maps.

    Returns ``min_eigs`` (objective matrix first, then each LMI, each divided
    by the matrix's largest absolute diagonal entry), ``power_slack``
    (budget minus power used), and ``kkt_residual``: the larger of the
    relative primal infeasibility and the relative residual of the
    best-fitting central-path stationarity condition.
    """
    layout = instance.layout
    theta = np.asarray(theta, dtype=float)
    h, b = layout.unpack(theta)
    mats = [sym(instance.objective_map(h, b))] + [sym(f(h, b)) for f in instance.lmi_maps]
    min_eigs = []
    for m in mats:
        scale = max(np.abs(np.diag(m)).max(), 1e-300)
        min_eigs.append(float(np.linalg.eigvalsh(m)[0] / scale))
    used = instance.power(theta)
    slack = float(instance.power_budget - used)
    infeas = max([0.0, -slack / max(abs(instance.power_budget), 1e-300)] + [-e for e in min_eigs])

    stationarity = np.nan
    if infeas == 0.0 and slack > 0 and min(min_eigs) > 0:
        size = layout.size
        grad_obj = np.zeros(size)
        grad_bar = np.zeros(size)
        zero = np.zeros(size)
        ginv = np.linalg.inv(mats[0])
        minv = [np.linalg.inv(m) for m in mats[1:]]
        m0 = [instance.objective_map(*layout.unpack(zero))] + [f(*layout.unpack(zero)) for f in instance.lmi_maps]
        p0 = instance.power(zero)
        for i in range(size):
            e = zero.copy()
            e[i] = 1.0
            hb = layout.unpack(e)
            grad_obj[i] = np.sum(ginv * (instance.objective_map(*hb) - m0[0])) / (LN2 * 2 * instance.n)
            for k, f in enumerate(instance.lmi_maps):
                grad_bar[i] -= np.sum(minv[k] * (f(*hb) - m0[k + 1]))
            grad_bar[i] += (instance.power(e) - p0) / slack
        denom = grad_obj @ grad_obj
        if denom > 0:
            t = (grad_obj @ grad_bar) / denom
            resid = grad_bar - t * grad_obj
            stationarity = float(np.linalg.norm(resid) / (abs(t) * np.sqrt(denom) + np.linalg.norm(grad_bar)))
        else:
            stationarity = float(np.linalg.norm(grad_bar) > 0)
    kkt = infeas if np.isnan(stationarity) else max(infeas, stationarity)
    return {"kkt_residual": float(kkt), "min_eigs": min_eigs, "power_slack": slack}


# ---------------------------------------------------------------------------
# solver


def _newton_system(hess: NDArray, grad: NDArray) -> Optional[NDArray]:
    scale = max(float(np.mean(np.abs(np.diag(hess)))), 1e-300)
    for attempt in range(4):
        jitter = 0.0 if attempt == 0 else 1e-10 * scale * 100 ** (attempt - 1)
        try:
            cf = scipy.linalg.cho_factor(hess + jitter * np.eye(hess.shape[0]), check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            continue
        step = -scipy.linalg.cho_solve(cf, grad, check_finite=False)
        if np.all(np.isfinite(step)):
            return step
    return None


def solve(
    instance: MaxDetInstance,
    tol_gap: float = 1e-6,
    tol_feas: float = 1e-8,
    max_iter: int = 500,
    theta0: Optional[NDArray] = None,
    mu: float = 10.0,
    newton_tol: float = 1e-8,
) -> SolveReport:
    """Solve ``instance`` to a certified gap of ``tol_gap`` bits per use.

    ``max_iter`` caps the total number of Newton steps. The returned report
    always carries the last centered iterate, whatever the status.
    """
    started = time.perf_counter()
    validate(instance)
    layout = instance.layout
    try:
        theta = feasible_start(instance) if theta0 is None else np.asarray(theta0, dtype=float).copy()
        if not _strictly_feasible(instance, theta):
            raise NoStrictInterior(f"{instance.name}: supplied start is not strictly feasible")
    except NoStrictInterior as exc:
        log.warning("%s", exc)
        return SolveReport(Status.INFEASIBLE, np.nan, None, None, np.inf, np.inf, 0, time.perf_counter() - started)

    prob = _compile(instance)
    prob.g.equilibrate(theta)
    for m in prob.lmis:
        m.equilibrate(theta)

    degree = prob.barrier_degree
    t = degree / max(1.0, abs(prob.objective(theta)))
    iterations = 0
    history = []
    status = Status.OPTIMAL
    centered = theta.copy()

    while True:
        # centering
        while True:
            if iterations >= max_iter:
                status = Status.MAX_ITERATIONS
                break
            lg = prob.g.factor(theta)
            grad, hess = prob.g.derivatives(lg)
            grad *= t * prob.weight
            hess *= t * prob.weight
            for m in prob.lmis:
                gk, hk = m.derivatives(m.factor(theta))
                grad += gk
                hess += hk
            s = prob.slack(theta)
            grad += prob.p_grad / s
            hess += np.outer(prob.p_grad, prob.p_grad) / s**2
            step = _newton_system(hess, grad)
            if step is None:
                status = Status.NUMERICAL_FAILURE
                break
            iterations += 1
            decrement = float(-grad @ step)
            if decrement / 2.0 <= newton_tol:
                break
            f0 = prob.barrier_value(theta, t)
            alpha = 1.0
            while alpha > 1e-12:
                trial = theta + alpha * step
                if prob.barrier_value(trial, t) <= f0 - 0.01 * alpha * decrement:
                    break
                alpha *= 0.5
            else:
                # no measurable decrease: accept the current point as centered
                break
            theta = trial
        if status is not Status.OPTIMAL:
            break
        centered = theta.copy()
        history.append(prob.objective(theta))
        if degree / t <= tol_gap:
            break
        t *= mu

    gap = degree / t
    cert = certify(instance, centered)
    feasible = all(e >= -tol_feas for e in cert["min_eigs"]) and cert["power_slack"] >= -tol_feas * abs(
        instance.power_budget
    )
    if status is Status.OPTIMAL and not feasible:
        status = Status.NUMERICAL_FAILURE
    h_opt, b_opt = layout.unpack(centered)
    report = SolveReport(
        status=status,
        rate=float(instance.objective(centered)),
        h_opt=h_opt,
        b_opt=b_opt,
        gap=float(gap),
        kkt_residual=cert["kkt_residual"],
        iterations=iterations,
        wall_time=time.perf_counter() - started,
        theta=centered,
        history=tuple(history),
        certificate=cert,
    )
    log.debug("%s: %s rate=%.9g gap=%.2e iters=%d", instance.name, status.value, report.rate, gap, iterations)
    return report
