"""Dense symmetric-matrix primitives.

Matrices are plain ``numpy`` arrays. :func:`sym` is the single entry point
that validates shape and symmetrizes, so every other function may assume an
exactly symmetric input. All log-determinants are base 2.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceFailure, DimensionMismatch, NotPositiveDefinite

PD_FLOOR_REL = 1e-12


def sym(m: ArrayLike) -> NDArray:
    """Return ``(m + m.T) / 2`` as a float array after checking it is square."""
    a = np.array(m, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    return (a + a.T) / 2.0


def strict_lower(free_entries: ArrayLike, n: int) -> NDArray:
    """Materialize an n x n strictly lower triangular matrix.

    ``free_entries`` holds the n(n-1)/2 strictly-lower entries in row-major
    order, i.e. (1,0), (2,0), (2,1), (3,0), ...
    """
    free = np.asarray(free_entries, dtype=float).ravel()
    rows, cols = np.tril_indices(n, -1)
    if free.size != rows.size:
        raise DimensionMismatch(f"order {n} needs {rows.size} free entries, got {free.size}")
    b = np.zeros((n, n))
    b[rows, cols] = free
    return b


def strict_lower_entries(b: ArrayLike) -> NDArray:
    """Inverse of :func:`strict_lower`; rejects non-zeros on or above the diagonal."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {b.shape}")
    if np.any(np.triu(b) != 0.0):
        raise DimensionMismatch("matrix is not strictly lower triangular")
    return b[np.tril_indices(b.shape[0], -1)]


def pd_floor(m: NDArray) -> float:
    """Smallest admissible Cholesky pivot for ``m`` (scale-invariant)."""
    return PD_FLOOR_REL * abs(np.trace(m)) / m.shape[0]


def cholesky(m: ArrayLike) -> NDArray:
    """Lower Cholesky factor, raising :class:`NotPositiveDefinite` on small pivots."""
    a = sym(m)
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Cholesky factorization failed") from exc
    pivots = np.diag(low) ** 2
    if pivots.min() <= pd_floor(a):
        raise NotPositiveDefinite(f"pivot {pivots.min():.3e} below floor {pd_floor(a):.3e}")
    return low


def chol_logdet2(m: ArrayLike) -> float:
    """log2 det(m) from the Cholesky diagonal."""
    return 2.0 * float(np.sum(np.log2(np.diag(cholesky(m)))))


def spd_inverse(m: ArrayLike) -> NDArray:
    low = cholesky(m)
    linv = np.linalg.solve(low, np.eye(low.shape[0]))
    return sym(linv.T @ linv)


def eigh(m: ArrayLike) -> tuple[NDArray, NDArray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    try:
        return np.linalg.eigh(sym(m))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure("symmetric eigensolver did not converge") from exc


def min_eig_psd_check(m: ArrayLike, tol: float = 0.0) -> bool:
    return bool(eigh(m)[0][0] >= -tol)


def schur_complement(m: ArrayLike, k: int) -> NDArray:
    """Complement of the trailing block D in ``[[A, C^T], [C, D]]`` with A of order k.

    Returns ``A - C^T D^{-1} C`` where C is the lower-left block.
    """
    a = sym(m)
    n = a.shape[0]
    if not 0 < k < n:
        raise DimensionMismatch(f"split {k} must lie strictly inside order {n}")
    low = cholesky(a[k:, k:])
    half = np.linalg.solve(low, a[k:, :k])  # L^{-1} C
    return sym(a[:k, :k] - half.T @ half)
