"""Small dense linear algebra for symmetric positive-definite systems.

The regression and GRS code only ever solves normal-equation style systems
(X'X, residual covariance, factor covariance), so a Cholesky factorization
with an explicit pivot check is all that is needed.
"""

import logging
import warnings

import numpy as np

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-12          # relative to the largest diagonal entry
CONDITION_WARN = 1e10


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot is non-positive (or numerically zero)."""

    def __init__(self, pivot_index, pivot_value):
        self.pivot_index = int(pivot_index)
        self.pivot_value = float(pivot_value)
        super().__init__(
            f"matrix is singular or not positive definite: "
            f"pivot {self.pivot_index} = {self.pivot_value:.3e}"
        )


class IllConditionedWarning(RuntimeWarning):
    pass


def cholesky(a):
    """Lower-triangular Cholesky factor ``L`` with ``a = L @ L.T``.

    Parameters
    ----------
    a : array_like, shape (n, n)
        Symmetric positive-definite matrix.

    Returns
    -------
    numpy.ndarray
        Lower-triangular factor.

    Raises
    ------
    ValueError
        If ``a`` is not square or not symmetric within ``SYMMETRY_TOL``
        (relative to its largest entry).
    SingularMatrixError
        If a pivot falls at or below ``PIVOT_TOL`` times the largest diagonal.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = np.max(np.abs(a)) if a.size else 0.0
    if n and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")

    diag_max = np.max(np.diag(a)) if n else 0.0
    threshold = PIVOT_TOL * diag_max if diag_max > 0 else 0.0
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > threshold:
            raise SingularMatrixError(j, pivot)
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _forward(L, b):
    y = np.empty_like(b)
    for i in range(L.shape[0]):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    return y


def _backward(L, y):
    # solves L.T x = y
    n = L.shape[0]
    x = np.empty_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def solve_spd(a, b):
    """Solve ``a x = b`` for symmetric positive-definite ``a``.

    ``b`` may be a vector or a matrix whose columns are separate right-hand
    sides; the result has the same shape as ``b``.
    """
    L = cholesky(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.shape[0]:
        raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {L.shape[0]}")
    diag = np.diag(L)
    if diag.size and (diag.max() / diag.min()) ** 2 > CONDITION_WARN:
        msg = f"condition number estimate {(diag.max() / diag.min()) ** 2:.2e} exceeds {CONDITION_WARN:.0e}"
        logger.warning(msg)
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
    return _backward(L, _forward(L, b))


def inverse_spd(a):
    """Inverse of an SPD matrix through its Cholesky factor."""
    a = np.asarray(a, dtype=float)
    return solve_spd(a, np.eye(a.shape[0]))
