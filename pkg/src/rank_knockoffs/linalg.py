"""Dense symmetric linear algebra shared by the numerical modules.

Symmetric matrices are plain ``ndarray`` values passed through :func:`as_sym`,
which validates them and replaces ``M`` by ``(M + M.T) / 2``.
"""

import numpy as np
import scipy.linalg

from .errors import InvalidMatrix, NotPD, NotPSD

CLIP_RTOL = 1e-10


def as_sym(m):
    """Return a symmetrized float copy of a square finite matrix."""
    m = np.array(m, dtype=float, copy=True)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    return (m + m.T) / 2.0


def eigendecompose(m):
    """Eigenvalues in descending order and matching orthonormal eigenvectors (columns)."""
    m = as_sym(m)
    vals, vecs = np.linalg.eigh(m)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def sym_sqrt(m):
    """Symmetric PSD square root.

    Eigenvalues in ``[-clip_tol, 0)`` with ``clip_tol = 1e-10 * max(lambda_max, 0)``
    are treated as rounding noise and set to zero; anything more negative
    raises :class:`NotPSD`.
    """
    vals, vecs = eigendecompose(m)
    clip_tol = CLIP_RTOL * max(vals[0], 0.0)
    if vals[-1] < -clip_tol:
        raise NotPSD(
            f"matrix is not PSD: smallest eigenvalue {vals[-1]:.6g} < -{clip_tol:.3g}",
            eigenvalue=float(vals[-1]),
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    out = (vecs * root) @ vecs.T
    return (out + out.T) / 2.0


def cholesky(m):
    """Lower Cholesky factor; raises :class:`NotPD` when a pivot is not positive."""
    m = as_sym(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPD(f"matrix is not positive definite: {exc}") from None


def is_pd(m):
    try:
        cholesky(m)
    except NotPD:
        return False
    return True


def solve_spd(m, rhs):
    lower = cholesky(m)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != lower.shape[0]:
        raise InvalidMatrix(f"rhs has {rhs.shape[0]} rows, matrix has {lower.shape[0]}")
    return scipy.linalg.cho_solve((lower, True), rhs)


def spd_inverse(m):
    m = as_sym(m)
    out = solve_spd(m, np.eye(m.shape[0]))
    return (out + out.T) / 2.0


def lambda_max(m):
    return float(np.linalg.eigvalsh(as_sym(m))[-1])
