"""Gaussian model-X knockoffs built from a precision matrix.

For ``x ~ N(0, Omega^-1)`` the knockoff copy is drawn from

    x_tilde | x ~ N(C x, B^2),   C = I - diag(s) Omega,
                                 B^2 = 2 diag(s) - diag(s) Omega diag(s),

which makes ``(x, x_tilde)`` jointly Gaussian with covariance
``[[Sigma, Sigma - diag(s)], [Sigma - diag(s), Sigma]]``.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionError, NotPD, NotPSD

log = logging.getLogger(__name__)

SHRINK_FACTOR = 0.95
MAX_SHRINKS = 20


class Provenance(enum.Enum):
    ORACLE = "oracle"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class PrecisionModel:
    omega: np.ndarray
    provenance: Provenance = Provenance.ESTIMATED

    def __post_init__(self):
        omega = linalg.as_sym(self.omega)
        linalg.cholesky(omega)
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self):
        return self.omega.shape[0]

    def covariance(self):
        return linalg.spd_inverse(self.omega)


@dataclass(frozen=True)
class KnockoffTransform:
    s: np.ndarray
    c_matrix: np.ndarray
    b_matrix: np.ndarray

    @property
    def dim(self):
        return self.s.shape[0]


def select_s(model):
    """Equi-value rule: every ``s_j = 1 / lambda_max(Omega)``."""
    top = linalg.lambda_max(model.omega)
    if top <= 0:
        raise NotPD(f"largest eigenvalue of the precision matrix is {top}")
    return np.full(model.dim, 1.0 / top)


def _as_s(s, p):
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != p:
        raise DimensionError(f"s has length {s.shape[0]}, precision matrix is {p}x{p}")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("s must be finite and nonnegative")
    return s


def build_transform(model, s):
    p = model.dim
    s = _as_s(s, p)
    ds = np.diag(s)
    b_squared = 2.0 * ds - ds @ model.omega @ ds
    c_matrix = np.eye(p) - s[:, None] * model.omega
    b_matrix = linalg.sym_sqrt(b_squared)
    return KnockoffTransform(s=s, c_matrix=c_matrix, b_matrix=b_matrix)


def equi_transform(model):
    """Build the transform for the equi-value ``s``, shrinking it if B^2 is indefinite."""
    s = select_s(model)
    for attempt in range(MAX_SHRINKS + 1):
        try:
            return build_transform(model, s)
        except NotPSD:
            if attempt == MAX_SHRINKS:
                raise
            s = s * SHRINK_FACTOR
            log.debug("B^2 indefinite; shrinking s to %.6g", s[0])


def sample_knockoffs(x_rows, transform, rng):
    """Rows ``C x_i + B z_i`` with ``z_i ~ N(0, I)`` drawn from ``rng``."""
    x_rows = np.asarray(x_rows, dtype=float)
    if x_rows.ndim != 2 or x_rows.shape[1] != transform.dim:
        raise DimensionError(
            f"design has shape {x_rows.shape}, transform expects {transform.dim} columns"
        )
    z = rng.standard_normal(x_rows.shape)
    return x_rows @ transform.c_matrix.T + z @ transform.b_matrix


def joint_covariance(model, s):
    sigma = model.covariance()
    s = _as_s(s, model.dim)
    off = sigma - np.diag(s)
    return linalg.as_sym(np.block([[sigma, off], [off, sigma]]))
