"""Precision matrix estimation by nodewise Lasso regression, plus the oracle pass-through.

Each column ``x_j`` is regressed on the remaining columns with a CV-tuned
Lasso. The residual variance gives ``Omega_jj = 1 / sigma_j^2`` and the
coefficients give ``Omega_jk = -beta_jk * Omega_jj``; the two estimates of
each off-diagonal entry are averaged and the result is nudged to be positive
definite if needed.

All p regressions share one design, so a single Gram matrix per CV fold serves
every column: column ``j`` is the response (``corr = gram[:, j]``) and is
excluded from its own regression through the support mask.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import lasso, linalg
from ._kernels import cv_lasso_errors, lasso_path_gram
from .errors import DimensionError, InvalidData, NotPD
from .knockoffs import PrecisionModel, Provenance

log = logging.getLogger(__name__)

REPAIR_START = 1e-8
REPAIR_CAP = 1e-2
SPARSITY_TOL = 1e-8
MIN_ROWS = 20


@dataclass(frozen=True)
class PrecisionEstimateReport:
    model: PrecisionModel
    spectral_error: float | None
    sparsity_per_row: np.ndarray
    repair_shift: float = 0.0
    lambdas: np.ndarray | None = None


def spectral_error(omega_hat, omega0):
    return float(np.linalg.norm(np.asarray(omega_hat) - np.asarray(omega0), 2))


def _sparsity(omega):
    return (np.abs(omega) >= SPARSITY_TOL).sum(axis=1).astype(int)


def _standardize(x, mean, scale):
    return np.ascontiguousarray((x - mean) / scale)


def repair_spd(omega):
    """Add ``tau * I`` (tau doubling from 1e-8 up to 1e-2) until Cholesky succeeds."""
    if linalg.is_pd(omega):
        return omega, 0.0
    tau = REPAIR_START
    eye = np.eye(omega.shape[0])
    while tau <= REPAIR_CAP:
        if linalg.is_pd(omega + tau * eye):
            log.info("precision estimate repaired with shift %.3g", tau)
            return omega + tau * eye, tau
        tau *= 2
    raise NotPD(f"precision estimate not positive definite after a {REPAIR_CAP:g} diagonal shift")


def estimate_precision_nodewise(x_rows, folds=lasso.DEFAULT_FOLDS, rng=None,
                                n_lambdas=lasso.N_LAMBDAS, ratio=lasso.LAMBDA_RATIO,
                                omega_true=None):
    x = np.asarray(x_rows, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected an n x p matrix, got shape {x.shape}")
    n, p = x.shape
    if n < MIN_ROWS:
        raise InvalidData(f"need at least {MIN_ROWS} rows, got {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidData("design has non-finite values")
    mean = x.mean(axis=0)
    scale = np.sqrt(((x - mean) ** 2).mean(axis=0))
    flat = np.flatnonzero(scale <= 1e-12 * np.maximum(1.0, np.abs(mean)))
    if flat.size:
        raise InvalidData(f"column {flat[0]} has zero variance")

    if p == 1:
        omega = np.array([[1.0 / scale[0] ** 2]])
        best = np.zeros(1)
    else:
        rng = np.random.default_rng(rng)
        ids = lasso.fold_ids(n, folds, rng)
        z = _standardize(x, mean, scale)
        gram = np.ascontiguousarray(z.T @ z)
        tops = np.abs(gram - np.diag(np.diag(gram))).max(axis=0) / n
        tops = np.where(tops > 0, tops, 1.0)
        unit = np.geomspace(1.0, ratio, n_lambdas)

        # every column's regression reuses the same per-fold Gram matrices
        grams = np.zeros((folds, p, p))
        n_train = np.zeros(folds)
        x_test, offsets = [], [0]
        for k in range(folds):
            test = ids == k
            train = x[~test]
            m_k = train.mean(axis=0)
            s_k = np.sqrt(((train - m_k) ** 2).mean(axis=0))
            s_k = np.where(s_k > 0, s_k, 1.0)
            z_tr = _standardize(train, m_k, s_k)
            grams[k] = z_tr.T @ z_tr
            n_train[k] = z_tr.shape[0]
            x_test.append(_standardize(x[test], m_k, s_k))
            offsets.append(offsets[-1] + int(test.sum()))
        x_test = np.ascontiguousarray(np.vstack(x_test))
        offsets = np.asarray(offsets, dtype=np.int64)

        coef_std = np.zeros((p, p))  # row j: regression of column j on the others
        best = np.zeros(p)
        for j in range(p):
            allowed = np.ones(p, dtype=np.bool_)
            allowed[j] = False
            grid = tops[j] * unit
            corrs = np.ascontiguousarray(grams[:, :, j])
            errors, _ = cv_lasso_errors(
                grams, corrs, n_train, x_test, np.ascontiguousarray(x_test[:, j]), offsets,
                grid, allowed, lasso.TOL, lasso.MAX_SWEEPS, lasso.CV_PATIENCE,
            )
            stop = int(np.argmin(errors)) + 1
            best[j] = grid[stop - 1]
            path, _ = lasso_path_gram(
                gram, np.ascontiguousarray(gram[:, j]), float(n), float(gram[j, j]),
                grid[:stop], allowed, lasso.TOL, lasso.MAX_SWEEPS, lasso.SATURATION,
            )
            coef_std[j] = path[-1]

        # back to the raw scale: beta_jk = b_jk * sd_j / sd_k
        coef = coef_std * scale[:, None] / scale[None, :]
        xc = x - mean
        resid = xc - xc @ coef.T
        df = np.count_nonzero(coef, axis=1)
        sigma2 = (resid**2).sum(axis=0) / np.maximum(n - df, 1)
        if np.any(sigma2 <= 0):
            raise InvalidData("a column is perfectly explained by the others")
        diag = 1.0 / sigma2
        omega = -coef * diag[:, None]
        omega[np.diag_indices(p)] = diag
        omega = (omega + omega.T) / 2.0 + 0.0  # + 0.0 turns -0.0 into 0.0

    omega, shift = repair_spd(omega)
    model = PrecisionModel(omega, Provenance.ESTIMATED)
    err = None if omega_true is None else spectral_error(model.omega, omega_true)
    return PrecisionEstimateReport(model, err, _sparsity(model.omega), shift, best)


def oracle_precision(omega0):
    model = PrecisionModel(omega0, Provenance.ORACLE)
    return PrecisionEstimateReport(model, 0.0, _sparsity(model.omega))
