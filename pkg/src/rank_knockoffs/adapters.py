"""Model-family front ends: each turns raw data into a Lasso-type fit.

* linear: Lasso coefficient difference on the augmented design.
* partially linear ``y = X b + g(U) + e``: profile ``y`` and ``X`` on ``U`` with a
  local-linear Epanechnikov smoother (bandwidth by GCV), then as linear.
* single index ``y = g(X b) + e``: Lasso-SIR surrogate response, then as linear.
* additive ``y = sum_j g_j(X_j) + e``: group Lasso over per-column orthonormal
  polynomial bases; statistics compare squared empirical norms of the fitted
  component functions.
"""

from dataclasses import dataclass

import numpy as np

from . import lasso, linalg
from ._kernels import group_cd_gram, group_path_gram
from .errors import DegenerateSIR, DimensionError, InvalidData, SmoothingError
from .filter import KnockoffStatVector, lcd_statistics

BANDWIDTH_GRID = np.geomspace(0.02, 0.5, 20)
DEFAULT_SLICES = 5
DEFAULT_DEGREE = 3
MIN_SMOOTH_ROWS = 20


# ---------------------------------------------------------------------------
# local-linear profiling


@dataclass(frozen=True)
class ProfiledData:
    y_profiled: np.ndarray
    x_profiled: np.ndarray
    bandwidth: float
    x_bandwidths: np.ndarray


def epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return 0.75 * np.clip(1.0 - u**2, 0.0, None)


def local_linear_smoother(u, bandwidth):
    """Smoother matrix ``S`` with ``(S @ v)[i]`` the local-linear fit of ``v`` at ``u[i]``.

    Returns ``None`` when some local fit is singular (fewer than two distinct
    design points inside the kernel window).
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    d = u[None, :] - u[:, None]  # row i: offsets from the evaluation point u[i]
    w = epanechnikov(d / bandwidth)
    s0 = w.sum(axis=1)
    s1 = (w * d).sum(axis=1)
    s2 = (w * d**2).sum(axis=1)
    det = s0 * s2 - s1**2
    if np.any(det <= 1e-12 * np.maximum(s0 * s2, 1e-300)):
        return None
    return w * (s2[:, None] - d * s1[:, None]) / det[:, None]


def gcv_scores(u, values, bandwidths=BANDWIDTH_GRID):
    """GCV score ``n * RSS / (n - tr S)^2`` per (bandwidth, column); singular -> inf."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    scores = np.full((len(bandwidths), values.shape[1]), np.inf)
    for i, h in enumerate(bandwidths):
        smoother = local_linear_smoother(u, h)
        if smoother is None:
            continue
        dof = n - np.trace(smoother)
        if dof <= 0:
            continue
        rss = np.sum((values - smoother @ values) ** 2, axis=0)
        scores[i] = n * rss / dof**2
    return scores


def profile_partially_linear(y, x_rows, u, bandwidths=BANDWIDTH_GRID):
    """Subtract local-linear estimates of ``E[y | U]`` and ``E[X_j | U]`` (per-column GCV)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x_rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    u = np.asarray(u, dtype=float).reshape(-1)
    if not (y.shape[0] == x.shape[0] == u.shape[0]):
        raise DimensionError("y, X and U must have the same number of rows")
    if u.shape[0] < MIN_SMOOTH_ROWS:
        raise SmoothingError(f"need at least {MIN_SMOOTH_ROWS} rows to smooth, got {u.shape[0]}")
    if not np.all(np.isfinite(u)):
        raise InvalidData("U has non-finite values")
    values = np.column_stack([y, x])
    scores = gcv_scores(u, values, bandwidths)
    if not np.any(np.isfinite(scores)):
        raise SmoothingError("every bandwidth on the grid gives a singular local fit")
    choice = np.argmin(scores, axis=0)
    fitted = np.empty_like(values)
    for i in np.unique(choice):
        cols = choice == i
        fitted[:, cols] = local_linear_smoother(u, bandwidths[i]) @ values[:, cols]
    resid = values - fitted
    chosen = np.asarray(bandwidths)[choice]
    return ProfiledData(resid[:, 0], resid[:, 1:], float(chosen[0]), chosen[1:])


# ---------------------------------------------------------------------------
# Lasso-SIR


@dataclass(frozen=True)
class SirResponse:
    y_tilde: np.ndarray
    rows: np.ndarray  # original row indices, sorted by y; y_tilde[i] belongs to rows[i]
    lambda1: float
    eta1: np.ndarray
    slices: int
    slice_size: int


def slice_matrix(h_slices, slice_size):
    """``I_H kron 1_c``: an (H*c) x H indicator of slice membership."""
    return np.kron(np.eye(h_slices), np.ones((slice_size, 1)))


def lasso_sir_response(y, x_rows, h_slices=DEFAULT_SLICES):
    y = np.asarray(y, dtype=float).reshape(-1)
    x = np.asarray(x_rows, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise DimensionError(f"X has {x.shape[0]} rows, y has {y.shape[0]}")
    if h_slices < 2:
        raise ValueError(f"need at least 2 slices, got {h_slices}")
    c = y.shape[0] // h_slices
    if c < 1:
        raise ValueError(f"{y.shape[0]} rows cannot fill {h_slices} slices")
    m = c * h_slices
    rows = np.argsort(y, kind="stable")[:m]
    xs = x[rows] - x[rows].mean(axis=0)
    big_m = slice_matrix(h_slices, c)
    slice_sums = big_m.T @ xs  # M^T X
    lam_h = linalg.as_sym(slice_sums.T @ slice_sums / (m * c))
    vals, vecs = linalg.eigendecompose(lam_h)
    lambda1 = float(vals[0])
    if lambda1 <= 1e-12:
        raise DegenerateSIR(f"top eigenvalue of the slice covariance is {lambda1:.3g}")
    eta1 = vecs[:, 0]
    if eta1[np.argmax(np.abs(eta1))] < 0:
        eta1 = -eta1
    y_tilde = big_m @ (slice_sums @ eta1) / (c * lambda1)
    return SirResponse(y_tilde, rows, lambda1, eta1, h_slices, c)


# ---------------------------------------------------------------------------
# LCD front ends


def _check_pair(x, knockoffs, active_mask):
    x = np.asarray(x, dtype=float)
    knockoffs = np.asarray(knockoffs, dtype=float)
    if knockoffs.shape != x.shape:
        raise DimensionError(f"knockoffs have shape {knockoffs.shape}, design has {x.shape}")
    p = x.shape[1]
    mask = np.ones(p, dtype=bool) if active_mask is None else np.asarray(active_mask, dtype=bool)
    if mask.shape != (p,):
        raise DimensionError(f"active mask has shape {mask.shape}, expected ({p},)")
    return x, knockoffs, mask


def _augmented_lcd(design, y, mask, lam, rng):
    p = mask.size
    allowed = np.concatenate([mask, mask])
    if not allowed.any():
        return KnockoffStatVector(np.zeros(p), mask)
    if lam is None:
        sol = lasso.fit_lasso_cv(design, y, allowed_support=allowed, rng=rng)
    else:
        sol = lasso.fit_lasso(lasso.LassoProblem(design, y, lam, allowed))
    return lcd_statistics(sol.coefficients, mask)


def linear_lcd_stats(x, knockoffs, y, active_mask=None, lam=None, rng=None):
    """LCD statistics from the support-restricted Lasso on ``[X, X_tilde]``.

    ``lam=None`` tunes lambda by 5-fold CV using ``rng`` for the folds.
    """
    x, knockoffs, mask = _check_pair(x, knockoffs, active_mask)
    return _augmented_lcd(np.hstack([x, knockoffs]), y, mask, lam, rng)


def partially_linear_stats(x, knockoffs, y, u, active_mask=None, lam=None, rng=None):
    x, knockoffs, mask = _check_pair(x, knockoffs, active_mask)
    p = mask.size
    cols = np.flatnonzero(mask)
    if cols.size == 0:
        return KnockoffStatVector(np.zeros(p), mask)
    prof = profile_partially_linear(y, np.hstack([x[:, cols], knockoffs[:, cols]]), u)
    design = np.zeros((x.shape[0], 2 * p))
    design[:, cols] = prof.x_profiled[:, : cols.size]
    design[:, p + cols] = prof.x_profiled[:, cols.size :]
    return _augmented_lcd(design, prof.y_profiled, mask, lam, rng)


def single_index_stats(x, knockoffs, y, active_mask=None, h_slices=DEFAULT_SLICES, lam=None,
                       rng=None):
    x, knockoffs, mask = _check_pair(x, knockoffs, active_mask)
    p = mask.size
    cols = np.flatnonzero(mask)
    if cols.size == 0:
        return KnockoffStatVector(np.zeros(p), mask)
    sir = lasso_sir_response(y, np.hstack([x[:, cols], knockoffs[:, cols]]), h_slices)
    design = np.hstack([x, knockoffs])[sir.rows]
    return _augmented_lcd(design, sir.y_tilde, mask, lam, rng)


# ---------------------------------------------------------------------------
# additive model


@dataclass(frozen=True)
class AdditiveFit:
    per_feature_norms: np.ndarray  # squared empirical norm of each fitted component
    basis_degree: int
    coefficients: np.ndarray  # (n_columns, degree)
    lam: float


def polynomial_basis(column, degree=DEFAULT_DEGREE):
    """Centered polynomial basis of ``column`` orthonormal under ``<a, b> = mean(a * b)``.

    Numerically redundant directions are returned as zero columns so every
    feature keeps exactly ``degree`` basis columns.
    """
    column = np.asarray(column, dtype=float).reshape(-1)
    n = column.shape[0]
    sd = column.std()
    if sd <= 0:
        raise InvalidData("cannot expand a constant column")
    z = (column - column.mean()) / sd
    raw = np.column_stack([z**k for k in range(1, degree + 1)])
    raw -= raw.mean(axis=0)
    u, svals, _ = np.linalg.svd(raw, full_matrices=False)
    keep = svals > 1e-8 * svals[0]
    return u * keep * np.sqrt(n)


def component_norm(values):
    """Squared empirical norm: mean of squares over the observed points."""
    values = np.asarray(values, dtype=float)
    return float(np.mean(values**2))


def _group_layout(n_columns, degree):
    starts = np.arange(0, (n_columns + 1) * degree, degree, dtype=np.int64)
    return starts


def _lipschitz(gram, starts, n):
    out = np.zeros(starts.size - 1)
    for g in range(out.size):
        block = gram[starts[g]:starts[g + 1], starts[g]:starts[g + 1]]
        out[g] = max(np.linalg.eigvalsh(block)[-1], 0.0) / n
    return out


def _centered_gram(b, y):
    b_mean = b.mean(axis=0)
    y_mean = y.mean()
    bc = np.ascontiguousarray(b - b_mean)
    yc = y - y_mean
    return bc, yc, b_mean, y_mean


def _group_lambda_max(gram_corr, starts, n):
    return max(
        np.linalg.norm(gram_corr[starts[g]:starts[g + 1]]) for g in range(starts.size - 1)
    ) / n


def cross_validate_group(bases, y, degree, folds=lasso.DEFAULT_FOLDS, grid=None, rng=None,
                         patience=lasso.CV_PATIENCE):
    """K-fold CV for the group Lasso over stacked bases; returns (best_lambda, grid, errors)."""
    n, q = bases.shape
    starts = _group_layout(q // degree, degree)
    bc, yc, _, _ = _centered_gram(bases, y)
    if grid is None:
        top = _group_lambda_max(bc.T @ yc, starts, n)
        top = top if top > 0 else 1.0
        grid = np.geomspace(top, top * lasso.LAMBDA_RATIO, lasso.N_LAMBDAS)
    rng = np.random.default_rng(rng)
    ids = lasso.fold_ids(n, folds, rng)
    fold_state = []
    for k in range(folds):
        test = ids == k
        btr, ytr, bm, ym = _centered_gram(bases[~test], y[~test])
        gram = np.ascontiguousarray(btr.T @ btr)
        corr = np.ascontiguousarray(btr.T @ ytr)
        n_tr = float(btr.shape[0])
        fold_state.append((gram, corr, n_tr, _lipschitz(gram, starts, n_tr),
                           bases[test] - bm, y[test] - ym, np.zeros(q)))
    allowed = np.ones(starts.size - 1, dtype=np.bool_)
    errors = np.full(grid.size, np.inf)
    best, best_i = np.inf, 0
    for i, lam in enumerate(grid):
        total = 0.0
        for gram, corr, n_tr, lip, bte, yte, beta in fold_state:
            group_cd_gram(gram, corr, n_tr, lam, beta, starts, lip, allowed,
                          lasso.TOL, lasso.MAX_SWEEPS)
            total += float(np.sum((yte - bte @ beta) ** 2))
        errors[i] = total / n
        if errors[i] < best:
            best, best_i = errors[i], i
        elif patience > 0 and i - best_i >= patience:
            break
    return float(grid[best_i]), grid, errors


def fit_additive(y, columns, degree=DEFAULT_DEGREE, lam=None, rng=None):
    """Group-Lasso additive fit with one polynomial group per column of ``columns``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    columns = np.asarray(columns, dtype=float)
    if columns.ndim != 2 or columns.shape[0] != y.shape[0]:
        raise DimensionError(f"columns have shape {columns.shape}, y has {y.shape[0]} rows")
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    n, k = columns.shape
    if k == 0:
        return AdditiveFit(np.zeros(0), degree, np.zeros((0, degree)), float("nan"))
    bases = np.hstack([polynomial_basis(columns[:, j], degree) for j in range(k)])
    starts = _group_layout(k, degree)
    bc, yc, _, _ = _centered_gram(bases, y)
    gram = np.ascontiguousarray(bc.T @ bc)
    corr = np.ascontiguousarray(bc.T @ yc)
    if lam is None:
        lam, grid, _ = cross_validate_group(bases, y, degree, rng=rng)
        path = grid[: int(np.flatnonzero(grid == lam)[0]) + 1]
    else:
        path = np.array([float(lam)])
    coefs, _ = group_path_gram(
        gram, corr, float(n), float(yc @ yc), path, starts, _lipschitz(gram, starts, float(n)),
        np.ones(k, dtype=np.bool_), lasso.TOL, lasso.MAX_SWEEPS, lasso.SATURATION,
    )
    beta = coefs[-1].reshape(k, degree)
    norms = np.array([
        component_norm(bases[:, starts[j]:starts[j + 1]] @ beta[j]) for j in range(k)
    ])
    return AdditiveFit(norms, degree, beta, float(lam))


def additive_stats(x, knockoffs, y, active_mask=None, degree=DEFAULT_DEGREE, lam=None, rng=None):
    """``W_j = |g_j|^2 - |g_{p+j}|^2`` on the active features, 0 elsewhere."""
    x, knockoffs, mask = _check_pair(x, knockoffs, active_mask)
    p = mask.size
    cols = np.flatnonzero(mask)
    w = np.zeros(p)
    if cols.size:
        fit = fit_additive(y, np.hstack([x[:, cols], knockoffs[:, cols]]), degree, lam, rng)
        w[cols] = fit.per_feature_norms[: cols.size] - fit.per_feature_norms[cols.size :]
    return KnockoffStatVector(w, mask)
