"""Coordinate-descent Lasso with support restriction and K-fold cross-validation.

Two objective scalings are supported::

    HALF_OVER_N:  (2n)^-1 |y - X b|^2 + lam |b|_1
    OVER_N:        n^-1   |y - X b|^2 + lam |b|_1

They have the same minimiser when ``lam_over_n == 2 * lam_half_over_n``, and
the solver handles both through that identity.

With ``standardize=True`` (the default) the response is centered, the columns
are centered and scaled to unit variance, the objective above is solved in
those coordinates, and coefficients are mapped back to the raw scale. With
``standardize=False`` the objective is solved literally on the given data.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from ._kernels import cv_lasso_errors, lasso_cd_gram, lasso_path_gram
from .errors import DimensionError, InvalidData, InvalidFolds

TOL = 1e-7
MAX_SWEEPS = 10_000
N_LAMBDAS = 100
LAMBDA_RATIO = 1e-3
DEFAULT_FOLDS = 5
# Path early stop: once a fit explains this fraction of the (centered) response
# variance, smaller lambdas reuse that solution.
SATURATION = 0.999
# CV early stop: grid points scanned past the last improvement in held-out error.
CV_PATIENCE = 10


class Scale(enum.Enum):
    HALF_OVER_N = "half_over_n"
    OVER_N = "over_n"


def _half_lambda(lam, scale):
    return lam / 2.0 if scale is Scale.OVER_N else lam


@dataclass(frozen=True)
class LassoProblem:
    design: np.ndarray
    response: np.ndarray
    lam: float
    allowed_support: np.ndarray | None = None
    objective_scale: Scale = Scale.HALF_OVER_N
    standardize: bool = True

    def __post_init__(self):
        x = np.asarray(self.design, dtype=float)
        y = np.asarray(self.response, dtype=float).reshape(-1)
        if x.ndim != 2:
            raise DimensionError(f"design must be 2-d, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise DimensionError(f"design has {x.shape[0]} rows, response has {y.shape[0]}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidData("design or response has non-finite values")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        object.__setattr__(self, "design", x)
        object.__setattr__(self, "response", y)
        object.__setattr__(
            self, "allowed_support", support_mask(self.allowed_support, x.shape[1])
        )

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def q(self):
        return self.design.shape[1]


@dataclass(frozen=True)
class LassoSolution:
    coefficients: np.ndarray
    lam: float
    n_iterations: int
    converged: bool
    intercept: float = 0.0
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def predict(self, design):
        return np.asarray(design, dtype=float) @ self.coefficients + self.intercept


def support_mask(allowed, q):
    """Normalise an index set / boolean mask / None into a boolean mask of length q."""
    if allowed is None:
        return np.ones(q, dtype=bool)
    allowed = np.asarray(allowed)
    if allowed.dtype == bool:
        if allowed.shape != (q,):
            raise DimensionError(f"support mask has shape {allowed.shape}, expected ({q},)")
        return allowed.copy()
    mask = np.zeros(q, dtype=bool)
    idx = allowed.astype(int).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= q):
        raise DimensionError(f"support index out of range for {q} columns")
    mask[idx] = True
    return mask


@dataclass
class _Prepared:
    x: np.ndarray  # working design, allowed columns only
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float


def _prepare(x, y, standardize):
    if standardize:
        x_mean = x.mean(axis=0)
        xc = x - x_mean
        x_scale = np.sqrt((xc**2).mean(axis=0))
        flat = x_scale <= 1e-12 * max(1.0, float(np.abs(x_mean).max(initial=0.0)))
        x_scale = np.where(flat, 1.0, x_scale)
        xs = xc / x_scale
        xs[:, flat] = 0.0
        y_mean = float(y.mean())
        return _Prepared(xs, y - y_mean, x_mean, x_scale, y_mean)
    q = x.shape[1]
    return _Prepared(x, y, np.zeros(q), np.ones(q), 0.0)


def _gram(prep):
    x = np.ascontiguousarray(prep.x)
    return np.ascontiguousarray(x.T @ x), np.ascontiguousarray(x.T @ prep.y)


def _duplicate_groups(x):
    """Groups (length >= 2) of bit-identical columns."""
    seen = {}
    for j in range(x.shape[1]):
        seen.setdefault(np.ascontiguousarray(x[:, j]).tobytes(), []).append(j)
    return [g for g in seen.values() if len(g) > 1]


def _split_duplicates(beta, groups):
    # Bit-identical columns are interchangeable in the objective; spreading the
    # combined coefficient evenly is also optimal and treats them symmetrically.
    for g in groups:
        beta[g] = beta[g].sum() / len(g)
    return beta


def _to_raw(beta_std, prep, idx, q):
    coef = np.zeros(q)
    coef[idx] = beta_std / prep.x_scale
    intercept = prep.y_mean - float(prep.x_mean @ coef[idx])
    return coef, intercept


def fit_lasso(problem, tol=TOL, max_sweeps=MAX_SWEEPS):
    idx = np.flatnonzero(problem.allowed_support)
    prep = _prepare(problem.design[:, idx], problem.response, problem.standardize)
    gram, corr = _gram(prep)
    beta = np.zeros(idx.size)
    sweeps, converged = lasso_cd_gram(
        gram, corr, float(problem.n), _half_lambda(problem.lam, problem.objective_scale),
        beta, np.ones(idx.size, dtype=np.bool_), tol, max_sweeps,
    )
    beta = _split_duplicates(beta, _duplicate_groups(prep.x))
    coef, intercept = _to_raw(beta, prep, idx, problem.q)
    return LassoSolution(coef, problem.lam, int(sweeps), bool(converged), intercept)


def standardized_coefficients(problem, solution):
    """Coefficients in the coordinates the solver actually optimised."""
    prep = _prepare(problem.design, problem.response, problem.standardize)
    return solution.coefficients * prep.x_scale


def objective(problem, coefficients):
    """Value of the declared objective (in standardized coordinates when applicable)."""
    prep = _prepare(problem.design, problem.response, problem.standardize)
    b = np.asarray(coefficients, dtype=float) * prep.x_scale
    rss = float(np.sum((prep.y - prep.x @ b) ** 2))
    lam = _half_lambda(problem.lam, problem.objective_scale)
    value = rss / (2 * problem.n) + lam * float(np.abs(b).sum())
    return 2 * value if problem.objective_scale is Scale.OVER_N else value


def kkt_residual(problem, solution):
    """Largest violation of the Lasso optimality conditions over allowed coordinates.

    Active ``j``: ``|grad_j + lam * sign(b_j)|``; inactive ``j``:
    ``max(|grad_j| - lam, 0)``; on the HALF_OVER_N scale. Coordinates outside
    the allowed support must be exactly zero, otherwise the result is ``inf``.
    """
    mask = problem.allowed_support
    if np.any(solution.coefficients[~mask] != 0.0):
        return np.inf
    prep = _prepare(problem.design, problem.response, problem.standardize)
    b = solution.coefficients * prep.x_scale
    grad = -(prep.x.T @ (prep.y - prep.x @ b)) / problem.n
    lam = _half_lambda(problem.lam, problem.objective_scale)
    active = b != 0.0
    viol = np.where(active, np.abs(grad + lam * np.sign(b)), np.maximum(np.abs(grad) - lam, 0.0))
    # columns with zero variance after standardization carry no signal
    viol = np.where(np.sum(prep.x**2, axis=0) > 0, viol, 0.0)
    return float(viol[mask].max(initial=0.0))


def lambda_max(design, response, allowed_support=None, scale=Scale.HALF_OVER_N, standardize=True):
    x = np.asarray(design, dtype=float)
    mask = support_mask(allowed_support, x.shape[1])
    prep = _prepare(x[:, mask], np.asarray(response, dtype=float).reshape(-1), standardize)
    top = float(np.abs(prep.x.T @ prep.y).max(initial=0.0)) / x.shape[0]
    return 2 * top if scale is Scale.OVER_N else top


def lambda_grid(design, response, allowed_support=None, scale=Scale.HALF_OVER_N,
                standardize=True, n_lambdas=N_LAMBDAS, ratio=LAMBDA_RATIO):
    """Log-spaced grid from ``lambda_max`` down to ``ratio * lambda_max`` (descending)."""
    top = lambda_max(design, response, allowed_support, scale, standardize)
    if top <= 0:
        top = 1.0
    return np.geomspace(top, top * ratio, n_lambdas)


def fold_ids(n, folds, rng):
    if folds < 2:
        raise InvalidFolds(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise InvalidFolds(f"{n} rows cannot be split into {folds} folds")
    ids = np.empty(n, dtype=int)
    for k, part in enumerate(np.array_split(rng.permutation(n), folds)):
        ids[part] = k
    return ids


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) > 0):
        raise ValueError("lambda grid must be nonempty, positive and descending")
    return grid


def _path(prep, grid_half, tol, max_sweeps, saturation=SATURATION):
    gram, corr = _gram(prep)
    allowed = np.ones(gram.shape[0], dtype=np.bool_)
    yy = float(prep.y @ prep.y)
    return lasso_path_gram(
        gram, corr, float(prep.x.shape[0]), yy, grid_half, allowed, tol, max_sweeps, saturation
    )


def _fold_problem(x, y, ids, folds, standardize):
    """Stack per-fold Gram matrices and standardized held-out rows for the CV kernel."""
    q = x.shape[1]
    grams = np.zeros((folds, q, q))
    corrs = np.zeros((folds, q))
    n_train = np.zeros(folds)
    x_test, y_test, offsets = [], [], [0]
    for k in range(folds):
        test = ids == k
        prep = _prepare(x[~test], y[~test], standardize)
        grams[k], corrs[k] = _gram(prep)
        n_train[k] = prep.x.shape[0]
        xt = (x[test] - prep.x_mean) / prep.x_scale
        xt[:, (prep.x**2).sum(axis=0) == 0] = 0.0
        x_test.append(xt)
        y_test.append(y[test] - prep.y_mean)
        offsets.append(offsets[-1] + int(test.sum()))
    return (grams, corrs, n_train, np.ascontiguousarray(np.vstack(x_test)),
            np.concatenate(y_test), np.asarray(offsets, dtype=np.int64))


def cross_validate_lambda(design, response, folds=DEFAULT_FOLDS, grid=None, allowed_support=None,
                          rng=None, scale=Scale.HALF_OVER_N, standardize=True,
                          tol=TOL, max_sweeps=MAX_SWEEPS, patience=CV_PATIENCE):
    """Pick lambda from ``grid`` by K-fold held-out squared error.

    Returns ``(best_lambda, cv_curve)`` where ``cv_curve`` is a list of
    ``(lambda, mean_error)``; grid points past the early stop carry ``inf``.
    Exact ties go to the larger lambda.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionError(f"design has shape {x.shape}, response has {y.shape[0]} rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidData("design or response has non-finite values")
    mask = support_mask(allowed_support, x.shape[1])
    if grid is None:
        grid = lambda_grid(x, y, mask, scale, standardize)
    grid = _check_grid(grid)
    rng = np.random.default_rng(rng)
    ids = fold_ids(x.shape[0], folds, rng)
    if grid.size == 1:
        return float(grid[0]), [(float(grid[0]), float("nan"))]
    grams, corrs, n_train, x_test, y_test, offsets = _fold_problem(
        x[:, mask], y, ids, folds, standardize
    )
    grid_half = np.array([_half_lambda(g, scale) for g in grid])
    errors, _ = cv_lasso_errors(
        grams, corrs, n_train, x_test, y_test, offsets, grid_half,
        np.ones(grams.shape[1], dtype=np.bool_), tol, max_sweeps, patience,
    )
    mean_err = errors / x.shape[0]
    best = int(np.argmin(mean_err))
    return float(grid[best]), [(float(g), float(e)) for g, e in zip(grid, mean_err)]


def fit_lasso_cv(design, response, folds=DEFAULT_FOLDS, allowed_support=None, rng=None,
                 scale=Scale.HALF_OVER_N, standardize=True, grid=None):
    """Cross-validate lambda, then refit on all rows along the same warm-started path."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float).reshape(-1)
    mask = support_mask(allowed_support, x.shape[1])
    if grid is None:
        grid = lambda_grid(x, y, mask, scale, standardize)
    grid = _check_grid(grid)
    best, curve = cross_validate_lambda(x, y, folds, grid, mask, rng, scale, standardize)
    stop = int(np.flatnonzero(grid == best)[0]) + 1
    idx = np.flatnonzero(mask)
    prep = _prepare(x[:, idx], y, standardize)
    grid_half = np.array([_half_lambda(g, scale) for g in grid[:stop]])
    coefs, ok = _path(prep, grid_half, TOL, MAX_SWEEPS)
    beta = _split_duplicates(coefs[-1].copy(), _duplicate_groups(prep.x))
    coef, intercept = _to_raw(beta, prep, idx, x.shape[1])
    sol = LassoSolution(coef, best, stop, bool(ok), intercept, extras={"cv_curve": curve})
    return sol
