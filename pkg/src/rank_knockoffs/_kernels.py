"""Inner loops of the coordinate-descent solvers.

All solvers work in covariance ("Gram") form: with ``gram = X^T X`` and
``corr = X^T y`` the objective is

    (2n)^-1 (b^T gram b - 2 corr^T b) + penalty(b)

up to a constant, so one Gram matrix serves every lambda on a path, every
fold-restricted refit, and every nodewise regression that shares a design.
Arrays must be float64 and C-contiguous. ``beta`` is updated in place.
"""

import numpy as np

from ._accel import kernel


@kernel
def lasso_cd_gram(gram, corr, n, lam, beta, allowed, tol, max_sweeps):
    """Cyclic coordinate descent for the l1 penalty ``lam * |b|_1``.

    Alternates full sweeps with sweeps over the current nonzero set; stops
    when a full sweep moves no coordinate by more than ``tol`` (measured in
    gradient units, ``|delta| * gram[j, j] / n``). Returns (sweeps, converged).
    """
    q = gram.shape[0]
    gb = np.zeros(q)
    for j in range(q):
        bj = beta[j]
        if bj != 0.0:
            for k in range(q):
                gb[k] += gram[j, k] * bj
    sweeps = 0
    active_only = False
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        for j in range(q):
            if not allowed[j]:
                continue
            bj = beta[j]
            if active_only and bj == 0.0:
                continue
            hjj = gram[j, j] / n
            if hjj <= 0.0:
                continue
            z = (corr[j] - gb[j]) / n + hjj * bj
            mag = abs(z) - lam
            new = 0.0
            if mag > 0.0:
                new = mag / hjj if z > 0.0 else -mag / hjj
            d = new - bj
            if d != 0.0:
                beta[j] = new
                for k in range(q):
                    gb[k] += gram[j, k] * d
                change = abs(d) * hjj
                if change > max_delta:
                    max_delta = change
        if max_delta < tol:
            if not active_only:
                return sweeps, True
            active_only = False
        else:
            active_only = True
    return sweeps, False


@kernel
def explained_fraction(gram, corr, yy, beta):
    """``1 - RSS / yy`` computed from the Gram form."""
    if yy <= 0.0:
        return 1.0
    q = gram.shape[0]
    quad = 0.0
    lin = 0.0
    for j in range(q):
        bj = beta[j]
        if bj == 0.0:
            continue
        lin += corr[j] * bj
        for k in range(q):
            quad += bj * gram[j, k] * beta[k]
    return 1.0 - (yy - 2.0 * lin + quad) / yy


@kernel
def lasso_path_gram(gram, corr, n, yy, lambdas, allowed, tol, max_sweeps, saturation):
    """Warm-started lasso path; row ``i`` of the result solves ``lambdas[i]``.

    Once the fit explains more than ``saturation`` of ``yy`` the remaining rows
    repeat the current solution (``saturation >= 1`` disables this).
    """
    q = gram.shape[0]
    coefs = np.zeros((lambdas.shape[0], q))
    beta = np.zeros(q)
    all_converged = True
    saturated = False
    for i in range(lambdas.shape[0]):
        if not saturated:
            _, ok = lasso_cd_gram(gram, corr, n, lambdas[i], beta, allowed, tol, max_sweeps)
            if not ok:
                all_converged = False
            if saturation < 1.0 and explained_fraction(gram, corr, yy, beta) > saturation:
                saturated = True
        coefs[i, :] = beta
    return coefs, all_converged


@kernel
def group_cd_gram(gram, corr, n, lam, beta, starts, lipschitz, allowed, tol, max_sweeps):
    """Block coordinate descent for the group penalty ``lam * sum_g |b_g|_2``.

    Group ``g`` owns columns ``starts[g]:starts[g + 1]``. Each block step is a
    proximal-gradient step with step size ``1 / lipschitz[g]``, which is exact
    block minimisation when the block's columns are orthonormal.
    """
    q = gram.shape[0]
    n_groups = starts.shape[0] - 1
    gb = np.zeros(q)
    for j in range(q):
        bj = beta[j]
        if bj != 0.0:
            for k in range(q):
                gb[k] += gram[j, k] * bj
    width = 0
    for g in range(n_groups):
        w = starts[g + 1] - starts[g]
        if w > width:
            width = w
    z = np.zeros(width)
    sweeps = 0
    active_only = False
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        for g in range(n_groups):
            if not allowed[g]:
                continue
            lo = starts[g]
            hi = starts[g + 1]
            nonzero = False
            for j in range(lo, hi):
                if beta[j] != 0.0:
                    nonzero = True
                    break
            if active_only and not nonzero:
                continue
            step = lipschitz[g]
            if step <= 0.0:
                continue
            norm = 0.0
            for j in range(lo, hi):
                v = beta[j] + (corr[j] - gb[j]) / (n * step)
                z[j - lo] = v
                norm += v * v
            norm = np.sqrt(norm)
            shrink = 0.0
            if norm > 0.0:
                shrink = 1.0 - lam / (step * norm)
                if shrink < 0.0:
                    shrink = 0.0
            for j in range(lo, hi):
                new = shrink * z[j - lo]
                d = new - beta[j]
                if d != 0.0:
                    beta[j] = new
                    for k in range(q):
                        gb[k] += gram[j, k] * d
                    change = abs(d) * step
                    if change > max_delta:
                        max_delta = change
        if max_delta < tol:
            if not active_only:
                return sweeps, True
            active_only = False
        else:
            active_only = True
    return sweeps, False


@kernel
def group_path_gram(gram, corr, n, yy, lambdas, starts, lipschitz, allowed, tol, max_sweeps,
                    saturation):
    q = gram.shape[0]
    coefs = np.zeros((lambdas.shape[0], q))
    beta = np.zeros(q)
    all_converged = True
    saturated = False
    for i in range(lambdas.shape[0]):
        if not saturated:
            _, ok = group_cd_gram(
                gram, corr, n, lambdas[i], beta, starts, lipschitz, allowed, tol, max_sweeps
            )
            if not ok:
                all_converged = False
            if saturation < 1.0 and explained_fraction(gram, corr, yy, beta) > saturation:
                saturated = True
        coefs[i, :] = beta
    return coefs, all_converged


@kernel
def cv_lasso_errors(grams, corrs, n_train, x_test, y_test, offsets, lambdas, allowed,
                    tol, max_sweeps, patience):
    """Held-out squared error along a lambda grid, all folds advanced in lockstep.

    Fold ``k`` is described by ``grams[k]``, ``corrs[k]``, ``n_train[k]`` and the
    test rows ``offsets[k]:offsets[k + 1]`` of ``x_test`` / ``y_test``. Scanning
    stops once ``patience`` consecutive grid points fail to improve on the best
    error so far (``patience <= 0`` scans the whole grid); unscanned entries are
    ``inf``. Returns (errors, all_converged).
    """
    n_folds = grams.shape[0]
    q = grams.shape[1]
    n_lam = lambdas.shape[0]
    errors = np.full(n_lam, np.inf)
    betas = np.zeros((n_folds, q))
    best = np.inf
    best_i = 0
    all_converged = True
    for i in range(n_lam):
        total = 0.0
        for k in range(n_folds):
            beta = betas[k]
            _, ok = lasso_cd_gram(grams[k], corrs[k], n_train[k], lambdas[i], beta, allowed,
                                  tol, max_sweeps)
            if not ok:
                all_converged = False
            for r in range(offsets[k], offsets[k + 1]):
                pred = 0.0
                for j in range(q):
                    bj = beta[j]
                    if bj != 0.0:
                        pred += x_test[r, j] * bj
                d = y_test[r] - pred
                total += d * d
        errors[i] = total
        if total < best:
            best = total
            best_i = i
        elif patience > 0 and i - best_i >= patience:
            break
    return errors, all_converged
