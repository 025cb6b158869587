import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rank_knockoffs import lasso
from rank_knockoffs.errors import DimensionError, InvalidData, InvalidFolds
from rank_knockoffs.lasso import LassoProblem, Scale, fit_lasso

from lasso_oracles import brute_force_min, literal_objective, soft_threshold


def random_problem(rng, standardize=True, restrict=False):
    n = int(rng.integers(10, 80))
    q = int(rng.integers(1, 40))
    x = rng.standard_normal((n, q)) * rng.uniform(0.5, 3.0, size=q)
    if q > 1 and rng.random() < 0.3:  # correlated columns
        x[:, 1] = x[:, 0] + 0.1 * rng.standard_normal(n)
    beta = np.where(rng.random(q) < 0.3, rng.normal(0, 2, size=q), 0.0)
    y = x @ beta + rng.standard_normal(n) + rng.uniform(-2, 2)
    allowed = rng.random(q) < 0.7 if restrict else None
    top = lasso.lambda_max(x, y, allowed, standardize=standardize)
    lam = float(top * rng.uniform(0.01, 1.1))
    return LassoProblem(x, y, lam, allowed, standardize=standardize)


def orthonormal_design(n, q, rng):
    qmat, _ = np.linalg.qr(rng.standard_normal((n, q)))
    return qmat * np.sqrt(n)


def test_lambda_max_gives_zero_solution(rng):
    x = rng.standard_normal((40, 6))
    y = x[:, 0] + rng.standard_normal(40)
    for standardize in (True, False):
        top = lasso.lambda_max(x, y, standardize=standardize)
        sol = fit_lasso(LassoProblem(x, y, top, standardize=standardize))
        assert np.all(sol.coefficients == 0)
    top_raw = np.abs(x.T @ y).max() / 40
    assert lasso.lambda_max(x, y, standardize=False) == pytest.approx(top_raw)


def test_zero_penalty_square_design_is_least_squares(rng):
    x = rng.standard_normal((6, 6))
    y = rng.standard_normal(6)
    sol = fit_lasso(LassoProblem(x, y, 0.0, standardize=False), tol=1e-12, max_sweeps=200_000)
    np.testing.assert_allclose(x @ sol.coefficients, y, atol=1e-6)


def test_orthonormal_soft_threshold_example(rng):
    n = 50
    x = orthonormal_design(n, 2, rng)
    y = x @ np.array([1.0, 0.3])
    sol = fit_lasso(LassoProblem(x, y, 0.5, standardize=False))
    np.testing.assert_allclose(sol.coefficients, [0.5, 0.0], atol=1e-8)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.floats(0.0, 2.0))
def test_orthonormal_soft_threshold_property(seed, q, lam):
    rng = np.random.default_rng(seed)
    n = 30
    x = orthonormal_design(n, q, rng)
    rho = rng.normal(0, 1.5, size=q)
    y = x @ rho
    sol = fit_lasso(LassoProblem(x, y, lam, standardize=False))
    np.testing.assert_allclose(sol.coefficients, soft_threshold(rho, lam), atol=1e-8)


def test_kkt_and_objective_on_random_problems():
    rng = np.random.default_rng(11)
    for i in range(200):
        prob = random_problem(rng, standardize=bool(i % 2), restrict=i % 3 == 0)
        sol = fit_lasso(prob)
        assert sol.converged
        assert lasso.kkt_residual(prob, sol) <= 1e-6
        assert lasso.objective(prob, sol.coefficients) <= lasso.objective(prob, np.zeros(prob.q)) + 1e-12


def test_support_restriction_is_exact_zero(rng):
    x = rng.standard_normal((60, 8))
    y = x @ np.arange(1.0, 9.0) + rng.standard_normal(60)
    allowed = np.array([0, 2, 5])
    sol = fit_lasso(LassoProblem(x, y, 0.01, allowed))
    outside = np.setdiff1d(np.arange(8), allowed)
    assert np.all(sol.coefficients[outside] == 0.0)
    assert np.all(sol.coefficients[allowed] != 0.0)
    with pytest.raises(DimensionError):
        LassoProblem(x, y, 0.1, np.array([9]))


def test_scale_equivalence(rng):
    x = rng.standard_normal((50, 12))
    y = x[:, :3] @ [2.0, -1.0, 0.5] + rng.standard_normal(50)
    for lam in (0.01, 0.1, 0.4):
        half = fit_lasso(LassoProblem(x, y, lam, objective_scale=Scale.HALF_OVER_N))
        over = fit_lasso(LassoProblem(x, y, 2 * lam, objective_scale=Scale.OVER_N))
        np.testing.assert_allclose(half.coefficients, over.coefficients, atol=1e-8)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_matches_brute_force_grid(q):
    rng = np.random.default_rng(100 + q)
    for _ in range(3 if q == 3 else 5):
        n = 20
        x = rng.standard_normal((n, q))
        y = x @ rng.uniform(-1.5, 1.5, size=q) + 0.5 * rng.standard_normal(n)
        lam = float(rng.uniform(0.02, 0.4))
        sol = fit_lasso(LassoProblem(x, y, lam, standardize=False))
        assert np.all(np.abs(sol.coefficients) <= 3.0)
        cd = float(literal_objective(x, y, lam, sol.coefficients[None, :])[0])
        ref = brute_force_min(x, y, lam)
        assert cd <= ref + 1e-5
        assert ref <= cd + 1e-4  # the oracle is tight, not vacuously large


def test_duplicate_columns_share_coefficient(rng):
    x = rng.standard_normal((80, 3))
    x = np.hstack([x, x[:, :1]])
    y = 2 * x[:, 0] + rng.standard_normal(80)
    sol = fit_lasso(LassoProblem(x, y, 0.05))
    assert sol.coefficients[0] == sol.coefficients[3]
    assert sol.coefficients[0] > 0


def test_invalid_inputs(rng):
    x = rng.standard_normal((10, 3))
    with pytest.raises(DimensionError):
        LassoProblem(x, np.zeros(9), 0.1)
    with pytest.raises(InvalidData):
        LassoProblem(np.where(np.eye(10, 3) > 0, np.nan, x), np.zeros(10), 0.1)
    with pytest.raises(ValueError):
        LassoProblem(x, np.zeros(10), -1.0)
    with pytest.raises(InvalidFolds):
        lasso.cross_validate_lambda(x[:3], np.zeros(3), folds=5)


def test_non_convergence_is_reported_not_raised(rng):
    x = rng.standard_normal((30, 20))
    x[:, 1] = x[:, 0] + 1e-3 * rng.standard_normal(30)
    y = x[:, 0] + rng.standard_normal(30)
    sol = fit_lasso(LassoProblem(x, y, 1e-4), max_sweeps=2)
    assert sol.converged is False
    assert sol.n_iterations == 2


def test_grid_shape():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((40, 5)), rng.standard_normal(40)
    grid = lasso.lambda_grid(x, y)
    assert grid.size == 100
    assert grid[0] == pytest.approx(lasso.lambda_max(x, y))
    assert grid[-1] == pytest.approx(1e-3 * grid[0])
    assert np.all(np.diff(grid) < 0)


def test_cv_single_lambda_grid(rng):
    x, y = rng.standard_normal((30, 4)), rng.standard_normal(30)
    best, curve = lasso.cross_validate_lambda(x, y, grid=[0.3], rng=1)
    assert best == 0.3 and len(curve) == 1
    with pytest.raises(ValueError):
        lasso.cross_validate_lambda(x, y, grid=[0.1, 0.3], rng=1)


def test_cv_deterministic_and_ties_go_to_larger_lambda(rng):
    x, y = rng.standard_normal((50, 5)), rng.standard_normal(50)
    a = lasso.cross_validate_lambda(x, y, rng=4)
    b = lasso.cross_validate_lambda(x, y, rng=4)
    assert a == b
    # above lambda_max every grid point gives the same all-zero fit: an exact tie
    top = lasso.lambda_max(x, y)
    best, _ = lasso.cross_validate_lambda(x, y, grid=[4 * top, 2 * top, 1.5 * top], rng=4)
    assert best == 4 * top


def test_cv_pure_noise_selects_near_empty_model():
    # CV is noisy under the null; the bulk of runs should still land at or near lambda_max
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((100, 30)), rng.standard_normal(100)
        sol = lasso.fit_lasso_cv(x, y, rng=seed)
        hits += np.count_nonzero(sol.coefficients) <= 2
    assert hits >= 70


def test_cv_recovers_strong_signals():
    covered = 0
    runs = 20
    for seed in range(runs):
        rng = np.random.default_rng(1000 + seed)
        x = rng.standard_normal((200, 50))
        beta = np.zeros(50)
        support = rng.choice(50, 10, replace=False)
        beta[support] = 3.5 * rng.choice([-1, 1], 10)
        y = x @ beta + rng.standard_normal(200)
        sol = lasso.fit_lasso_cv(x, y, rng=seed)
        covered += np.all(sol.coefficients[support] != 0)
    assert covered / runs >= 0.95


def test_fit_cv_matches_direct_fit_at_chosen_lambda(rng):
    x = rng.standard_normal((80, 15))
    y = x[:, :4] @ [1.0, -1.0, 2.0, 0.5] + rng.standard_normal(80)
    sol = lasso.fit_lasso_cv(x, y, rng=2)
    direct = fit_lasso(LassoProblem(x, y, sol.lam))
    np.testing.assert_allclose(sol.coefficients, direct.coefficients, atol=1e-5)
    assert sol.extras["cv_curve"][0][0] == pytest.approx(lasso.lambda_max(x, y))
