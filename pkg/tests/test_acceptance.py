"""Acceptance criteria, each run at its stated scale and tolerance.

Every test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary. The Monte Carlo criteria take a few minutes on one core.
"""

import subprocess
import sys

import numpy as np
import pytest

from rank_knockoffs import lasso
from rank_knockoffs.experiment import run_experiment
from rank_knockoffs.filter import threshold_value
from rank_knockoffs.knockoffs import PrecisionModel, build_transform, equi_transform, joint_covariance
from rank_knockoffs.lasso import LassoProblem, fit_lasso
from rank_knockoffs.pipeline import RankConfig
from rank_knockoffs.precision import estimate_precision_nodewise
from rank_knockoffs.simulate import GeneratorSpec, ar1_covariance, ar1_precision, sample_gaussian_rows

from conftest import random_spd, record_criterion
from lasso_oracles import brute_force_min, literal_objective, soft_threshold
from test_filter import enumerate_threshold, random_stats
from test_lasso import orthonormal_design, random_problem

# FDR reported for the oracle linear setting, used as the centre of criterion 2
REPORTED_ORACLE_FDR = 0.1858


def test_criterion_1_joint_covariance():
    p, n = 20, 50_000
    model = PrecisionModel(ar1_precision(p, 0.5))
    transform = equi_transform(model)
    rng = np.random.default_rng(1)
    x = sample_gaussian_rows(n, ar1_covariance(p, 0.5), rng)
    knock = x @ transform.c_matrix.T + rng.standard_normal((n, p)) @ transform.b_matrix
    emp = np.cov(np.hstack([x, knock]), rowvar=False)
    err = np.abs(emp - joint_covariance(model, transform.s)).max()
    assert record_criterion(1, err <= 0.05, f"max entrywise error {err:.4f} (tolerance 0.05)")


@pytest.mark.slow
def test_criterion_2_oracle_fdr_control():
    spec = GeneratorSpec("linear", n=400, p=200, s=30, rho=0.0, amplitude=3.5, seed=1)
    res = run_experiment(spec, RankConfig(q_target=0.2, precision_mode="oracle"), 100)
    ok = (res.mean_fdr <= 0.2 + 2 * res.se_fdr
          and abs(res.mean_fdr - REPORTED_ORACLE_FDR) <= 0.07
          and res.mean_power >= 0.95)
    assert record_criterion(2, ok, f"FDR {res.mean_fdr:.4f} (se {res.se_fdr:.4f}), "
                                   f"power {res.mean_power:.4f}")


@pytest.mark.slow
def test_criterion_3_estimated_precision():
    details, ok = [], True
    for rho in (0.0, 0.5):
        spec = GeneratorSpec("linear", n=400, p=200, s=30, rho=rho, amplitude=1.5, seed=2)
        res = run_experiment(spec, RankConfig(q_target=0.2), 100)
        ok &= 0.10 <= res.mean_fdr <= 0.28 and res.mean_power >= 0.95
        details.append(f"rho={rho}: FDR {res.mean_fdr:.4f}, power {res.mean_power:.4f}")
    assert record_criterion(3, ok, "; ".join(details))


@pytest.mark.slow
def test_criterion_4_nonlinear_families():
    details, ok = [], True
    # the additive generator draws its own polynomial coefficients and ignores amplitude
    for family, amp in (("sim", 1.5), ("additive", 0.0)):
        spec = GeneratorSpec(family, n=400, p=200, s=10, amplitude=amp, seed=3)
        res = run_experiment(spec, RankConfig(q_target=0.2, model_family=family, h_slices=5), 50)
        ok &= res.mean_fdr <= 0.30 and res.mean_power >= 0.80
        details.append(f"{family}: FDR {res.mean_fdr:.4f}, power {res.mean_power:.4f}")
    assert record_criterion(4, ok, "; ".join(details))


def test_criterion_5_lasso_solver():
    rng = np.random.default_rng(5)
    worst_kkt = 0.0
    for i in range(1000):
        prob = random_problem(rng, standardize=bool(i % 2), restrict=i % 3 == 0)
        worst_kkt = max(worst_kkt, lasso.kkt_residual(prob, fit_lasso(prob)))

    worst_gap = 0.0
    for q in (1, 2, 3):
        for _ in range(4):
            x = rng.standard_normal((20, q))
            y = x @ rng.uniform(-1.5, 1.5, size=q) + 0.5 * rng.standard_normal(20)
            lam = float(rng.uniform(0.02, 0.4))
            coef = fit_lasso(LassoProblem(x, y, lam, standardize=False)).coefficients
            cd = float(literal_objective(x, y, lam, coef[None, :])[0])
            worst_gap = max(worst_gap, abs(cd - brute_force_min(x, y, lam)))

    worst_soft = 0.0
    for q in range(1, 9):
        x = orthonormal_design(30, q, rng)
        rho = rng.normal(0, 1.5, size=q)
        lam = float(rng.uniform(0, 2))
        coef = fit_lasso(LassoProblem(x, x @ rho, lam, standardize=False)).coefficients
        worst_soft = max(worst_soft, np.abs(coef - soft_threshold(rho, lam)).max())

    ok = worst_kkt <= 1e-6 and worst_gap <= 1e-5 and worst_soft <= 1e-8
    assert record_criterion(5, ok, f"KKT {worst_kkt:.2e}, brute-force gap {worst_gap:.2e}, "
                                   f"soft-threshold error {worst_soft:.2e}")


def test_criterion_6_thresholds():
    rng = np.random.default_rng(6)
    mismatches = dominance = 0
    for _ in range(1000):
        w = random_stats(rng)
        q = float(rng.uniform(0.05, 0.5))
        t, t_plus = threshold_value(w, q, False), threshold_value(w, q, True)
        mismatches += t != enumerate_threshold(w.tolist(), q, False)
        mismatches += t_plus != enumerate_threshold(w.tolist(), q, True)
        dominance += t_plus < t
    example = (threshold_value([3, 2, -1], 0.5, False), threshold_value([3, 2, -1], 0.5, True))
    ok = mismatches == 0 and dominance == 0 and example == (1.0, 2.0)
    assert record_criterion(6, ok, f"{mismatches} oracle mismatches, {dominance} T+ < T cases, "
                                   f"worked example (T, T+) = {example}")


def test_criterion_7_square_root_identities():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(2, 30))
        model = PrecisionModel(random_spd(rng, p))
        t = equi_transform(model)
        ds = np.diag(t.s)
        target = 2 * ds - ds @ model.omega @ ds
        worst = max(worst, np.abs(t.b_matrix @ t.b_matrix - target).max())
    x = rng.standard_normal((50, 6))
    zero = build_transform(PrecisionModel(ar1_precision(6, 0.5)), np.zeros(6))
    copy = x @ zero.c_matrix.T + rng.standard_normal((50, 6)) @ zero.b_matrix
    exact = bool(np.array_equal(copy, x))
    ok = worst <= 1e-8 and exact
    assert record_criterion(7, ok, f"max |BB - B^2| {worst:.2e}, s=0 copy bit-exact: {exact}")


def test_criterion_8_cli_determinism(tmp_path):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "rank_knockoffs.cli", "run", "--n", "120", "--p", "40",
                        "--s", "6", "--reps", "4", "--seed", "8", "--out", str(out)],
                       check=True, capture_output=True)
        outputs.append((out / "replications.csv").read_bytes())
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    assert record_criterion(8, ok, f"replications.csv identical: {outputs[0] == outputs[1]}")


def test_criterion_9_precision_consistency():
    p, rho = 10, 0.5
    truth = ar1_precision(p, rho)
    sizes = (200, 500, 1000, 2000, 5000)
    rng = np.random.default_rng(9)
    means = []
    for n in sizes:
        errs = [estimate_precision_nodewise(sample_gaussian_rows(n, ar1_covariance(p, rho), rng),
                                            rng=rng, omega_true=truth).spectral_error
                for _ in range(20)]
        means.append(float(np.mean(errs)))
    ok = all(a > b for a, b in zip(means, means[1:]))
    text = ", ".join(f"n={n}: {m:.4f}" for n, m in zip(sizes, means))
    assert record_criterion(9, ok, f"mean spectral error {text}")
