"""The four-stage RANK procedure.

1. split the rows in two halves (or reuse all rows for both roles);
2. on the first half, estimate the precision matrix (or take the oracle) and
   fit a family-specific sparse model whose support is the reduced model;
3. on the second half, sample knockoffs for all p columns;
4. compute statistics on the reduced model only, zero elsewhere, and threshold.

Without splitting, screening on the same rows that feed the statistics would
favour the originals of any null feature it picked up. The reduced model is
then screened on ``[X, X_tilde]`` instead, keeping a feature when it or its
knockoff is selected, which leaves originals and knockoffs exchangeable.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import adapters, lasso
from .errors import StageError, TooFewRows
from .filter import fdp, knockoff_threshold, power
from .knockoffs import equi_transform, sample_knockoffs
from .precision import estimate_precision_nodewise, oracle_precision
from .simulate import Dataset, Family

STAGES = ("split", "precision", "reduce", "knockoffs", "statistics")


@dataclass(frozen=True)
class RankConfig:
    q_target: float = 0.2
    plus_variant: bool = True
    split: bool = True
    k_n_cap: int | str | None = None  # None: n/2 - 1, "log": log_scaled_cap(n, p)
    model_family: Family = Family.LINEAR
    seed: int = 0
    precision_mode: str = "estimate"  # or "oracle"
    omega0: np.ndarray | None = field(default=None, compare=False, repr=False)
    h_slices: int = adapters.DEFAULT_SLICES
    degree: int = adapters.DEFAULT_DEGREE

    def __post_init__(self):
        object.__setattr__(self, "model_family", Family.parse(self.model_family))
        if not 0 < self.q_target < 1:
            raise ValueError(f"q_target must lie in (0, 1), got {self.q_target}")
        cap = self.k_n_cap
        if isinstance(cap, str):
            if cap.strip().lower() not in ("log", "none"):
                raise ValueError(f"k_n_cap must be a positive integer, 'log' or 'none', got {cap!r}")
            cap = None if cap.strip().lower() == "none" else "log"
        elif cap is not None:
            if int(cap) != cap or cap < 1:
                raise ValueError(f"k_n_cap must be >= 1, got {cap}")
            cap = int(cap)
        object.__setattr__(self, "k_n_cap", cap)
        if self.precision_mode not in ("estimate", "oracle"):
            raise ValueError(f"precision_mode must be 'estimate' or 'oracle', got {self.precision_mode!r}")


@dataclass(frozen=True)
class RankRunRecord:
    reduced_model: np.ndarray
    precision_report: object
    stats: object
    selection: object
    fdp: float | None
    power: float | None
    split: bool
    knockoff_shape: tuple
    timings: dict = field(default_factory=dict, compare=False)


def log_scaled_cap(n, p):
    """``floor(n / (2 log p))`` clamped to ``[10, n/2 - 1]``."""
    upper = max(n // 2 - 1, 1)
    raw = n / (2 * math.log(p)) if p > 1 else upper
    return int(min(max(math.floor(raw), 10), upper))


def resolve_cap(k_n_cap, n, p):
    if k_n_cap is None:
        return max(n // 2 - 1, 1)
    if k_n_cap == "log":
        return log_scaled_cap(n, p)
    return int(k_n_cap)


def stage_rng(seed, stage):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STAGES.index(stage),)))


def split_data(n, rng):
    """Random disjoint halves of ``range(n)``; the first gets the extra row when n is odd."""
    if n < 4:
        raise TooFewRows(f"need at least 4 rows to split, got {n}")
    perm = rng.permutation(n)
    cut = (n + 1) // 2
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def truncate_support(scores, cap):
    """Indices of the nonzero scores, keeping the ``cap`` largest magnitudes (ties: lower index)."""
    scores = np.asarray(scores, dtype=float)
    nz = np.flatnonzero(scores != 0)
    if nz.size > cap:
        order = np.argsort(-np.abs(scores[nz]), kind="stable")
        nz = nz[order[:cap]]
    return np.sort(nz)


def screening_scores(data, family, rng, h_slices=adapters.DEFAULT_SLICES,
                     degree=adapters.DEFAULT_DEGREE):
    """Per-feature importance from the family's sparse fit on ``data`` (0 = not selected)."""
    family = Family.parse(family)
    if family is Family.LINEAR:
        return lasso.fit_lasso_cv(data.x, data.y, rng=rng, scale=lasso.Scale.OVER_N).coefficients
    if family is Family.PARTIALLY_LINEAR:
        if data.u is None:
            raise ValueError("partially linear family needs the U covariate")
        prof = adapters.profile_partially_linear(data.y, data.x, data.u)
        return lasso.fit_lasso_cv(prof.x_profiled, prof.y_profiled, rng=rng,
                                  scale=lasso.Scale.OVER_N).coefficients
    if family is Family.SINGLE_INDEX:
        sir = adapters.lasso_sir_response(data.y, data.x, h_slices)
        return lasso.fit_lasso_cv(data.x[sir.rows], sir.y_tilde, rng=rng,
                                  scale=lasso.Scale.OVER_N).coefficients
    return adapters.fit_additive(data.y, data.x, degree, rng=rng).per_feature_norms


def reduce_model(data, family, k_n_cap, rng, h_slices=adapters.DEFAULT_SLICES,
                 degree=adapters.DEFAULT_DEGREE):
    return truncate_support(screening_scores(data, family, rng, h_slices, degree), k_n_cap)


def reduce_model_paired(data, knockoffs, family, k_n_cap, rng, h_slices=adapters.DEFAULT_SLICES,
                        degree=adapters.DEFAULT_DEGREE):
    """Screen ``[X, X_tilde]`` and score feature j by the larger of its two scores."""
    p = data.p
    augmented = Dataset(np.hstack([data.x, knockoffs]), data.y, data.u)
    scores = np.abs(screening_scores(augmented, family, rng, h_slices, degree))
    return truncate_support(np.maximum(scores[:p], scores[p:]), k_n_cap)


def family_statistics(data, knockoffs, mask, config, rng):
    family = config.model_family
    if family is Family.LINEAR:
        return adapters.linear_lcd_stats(data.x, knockoffs, data.y, mask, rng=rng)
    if family is Family.PARTIALLY_LINEAR:
        return adapters.partially_linear_stats(data.x, knockoffs, data.y, data.u, mask, rng=rng)
    if family is Family.SINGLE_INDEX:
        return adapters.single_index_stats(data.x, knockoffs, data.y, mask, config.h_slices, rng=rng)
    return adapters.additive_stats(data.x, knockoffs, data.y, mask, config.degree, rng=rng)


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = self.timings.get(self.name, 0.0) + time.perf_counter() - self.start
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _oracle_omega(data, config):
    if config.omega0 is not None:
        return config.omega0
    if data.covariance is None:
        raise ValueError("oracle precision requested but no true precision/covariance is known")
    return np.linalg.inv(data.covariance)


def run_rank(data, config):
    timings = {}
    n, p = data.n, data.p
    cap = resolve_cap(config.k_n_cap, n, p)

    with _Stage("split", timings):
        if config.split:
            first_idx, second_idx = split_data(n, stage_rng(config.seed, "split"))
            first, second = data.rows(first_idx), data.rows(second_idx)
        else:
            first = second = data

    with _Stage("precision", timings):
        rng = stage_rng(config.seed, "precision")
        if config.precision_mode == "oracle":
            report = oracle_precision(_oracle_omega(data, config))
        else:
            report = estimate_precision_nodewise(first.x, rng=rng)

    if config.split:
        with _Stage("reduce", timings):
            reduced = reduce_model(first, config.model_family, cap, stage_rng(config.seed, "reduce"),
                                   config.h_slices, config.degree)

    with _Stage("knockoffs", timings):
        transform = equi_transform(report.model)
        knockoffs = sample_knockoffs(second.x, transform, stage_rng(config.seed, "knockoffs"))

    if not config.split:
        with _Stage("reduce", timings):
            reduced = reduce_model_paired(data, knockoffs, config.model_family, cap,
                                          stage_rng(config.seed, "reduce"), config.h_slices,
                                          config.degree)

    with _Stage("statistics", timings):
        mask = np.zeros(p, dtype=bool)
        mask[reduced] = True
        stats = family_statistics(second, knockoffs, mask, config, stage_rng(config.seed, "statistics"))
        selection = knockoff_threshold(stats, config.q_target, config.plus_variant)

    run_fdp = run_power = None
    if data.true_support is not None:
        run_fdp = fdp(selection.selected, data.true_support)
        if len(data.true_support):
            run_power = power(selection.selected, data.true_support)
    return RankRunRecord(
        reduced_model=reduced, precision_report=report, stats=stats, selection=selection,
        fdp=run_fdp, power=run_power, split=config.split, knockoff_shape=knockoffs.shape,
        timings=timings,
    )
