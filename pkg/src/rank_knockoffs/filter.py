"""Knockoff statistics, data-dependent thresholds, and selection metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidTruth


@dataclass(frozen=True)
class KnockoffStatVector:
    w: np.ndarray
    active_mask: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        mask = np.asarray(self.active_mask, dtype=bool).reshape(-1)
        if mask.shape != w.shape:
            raise DimensionError(f"mask has length {mask.size}, statistics have {w.size}")
        w = np.where(mask, w, 0.0)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "active_mask", mask)

    @classmethod
    def full(cls, w):
        w = np.asarray(w, dtype=float)
        return cls(w, np.ones(w.shape, dtype=bool))

    @property
    def p(self):
        return self.w.shape[0]


@dataclass(frozen=True)
class SelectionResult:
    threshold: float
    selected: np.ndarray  # sorted feature indices
    q_target: float
    plus_variant: bool


def lcd_statistics(beta_hat, active_mask=None):
    """Lasso coefficient difference ``|b_j| - |b_{p+j}|`` on the active features."""
    beta_hat = np.asarray(beta_hat, dtype=float).reshape(-1)
    if beta_hat.size % 2:
        raise DimensionError(f"expected 2p coefficients, got {beta_hat.size}")
    p = beta_hat.size // 2
    if active_mask is None:
        active_mask = np.ones(p, dtype=bool)
    active_mask = np.asarray(active_mask, dtype=bool)
    if active_mask.shape != (p,):
        raise DimensionError(f"mask has shape {active_mask.shape}, expected ({p},)")
    return KnockoffStatVector(np.abs(beta_hat[:p]) - np.abs(beta_hat[p:]), active_mask)


def threshold_value(w, q, plus=True):
    """Smallest ``t`` among the nonzero ``|w_j|`` whose estimated FDP is at most ``q``.

    The estimate is ``(offset + #{w_j <= -t}) / #{w_j >= t}`` with offset 1 for
    the knockoffs+ variant and 0 otherwise; a zero denominator disqualifies
    ``t``. Returns ``inf`` when nothing qualifies.
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    w = np.asarray(w, dtype=float).reshape(-1)
    candidates = np.unique(np.abs(w[w != 0]))
    if candidates.size == 0:
        return np.inf
    ordered = np.sort(w)
    n_neg = np.searchsorted(ordered, -candidates, side="right")
    n_pos = w.size - np.searchsorted(ordered, candidates, side="left")
    offset = 1.0 if plus else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(n_pos > 0, (offset + n_neg) / np.maximum(n_pos, 1), np.inf)
    ok = np.flatnonzero(ratio <= q)
    return float(candidates[ok[0]]) if ok.size else np.inf


def knockoff_threshold(stats, q, plus=True):
    t = threshold_value(stats.w, q, plus)
    if np.isinf(t):
        selected = np.array([], dtype=int)
    else:
        selected = np.flatnonzero((stats.w >= t) & stats.active_mask)
    return SelectionResult(threshold=t, selected=selected, q_target=float(q), plus_variant=bool(plus))


def fdp(selected, true_support):
    selected = set(np.asarray(selected, dtype=int).reshape(-1).tolist())
    if not selected:
        return 0.0
    truth = set(np.asarray(true_support, dtype=int).reshape(-1).tolist())
    return len(selected - truth) / len(selected)


def power(selected, true_support):
    truth = set(np.asarray(true_support, dtype=int).reshape(-1).tolist())
    if not truth:
        raise InvalidTruth("power is undefined for an empty true support")
    selected = set(np.asarray(selected, dtype=int).reshape(-1).tolist())
    return len(selected & truth) / len(truth)
