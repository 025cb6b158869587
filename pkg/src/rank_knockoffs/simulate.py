"""Synthetic designs: Gaussian AR(1) covariates and four response families."""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


class Family(enum.Enum):
    LINEAR = "linear"
    PARTIALLY_LINEAR = "plm"
    SINGLE_INDEX = "sim"
    ADDITIVE = "additive"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"partially_linear": "plm", "single_index": "sim", "gam": "additive"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray | None = None
    true_support: np.ndarray | None = None
    beta: np.ndarray | None = None
    covariance: np.ndarray | None = None
    column_names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DimensionError(f"design shape {x.shape} does not match {y.shape[0]} responses")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.u is not None:
            u = np.asarray(self.u, dtype=float).reshape(-1)
            if u.shape[0] != x.shape[0]:
                raise DimensionError(f"U has {u.shape[0]} entries, design has {x.shape[0]} rows")
            object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def rows(self, idx):
        return Dataset(
            self.x[idx], self.y[idx], None if self.u is None else self.u[idx],
            self.true_support, self.beta, self.covariance, self.column_names,
        )


@dataclass(frozen=True)
class GeneratorSpec:
    family: Family = Family.LINEAR
    n: int = 400
    p: int = 200
    s: int = 30
    rho: float = 0.0
    amplitude: float = 3.5
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not 0 <= self.s <= self.p:
            raise ValueError(f"need 0 <= s <= p, got s={self.s}, p={self.p}")
        if self.n < 4:
            raise ValueError(f"need n >= 4, got {self.n}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 <= self.rho < 1:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")


def ar1_covariance(p, rho):
    idx = np.arange(p)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def ar1_precision(p, rho):
    """Closed-form inverse of the AR(1) covariance (tridiagonal)."""
    omega = np.zeros((p, p))
    scale = 1.0 / (1.0 - rho**2)
    idx = np.arange(p)
    omega[idx, idx] = scale * (1.0 + rho**2)
    omega[0, 0] = omega[p - 1, p - 1] = scale
    if p > 1:
        omega[idx[:-1], idx[1:]] = omega[idx[1:], idx[:-1]] = -scale * rho
    return omega


def _streams(seed, truth_seed):
    root = np.random.SeedSequence(seed)
    truth_ss, data_ss = root.spawn(2)
    if truth_seed is not None:
        truth_ss = np.random.SeedSequence(truth_seed).spawn(1)[0]
    return np.random.default_rng(truth_ss), np.random.default_rng(data_ss)


def sample_gaussian_rows(n, covariance, rng):
    lower = np.linalg.cholesky(covariance)
    return rng.standard_normal((n, covariance.shape[0])) @ lower.T


def generate(spec, truth_seed=None):
    """Draw one dataset; ``truth_seed`` (if given) fixes the support and coefficients."""
    truth_rng, rng = _streams(spec.seed, truth_seed)
    p, n, s = spec.p, spec.n, spec.s
    support = np.sort(truth_rng.choice(p, size=s, replace=False))
    signs = truth_rng.choice(np.array([-1.0, 1.0]), size=s)
    poly = truth_rng.normal(0.0, 10.0, size=(s, 4))  # degree 0..3, additive family only
    beta = np.zeros(p)
    beta[support] = spec.amplitude * signs

    cov = ar1_covariance(p, spec.rho)
    x = sample_gaussian_rows(n, cov, rng)
    noise = spec.sigma * rng.standard_normal(n)
    u = None
    family = spec.family
    if family is Family.LINEAR:
        y = x @ beta + noise
    elif family is Family.PARTIALLY_LINEAR:
        u = rng.uniform(0.0, 1.0, size=n)
        y = x @ beta + np.sin(2 * np.pi * u) + noise
    elif family is Family.SINGLE_INDEX:
        y = (x @ beta) ** 3 / 2.0 + noise
    else:
        signal = np.zeros(n)
        for coefs, j in zip(poly, support):
            g = np.polynomial.polynomial.polyval(x[:, j], coefs)
            signal += g - g.mean()
        y = signal + noise
        beta = None
    return Dataset(x, y, u, support, beta, cov)
