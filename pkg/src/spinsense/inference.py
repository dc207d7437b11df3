"""Grid Bayesian estimation of the field and the relative-error figure of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from .errors import DegeneratePosteriorError, DomainError
from .protocol import Dataset, Schedule, _branch_table, generate_dataset
from .spin import ChainSpec

# Sequence probabilities are even in B (H(-B) is H(B) conjugated by the
# product of sigma^z, which fixes the all-down state and the site-N
# projectors), so only |B| is identifiable; estimation runs on B >= 0.
DEFAULT_INTERVAL = (0.0, 0.2)
DEFAULT_RESOLUTION = 201


@dataclass(frozen=True)
class FieldGrid:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"a field grid needs at least 3 points, got {self.n}")
        if not self.hi > self.lo:
            raise DomainError(f"grid interval must be increasing, got [{self.lo}, {self.hi}]")

    @classmethod
    def default(cls, J: float = 1.0) -> FieldGrid:
        return cls(DEFAULT_INTERVAL[0] * J, DEFAULT_INTERVAL[1] * J, DEFAULT_RESOLUTION)

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)


def _integrate(y: np.ndarray, x: np.ndarray) -> float:
    # Simpson is exact for cubics, so polynomial moments of a flat density come out exact
    return float(simpson(y, x=x))


@dataclass(frozen=True, eq=False)
class Posterior:
    grid: FieldGrid
    density: np.ndarray

    def integral(self) -> float:
        return float(_integrate(self.density, self.grid.values))

    def mean(self) -> float:
        return float(_integrate(self.grid.values * self.density, self.grid.values))

    def variance(self) -> float:
        b = self.grid.values
        mu = self.mean()
        return float(_integrate((b - mu) ** 2 * self.density, b))


@dataclass(frozen=True)
class ErrorSummary:
    mean: float
    variance: float
    deltaB2: float

    @property
    def deltaB(self) -> float:
        return math.sqrt(self.deltaB2)


@lru_cache(maxsize=256)
def log_probability_table(template: ChainSpec, schedule: Schedule, grid: FieldGrid) -> np.ndarray:
    """log P(sequence | B) with shape (grid.n, 2^n_seq); -inf on impossible branches."""
    table = np.stack([_branch_table(template.with_field(B), schedule) for B in grid.values])
    with np.errstate(divide="ignore"):
        out = np.log(table)
    out.setflags(write=False)
    return out


def log_likelihood(dataset: Dataset, grid: FieldGrid) -> np.ndarray:
    """sum_j k_j log P(seq_j | B) per grid point; the multinomial coefficient is dropped."""
    table = log_probability_table(dataset.template, dataset.schedule, grid)
    seen = dataset.counts > 0
    return table[:, seen] @ dataset.counts[seen].astype(float)


def posterior(dataset: Dataset, grid: FieldGrid) -> Posterior:
    """Posterior density under a flat prior on the grid interval."""
    return posterior_from_loglik(log_likelihood(dataset, grid), grid)


def posterior_from_loglik(loglik: np.ndarray, grid: FieldGrid) -> Posterior:
    top = np.max(loglik)
    if not np.isfinite(top):
        raise DegeneratePosteriorError("the data has zero likelihood at every grid point")
    w = np.exp(loglik - top)
    density = w / _integrate(w, grid.values)
    density.setflags(write=False)
    return Posterior(grid, density)


def error_summary(post: Posterior, B_true: float) -> ErrorSummary:
    if B_true == 0:
        raise DomainError("relative error is undefined for B_true = 0")
    mean, var = post.mean(), post.variance()
    return ErrorSummary(mean, var, (var + (mean - B_true) ** 2) / B_true**2)


@dataclass(frozen=True)
class AverageError:
    mean: float
    stderr: float
    repeats: int


def average_error(
    spec: ChainSpec,
    schedule: Schedule,
    grid: FieldGrid,
    M_sam: int,
    repeats: int = 100,
    seed: int | tuple[int, ...] = 0,
    squared: bool = False,
) -> AverageError:
    """Mean of delta-B over independent simulated experiments.

    Repeat r draws from its own stream spawned off `seed`.  With squared=True
    the average is taken over delta-B^2 and its square root returned.
    """
    if repeats < 1:
        raise DomainError(f"repeats must be >= 1, got {repeats}")
    ss = np.random.SeedSequence(seed)
    values = np.empty(repeats)
    for r, child in enumerate(ss.spawn(repeats)):
        data = generate_dataset(spec, schedule, M_sam, np.random.default_rng(child))
        try:
            summary = error_summary(posterior(data, grid), spec.B)
        except DegeneratePosteriorError as exc:
            raise DegeneratePosteriorError(f"repeat {r}: {exc}") from exc
        values[r] = summary.deltaB2 if squared else summary.deltaB
    if squared:
        m = values.mean()
        se = values.std(ddof=1) / math.sqrt(repeats) / (2 * math.sqrt(m)) if repeats > 1 else 0.0
        return AverageError(math.sqrt(m), se, repeats)
    se = values.std(ddof=1) / math.sqrt(repeats) if repeats > 1 else 0.0
    return AverageError(float(values.mean()), float(se), repeats)
