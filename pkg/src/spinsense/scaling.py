"""Time-budget accounting and power-law fits of the averaged error.

The averaged error is modelled as  dB(B, T) = A * B**Delta * T**(-alpha):
for each total time T a log-log fit over B yields Delta(T) and log C(T);
a second log-log fit of C(T) over T yields A and alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .protocol import Schedule

INIT_RATIO = 100.0
MEAS_RATIO = 10.0
DEFAULT_B_WINDOW = (0.04, 0.2)


@dataclass(frozen=True)
class TimeBudget:
    t_evo: float
    init_ratio: float = INIT_RATIO
    meas_ratio: float = MEAS_RATIO

    def __post_init__(self):
        if not (self.t_evo > 0 and self.init_ratio > 0 and self.meas_ratio > 0):
            raise DomainError(f"time budget entries must be positive: {self}")

    @classmethod
    def for_schedule(cls, schedule: Schedule, init_ratio: float = INIT_RATIO, meas_ratio: float = MEAS_RATIO) -> TimeBudget:
        return cls(schedule.mean_interval, init_ratio, meas_ratio)

    def sample_duration(self, n_seq: int) -> float:
        """Wall time of one record: one initialization plus n_seq evolve+measure cycles."""
        return (self.init_ratio + n_seq * (1.0 + self.meas_ratio)) * self.t_evo


def total_time(budget: TimeBudget, n_seq: int, M_sam: int) -> float:
    return M_sam * budget.sample_duration(n_seq)


def matched_samples(budget: TimeBudget, n_seq: int, M_seq: int) -> int:
    """Standard-strategy sample count using the same total time as M_seq sequential records."""
    if n_seq < 1:
        raise DomainError(f"n_seq must be >= 1, got {n_seq}")
    if n_seq == 1:
        return int(M_seq)
    ratio = budget.sample_duration(n_seq) / budget.sample_duration(1)
    return int(round(M_seq * ratio))


def samples_for_time(budget: TimeBudget, n_seq: int, T: float) -> int:
    """Sample count whose total time is nearest T (at least 1)."""
    return max(1, int(round(T / budget.sample_duration(n_seq))))


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float  # natural log
    residual: float  # RMS in natural-log units
    window: tuple[float, float]
    points: int


def fit_loglog(x: Sequence[float], y: Sequence[float], window: tuple[float, float] | None = None) -> LogLogFit:
    """Ordinary least squares of log y on log x, keeping window[0] <= x <= window[1]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError(f"x and y differ in shape: {x.shape} vs {y.shape}")
    if (x <= 0).any() or (y <= 0).any() or not np.isfinite(x).all() or not np.isfinite(y).all():
        raise DomainError("log-log fit needs finite positive data")
    if window is not None:
        lo, hi = window
        # a hair of slack so grid endpoints written as decimals are kept
        keep = (x >= lo * (1 - 1e-9)) & (x <= hi * (1 + 1e-9))
        x, y = x[keep], y[keep]
    if x.size < 3:
        raise DomainError(f"log-log fit needs at least 3 points in the window, got {x.size}")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    return LogLogFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), (float(x.min()), float(x.max())), int(x.size))


@dataclass(frozen=True)
class ErrorCell:
    """One cell of the error table: averaged error at field B and total time T."""

    n_seq: int
    B: float
    T: float
    M_sam: int
    deltaB_bar: float
    stderr: float = 0.0


@dataclass(frozen=True)
class ScalingFit:
    n_seq: int
    delta: float  # mean of Delta(T)
    delta_spread: float  # max - min of Delta(T)
    logC: float  # log C at the smallest T fitted
    A: float
    alpha: float
    residual: float  # RMS residual of the C(T) fit
    fit_window: tuple[float, float]  # B window
    time_window: tuple[float, float]
    per_time: tuple[tuple[float, float, float], ...] = field(default=())  # (T, Delta, logC)


def _group(cells: Iterable[ErrorCell], key) -> dict:
    out: dict = {}
    for c in cells:
        out.setdefault(key(c), []).append(c)
    return out


def extract_scaling(
    cells: Iterable[ErrorCell],
    b_window: tuple[float, float] = DEFAULT_B_WINDOW,
    t_window: tuple[float, float] | None = None,
) -> dict[int, ScalingFit]:
    cells = [c for c in cells if c.B > 0]
    fits = {}
    for n_seq, rows in sorted(_group(cells, lambda c: c.n_seq).items()):
        per_time = []
        for T, trow in sorted(_group(rows, lambda c: c.T).items()):
            if t_window is not None and not t_window[0] <= T <= t_window[1]:
                continue
            try:
                f = fit_loglog([c.B for c in trow], [c.deltaB_bar for c in trow], b_window)
            except DomainError as exc:
                raise DomainError(f"B fit failed at n_seq={n_seq}, T={T:g}: {exc}") from exc
            per_time.append((T, f.slope, f.intercept))
        if not per_time:
            raise DomainError(f"no total-time points for n_seq={n_seq}")
        Ts = np.array([p[0] for p in per_time])
        deltas = np.array([p[1] for p in per_time])
        logCs = np.array([p[2] for p in per_time])
        try:
            cfit = fit_loglog(Ts, np.exp(logCs))
        except DomainError as exc:
            raise DomainError(f"C(T) fit failed at n_seq={n_seq}: {exc}") from exc
        fits[n_seq] = ScalingFit(
            n_seq=n_seq,
            delta=float(deltas.mean()),
            delta_spread=float(deltas.max() - deltas.min()),
            logC=float(logCs[0]),
            A=math.exp(cfit.intercept),
            alpha=-cfit.slope,
            residual=cfit.residual,
            fit_window=b_window,
            time_window=(float(Ts.min()), float(Ts.max())),
            per_time=tuple((float(a), float(b), float(c)) for a, b, c in per_time),
        )
    return fits


def time_exponent(cells: Iterable[ErrorCell], n_seq: int, B: float, t_window: tuple[float, float] | None = None) -> LogLogFit:
    """Fit dB(T) at one fixed field; alpha is minus the returned slope."""
    rows = [c for c in cells if c.n_seq == n_seq and math.isclose(c.B, B, rel_tol=1e-9)]
    return fit_loglog([c.T for c in rows], [c.deltaB_bar for c in rows], t_window)


def synthetic_cells(
    A: float,
    delta: float,
    alpha: float,
    B_values: Sequence[float],
    T_values: Sequence[float],
    n_seq: int = 1,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[ErrorCell]:
    """Error table generated from the power-law model, optionally with multiplicative noise."""
    rng = rng or np.random.default_rng(0)
    cells = []
    for T in T_values:
        for B in B_values:
            y = A * B**delta * T ** (-alpha)
            if noise:
                y *= 1.0 + noise * rng.standard_normal()
            cells.append(ErrorCell(n_seq, float(B), float(T), 0, float(y)))
    return cells
