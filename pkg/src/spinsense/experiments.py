"""Orchestration of the reproduction runs: traces, posterior prefixes, and error sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dynamics import decomposition_for, evolve
from .errors import NumericalError
from .inference import FieldGrid, Posterior, average_error, posterior
from .protocol import Outcome, Schedule, collapse, generate_dataset, outcome_probability
from .scaling import ErrorCell, TimeBudget, matched_samples, samples_for_time, total_time
from .spin import ChainSpec, ferromagnetic_state, magnetization



@dataclass(frozen=True)
class TracePoint:
    t: float
    m_first: float
    m_last: float
    event: str = ""  # "+" or "-" right after a measurement


def magnetization_trace(
    spec: ChainSpec,
    t_max: float,
    dt: float,
    schedule: Schedule | None = None,
    rng: np.random.Generator | None = None,
) -> list[TracePoint]:
    """m_1(t) and m_N(t) on a uniform time grid, with optional sampled measurements.

    Measurement i happens at the cumulative time tau_1 + ... + tau_i; the
    trace gets one point just after each collapse, tagged with the outcome.
    """
    decomp = decomposition_for(spec)
    N = spec.N
    times = np.round(np.arange(0.0, t_max + dt / 2, dt), 12)
    cuts = np.cumsum(schedule.taus) if schedule is not None else np.array([])
    rng = rng or np.random.default_rng(0)

    state = ferromagnetic_state(N)
    t_state = 0.0
    points = []
    k = 0
    for t in times:
        while k < len(cuts) and cuts[k] <= t:
            state = evolve(state, decomp, cuts[k] - t_state)
            t_state = float(cuts[k])
            o = Outcome.UP if rng.random() < outcome_probability(state, Outcome.UP) else Outcome.DOWN
            state = collapse(state, o)
            points.append(TracePoint(t_state, magnetization(state, 1), magnetization(state, N), o.symbol))
            k += 1
        psi = evolve(state, decomp, t - t_state)
        points.append(TracePoint(float(t), magnetization(psi, 1), magnetization(psi, N)))
    return points


def prefix_posteriors(
    spec: ChainSpec, schedule: Schedule, grid: FieldGrid, M_sam: int, rng: np.random.Generator
) -> list[Posterior]:
    """Posteriors from the first 1, 2, ..., n_seq outcomes of one simulated dataset."""
    data = generate_dataset(spec, schedule, M_sam, rng)
    return [posterior(data.prefix(k), grid) for k in range(1, schedule.n_seq + 1)]


def prefix_variances(
    spec: ChainSpec, schedule: Schedule, grid: FieldGrid, M_sam: int, repeats: int, seed: int
) -> np.ndarray:
    """Posterior variance per (repeat, prefix length); shape (repeats, n_seq)."""
    out = np.empty((repeats, schedule.n_seq))
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(repeats)):
        posts = prefix_posteriors(spec, schedule, grid, M_sam, np.random.default_rng(child))
        out[r] = [p.variance() for p in posts]
    return out


@dataclass(frozen=True)
class Job:
    """One error-table cell; `key` feeds the cell's seed so order never matters."""

    n_seq: int
    B: float
    T: float
    M_sam: int
    key: tuple[int, ...]


def table_jobs(
    n_seqs: Sequence[int],
    B_values: Sequence[float],
    T_values: Sequence[float],
    schedule_for: Callable[[int], Schedule],
    init_ratio: float,
    meas_ratio: float,
) -> list[Job]:
    jobs = []
    for n in n_seqs:
        budget = TimeBudget.for_schedule(schedule_for(n), init_ratio, meas_ratio)
        for iT, T in enumerate(T_values):
            M = samples_for_time(budget, n, T)
            for iB, B in enumerate(B_values):
                jobs.append(Job(n, float(B), total_time(budget, n, M), M, (n, iT, iB)))
    return jobs


def _run_job(args) -> ErrorCell:
    job, template, schedule, grid, repeats, seed, squared = args
    spec = template.with_field(job.B)
    try:
        res = average_error(spec, schedule, grid, job.M_sam, repeats, seed=(seed, *job.key), squared=squared)
    except NumericalError as exc:
        raise type(exc)(f"cell n_seq={job.n_seq} B={job.B:g} T={job.T:g}: {exc}") from exc
    return ErrorCell(job.n_seq, job.B, job.T, job.M_sam, res.mean, res.stderr)


def run_error_table(
    jobs: Sequence[Job],
    template: ChainSpec,
    schedule_for: Callable[[int], Schedule],
    grid: FieldGrid,
    repeats: int,
    seed: int,
    workers: int = 1,
    squared: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> list[ErrorCell]:
    """Evaluate every job; results come back in job order whatever the worker count."""
    args = [(j, template, schedule_for(j.n_seq), grid, repeats, seed, squared) for j in jobs]
    cells = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, cell in enumerate(pool.map(_run_job, args, chunksize=4)):
                cells.append(cell)
                if progress:
                    progress(i + 1, len(args))
    else:
        for i, a in enumerate(args):
            cells.append(_run_job(a))
            if progress:
                progress(i + 1, len(args))
    return cells


@dataclass(frozen=True)
class Comparison:
    B: float
    n_seq: int
    M_seq: int
    T_seq: float
    M_std: int
    T_std: float
    deltaB_seq: float
    deltaB_std: float


def compare_strategies(
    template: ChainSpec,
    schedule: Schedule,
    grid: FieldGrid,
    B_values: Sequence[float],
    M_seq: int,
    repeats: int,
    seed: int,
    init_ratio: float = 100.0,
    meas_ratio: float = 10.0,
) -> list[Comparison]:
    """Sequential versus standard protocol at equal total time.

    The standard protocol evolves for the sequential schedule's mean interval
    before its single measurement, so both share one time budget.
    """
    budget = TimeBudget.for_schedule(schedule, init_ratio, meas_ratio)
    n = schedule.n_seq
    M_std = matched_samples(budget, n, M_seq)
    standard = Schedule((budget.t_evo,))
    rows = []
    for i, B in enumerate(B_values):
        spec = template.with_field(B)
        seq = average_error(spec, schedule, grid, M_seq, repeats, seed=(seed, 0, i))
        std = average_error(spec, standard, grid, M_std, repeats, seed=(seed, 1, i))
        rows.append(
            Comparison(
                float(B), n, M_seq, total_time(budget, n, M_seq), M_std, total_time(budget, 1, M_std), seq.mean, std.mean
            )
        )
    return rows
