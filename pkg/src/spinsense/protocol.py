"""Sequential projective measurement of the last site.

An outcome sequence of length n is encoded as an integer code whose bits,
most significant first, are the outcomes in time order (1 = up).  Count
vectors in a Dataset are indexed by that code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .dynamics import SpectralDecomposition, decomposition_for, evolve
from .errors import DomainError
from .spin import ChainSpec, ferromagnetic_state, up_mask

ZERO_PROBABILITY = 1e-14


class Outcome(enum.IntEnum):
    DOWN = -1
    UP = 1

    @property
    def bit(self) -> int:
        return 1 if self is Outcome.UP else 0

    @property
    def symbol(self) -> str:
        return "+" if self is Outcome.UP else "-"


@dataclass(frozen=True)
class Schedule:
    """Free-evolution intervals preceding each measurement, in units of 1/J."""

    taus: tuple[float, ...]

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        object.__setattr__(self, "taus", taus)
        if not taus:
            raise DomainError("a schedule needs at least one interval")
        if any(not t > 0 for t in taus):
            raise DomainError(f"all intervals must be positive, got {taus}")

    @classmethod
    def arithmetic(cls, n_seq: int, start: float = 6.0, step: float = 2.0) -> Schedule:
        """start, start+step, ... ; n_seq=5 with the defaults gives 6, 8, ..., 14."""
        if n_seq < 1:
            raise DomainError(f"n_seq must be >= 1, got {n_seq}")
        return cls(tuple(start + step * i for i in range(n_seq)))

    @property
    def n_seq(self) -> int:
        return len(self.taus)

    @property
    def mean_interval(self) -> float:
        return sum(self.taus) / len(self.taus)

    def prefix(self, k: int) -> Schedule:
        return Schedule(self.taus[:k])


def encode(seq: Iterable[Outcome]) -> int:
    code = 0
    for o in seq:
        code = (code << 1) | Outcome(o).bit
    return code


def decode(code: int, n_seq: int) -> tuple[Outcome, ...]:
    return tuple(Outcome.UP if (code >> (n_seq - 1 - i)) & 1 else Outcome.DOWN for i in range(n_seq))


def outcome_probability(state: np.ndarray, outcome: Outcome) -> float:
    """Probability of `outcome` for a z measurement on the last site."""
    # the last site is the least significant bit: odd indices are up
    sub = state[1::2] if outcome is Outcome.UP else state[0::2]
    p = float(np.vdot(sub, sub).real)
    return min(1.0, max(0.0, p))


def collapse(state: np.ndarray, outcome: Outcome) -> np.ndarray:
    p = outcome_probability(state, outcome)
    if p <= ZERO_PROBABILITY:
        raise DomainError(f"outcome {outcome.name} has probability {p:.3g}; cannot collapse onto it")
    out = np.zeros_like(state)
    sl = slice(1, None, 2) if outcome is Outcome.UP else slice(0, None, 2)
    out[sl] = state[sl] / np.sqrt(p)
    return out


def run_sequence(
    spec: ChainSpec,
    schedule: Schedule,
    rng: np.random.Generator,
    decomp: SpectralDecomposition | None = None,
) -> tuple[Outcome, ...]:
    """Simulate one measurement record from the all-down state without resets."""
    decomp = decomp or decomposition_for(spec)
    state = ferromagnetic_state(spec.N)
    outcomes = []
    for tau in schedule.taus:
        state = evolve(state, decomp, tau)
        p_up = outcome_probability(state, Outcome.UP)
        o = Outcome.UP if rng.random() < p_up else Outcome.DOWN
        state = collapse(state, o)
        outcomes.append(o)
    return tuple(outcomes)


def sequence_probability(B: float, template: ChainSpec, schedule: Schedule, seq: Sequence[Outcome]) -> float:
    """Joint probability of `seq` as the product of conditional outcome probabilities."""
    if len(seq) != schedule.n_seq:
        raise DomainError(f"sequence length {len(seq)} does not match n_seq={schedule.n_seq}")
    spec = template.with_field(B)
    decomp = decomposition_for(spec)
    state = ferromagnetic_state(spec.N)
    prob = 1.0
    for tau, o in zip(schedule.taus, seq):
        state = evolve(state, decomp, tau)
        p = outcome_probability(state, Outcome(o))
        if p <= ZERO_PROBABILITY:
            return 0.0
        prob *= p
        state = collapse(state, Outcome(o))
    return prob


def branch_probabilities(B: float, template: ChainSpec, schedule: Schedule) -> np.ndarray:
    """Probabilities of all 2^n_seq sequences, indexed by code.

    Propagates the unnormalized projected states of every branch at once; the
    squared norm of a leaf is that branch's joint probability.
    """
    spec = template.with_field(B)
    return _branch_table(spec, schedule).copy()


@lru_cache(maxsize=8192)
def _branch_table(spec: ChainSpec, schedule: Schedule) -> np.ndarray:
    decomp = decomposition_for(spec)
    states = ferromagnetic_state(spec.N)[None, :]
    mask = up_mask(spec.N, spec.N)
    for tau in schedule.taus:
        states = evolve(states, decomp, tau)
        down = np.where(mask, 0, states)
        up = np.where(mask, states, 0)
        # child codes 2c (down) and 2c+1 (up) interleave
        states = np.stack([down, up], axis=1).reshape(-1, spec.dim)
    probs = np.einsum("ij,ij->i", states.conj(), states).real
    probs = np.clip(probs, 0.0, 1.0)
    probs.setflags(write=False)
    return probs


@dataclass(frozen=True, eq=False)
class Dataset:
    """Counts k_j of every outcome sequence across M_sam independent records."""

    counts: np.ndarray
    schedule: Schedule
    template: ChainSpec
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2**self.schedule.n_seq,):
            raise DomainError(f"counts must have length 2^{self.schedule.n_seq}, got {counts.shape}")
        if (counts < 0).any():
            raise DomainError("counts must be nonnegative")
        if counts.sum() < 1:
            raise DomainError("a dataset needs at least one record")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def M_sam(self) -> int:
        return int(self.counts.sum())

    @property
    def n_seq(self) -> int:
        return self.schedule.n_seq

    def as_dict(self) -> dict[tuple[Outcome, ...], int]:
        return {decode(c, self.n_seq): int(k) for c, k in enumerate(self.counts) if k}

    def prefix(self, k: int) -> Dataset:
        """The same records truncated to their first k outcomes."""
        if not 1 <= k <= self.n_seq:
            raise DomainError(f"prefix length {k} outside 1..{self.n_seq}")
        folded = self.counts.reshape(2**k, 2 ** (self.n_seq - k)).sum(axis=1)
        return Dataset(folded, self.schedule.prefix(k), self.template, dict(self.meta))

    @classmethod
    def from_records(cls, records: Iterable[Sequence[Outcome]], schedule: Schedule, template: ChainSpec) -> Dataset:
        counts = np.zeros(2**schedule.n_seq, dtype=np.int64)
        for r in records:
            if len(r) != schedule.n_seq:
                raise DomainError(f"record length {len(r)} does not match n_seq={schedule.n_seq}")
            counts[encode(r)] += 1
        return cls(counts, schedule, template)


def generate_dataset(
    spec: ChainSpec,
    schedule: Schedule,
    M_sam: int,
    rng: np.random.Generator,
    sampler: str = "exact",
) -> Dataset:
    """Simulate M_sam independent records, each from a freshly reset probe.

    sampler="trajectory" runs every record through evolve/measure/collapse;
    sampler="exact" draws the records in one multinomial step from the exact
    branch probabilities, which has the same distribution and is far cheaper.
    """
    if int(M_sam) != M_sam or M_sam < 1:
        raise DomainError(f"M_sam must be a positive integer, got {M_sam!r}")
    template = ChainSpec(spec.N, spec.J)
    if sampler == "trajectory":
        decomp = decomposition_for(spec)
        records = (run_sequence(spec, schedule, rng, decomp) for _ in range(M_sam))
        return Dataset.from_records(records, schedule, template)
    if sampler == "exact":
        p = _branch_table(spec, schedule)
        counts = rng.multinomial(M_sam, p / p.sum())
        return Dataset(counts, schedule, template)
    raise DomainError(f"unknown sampler {sampler!r}")
