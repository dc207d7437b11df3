"""Quick runtime checks against independent oracles (seconds, no sweeps)."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import expm

from .dynamics import decomposition_for, evolve
from .inference import FieldGrid, error_summary, Posterior
from .protocol import Outcome, Schedule, branch_probabilities, run_sequence, sequence_probability
from .scaling import TimeBudget, matched_samples, synthetic_cells, extract_scaling, total_time
from .spin import ChainSpec, build_hamiltonian, ferromagnetic_state, up_mask


def _matrix_product_probability(spec: ChainSpec, schedule: Schedule, seq) -> float:
    H = build_hamiltonian(spec)
    up = np.diag(up_mask(spec.N, spec.N).astype(complex))
    down = np.eye(spec.dim) - up
    psi = ferromagnetic_state(spec.N)
    for tau, o in zip(schedule.taus, seq):
        psi = (up if o is Outcome.UP else down) @ (expm(-1j * tau * H) @ psi)
    return float(np.vdot(psi, psi).real)


def check_oracle() -> tuple[bool, str]:
    template, schedule = ChainSpec(3), Schedule((1.3, 2.1, 0.7))
    worst = 0.0
    for B in np.linspace(-0.2, 0.2, 5):
        for seq in itertools.product(list(Outcome), repeat=3):
            a = sequence_probability(B, template, schedule, seq)
            b = _matrix_product_probability(template.with_field(B), schedule, seq)
            worst = max(worst, abs(a - b))
    return worst < 1e-12, f"max |collapse chain - matrix product| = {worst:.2e}"


def check_completeness() -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, 7):
        for B in np.linspace(-0.2, 0.2, 9):
            worst = max(worst, abs(branch_probabilities(B, ChainSpec(4), Schedule.arithmetic(n)).sum() - 1))
    return worst < 1e-10, f"max |sum - 1| = {worst:.2e}"


def check_eigenstate() -> tuple[bool, str]:
    spec = ChainSpec(5, 1.0, 0.0)
    psi0 = ferromagnetic_state(5)
    dev = max(abs(abs(np.vdot(psi0, evolve(psi0, decomposition_for(spec), t))) - 1) for t in (1, 10, 100))
    rng = np.random.default_rng(0)
    flips = sum(any(o is Outcome.UP for o in run_sequence(spec, Schedule.arithmetic(5), rng)) for _ in range(50))
    return dev < 1e-10 and flips == 0, f"fidelity deviation {dev:.2e}, non-all-down records {flips}"


def check_two_level() -> tuple[bool, str]:
    spec = ChainSpec(1, 1.0, 0.3)
    ts = np.linspace(0.5, 20, 20)
    worst = max(abs(abs(evolve(ferromagnetic_state(1), decomposition_for(spec), t)[1]) ** 2 - np.sin(0.3 * t) ** 2) for t in ts)
    return worst < 1e-10, f"max |p_up - sin^2(Bt)| = {worst:.2e}"


def check_uniform_posterior() -> tuple[bool, str]:
    grid = FieldGrid(-0.2, 0.2, 401)
    s = error_summary(Posterior(grid, np.full(401, 1 / 0.4)), 0.1)
    expect = (0.4**2 / 12 + 0.01) / 0.01
    return abs(s.deltaB2 - expect) < 1e-12, f"deltaB2 {s.deltaB2:.15g} vs {expect:.15g}"


def check_budget() -> tuple[bool, str]:
    b = TimeBudget(10.0)
    worst = 0.0
    for n in range(1, 11):
        M_std = matched_samples(b, n, 1000)
        worst = max(worst, abs(total_time(b, 1, M_std) - total_time(b, n, 1000)) / b.sample_duration(1))
    return worst <= 1 and matched_samples(b, 1, 1000) == 1000, f"max mismatch {worst:.3f} standard samples"


def check_synthetic() -> tuple[bool, str]:
    cells = synthetic_cells(0.02, -0.8, 0.6, np.linspace(0.04, 0.2, 9), np.geomspace(1e5, 1e7, 6))
    f = extract_scaling(cells)[1]
    err = max(abs(f.A - 0.02) / 0.02, abs(f.delta + 0.8), abs(f.alpha - 0.6))
    return err < 1e-10, f"max parameter error {err:.2e}"


CHECKS = {
    "sequence oracle (N=3)": check_oracle,
    "branch completeness (N=4)": check_completeness,
    "B=0 eigenstate": check_eigenstate,
    "two-level Rabi": check_two_level,
    "uniform posterior moments": check_uniform_posterior,
    "equal-time samples": check_budget,
    "synthetic round-trip": check_synthetic,
}


def run_checks():
    for name, fn in CHECKS.items():
        passed, detail = fn()
        yield name, bool(passed), detail
