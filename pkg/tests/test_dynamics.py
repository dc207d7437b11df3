import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from spinsense.dynamics import decomposition_for, diagonalize, evolve
from spinsense.errors import DomainError
from spinsense.spin import ChainSpec, build_hamiltonian, ferromagnetic_state, magnetization, pauli_at


def random_state(dim, seed):
    r = np.random.default_rng(seed)
    psi = r.normal(size=dim) + 1j * r.normal(size=dim)
    return psi / np.linalg.norm(psi)


def test_two_level_eigenvalues():
    d = diagonalize(0.5 * pauli_at(1, "x", 1))
    assert np.allclose(d.eigenvalues, [-0.5, 0.5])


def test_singlet_triplet_eigenvalues():
    d = diagonalize(build_hamiltonian(ChainSpec(2)))
    assert np.allclose(d.eigenvalues, [-3, 1, 1, 1], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_random_hermitian_reconstruction(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8))
    H = X + X.conj().T
    d = diagonalize(H)
    assert np.linalg.norm(d.reconstruct() - H) < 1e-9
    V = d.eigenvectors
    assert np.abs(V.conj().T @ V - np.eye(8)).max() < 1e-10
    assert np.all(np.diff(d.eigenvalues) >= 0)


def test_zero_time_is_identity():
    d = decomposition_for(ChainSpec(4, 1.0, 0.1))
    psi = random_state(16, 1)
    assert np.abs(evolve(psi, d, 0.0) - psi).max() < 1e-12


def test_matches_matrix_exponential():
    spec = ChainSpec(4, 1.0, 0.13)
    psi = random_state(16, 2)
    U = expm(-1j * 3.7 * build_hamiltonian(spec))
    assert np.abs(evolve(psi, decomposition_for(spec), 3.7) - U @ psi).max() < 1e-10


@pytest.mark.parametrize("t", [0.3, 1.0, 10.0, 57.2, 100.0])
def test_ferromagnet_is_eigenstate_without_field(t):
    psi0 = ferromagnetic_state(5)
    psi = evolve(psi0, decomposition_for(ChainSpec(5, 1.0, 0.0)), t)
    assert abs(abs(np.vdot(psi0, psi)) - 1) < 1e-10


def test_two_level_rabi():
    d = decomposition_for(ChainSpec(1, 1.0, 0.3))
    for t in np.linspace(0, 40, 33):
        p_up = abs(evolve(ferromagnetic_state(1), d, t)[1]) ** 2
        assert abs(p_up - np.sin(0.3 * t) ** 2) < 1e-10


def test_rejects_bad_input():
    d = decomposition_for(ChainSpec(2))
    with pytest.raises(DomainError):
        evolve(ferromagnetic_state(3), d, 1.0)
    with pytest.raises(DomainError):
        evolve(ferromagnetic_state(2), d, -1.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), t1=st.floats(0, 50), t2=st.floats(0, 50), B=st.floats(-0.3, 0.3))
def test_norm_composition_energy(seed, t1, t2, B):
    spec = ChainSpec(4, 1.0, B)
    d = decomposition_for(spec)
    H = build_hamiltonian(spec)
    psi = random_state(16, seed)
    a = evolve(evolve(psi, d, t1), d, t2)
    b = evolve(psi, d, t1 + t2)
    assert abs(np.linalg.norm(a) - 1) < 1e-10
    assert np.abs(a - b).max() < 1e-9
    e0 = np.vdot(psi, H @ psi).real
    assert abs(np.vdot(b, H @ b).real - e0) < 1e-9


def test_batched_evolution_matches_single():
    d = decomposition_for(ChainSpec(3, 1.0, 0.1))
    batch = np.stack([random_state(8, s) for s in range(4)])
    out = evolve(batch, d, 2.5)
    for row, psi in zip(out, batch):
        assert np.allclose(row, evolve(psi, d, 2.5))


def test_front_reaches_last_site_later():
    """N=10, B/J=0.1: the first site leaves -1 well before the last one does."""
    d = decomposition_for(ChainSpec(10, 1.0, 0.1))
    psi0 = ferromagnetic_state(10)
    times = np.arange(0, 40, 0.25)
    m1 = np.array([magnetization(evolve(psi0, d, t), 1) for t in times])
    mN = np.array([magnetization(evolve(psi0, d, t), 10) for t in times])
    first = times[np.argmax(m1 > -0.95)]
    last = times[np.argmax(mN > -0.95)]
    assert (m1 > -0.95).any() and (mN > -0.95).any()
    assert last > first
