"""Chain operators, the Heisenberg Hamiltonian with a local x-field, and site observables.

Basis convention shared by every module: bit j of a basis index (bit 0 being
the most significant) encodes site j+1, with 0 = down and 1 = up.  The
all-down ferromagnetic state is therefore basis index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

MAX_SITES = 12

# single-site matrices in the (down, up) ordering
SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
    "z": np.array([[-1, 0], [0, 1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class ChainSpec:
    """N spin-1/2 sites with exchange J and a field B on site 1 (hbar = 1)."""

    N: int
    J: float = 1.0
    B: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N!r}")
        if self.N > MAX_SITES:
            raise DomainError(f"N={self.N} exceeds the dense limit of {MAX_SITES} sites")
        if not self.J > 0:
            raise DomainError(f"J must be positive, got {self.J!r}")
        if not np.isfinite(self.B):
            raise DomainError(f"B must be finite, got {self.B!r}")

    @property
    def dim(self) -> int:
        return 2**self.N

    def with_field(self, B: float) -> ChainSpec:
        return replace(self, B=float(B))


def _check_site(site: int, N: int) -> None:
    if not 1 <= site <= N:
        raise DomainError(f"site {site} outside 1..{N}")


def pauli_at(site: int, axis: str, N: int) -> np.ndarray:
    """Embed sigma^axis at `site` (1-based) into the 2^N dimensional chain space."""
    _check_site(site, N)
    if axis not in SIGMA:
        raise DomainError(f"axis must be one of x, y, z; got {axis!r}")
    left = np.eye(2 ** (site - 1))
    right = np.eye(2 ** (N - site))
    return np.kron(np.kron(left, SIGMA[axis]), right)


def build_hamiltonian(spec: ChainSpec) -> np.ndarray:
    N = spec.N
    H = spec.B * pauli_at(1, "x", N)
    bond = sum(np.kron(SIGMA[a], SIGMA[a]) for a in "xyz")
    for j in range(1, N):
        H = H + spec.J * np.kron(np.kron(np.eye(2 ** (j - 1)), bond), np.eye(2 ** (N - j - 1)))
    return H


def ferromagnetic_state(N: int) -> np.ndarray:
    psi = np.zeros(2**N, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def up_mask(site: int, N: int) -> np.ndarray:
    """Boolean mask over basis indices where `site` is up."""
    _check_site(site, N)
    idx = np.arange(2**N)
    return ((idx >> (N - site)) & 1).astype(bool)


def site_probabilities(state: np.ndarray, site: int) -> tuple[float, float]:
    """Return (p_up, p_down) for a z measurement at `site`."""
    N = _sites_of(state)
    weights = np.abs(state) ** 2
    mask = up_mask(site, N)
    p_up = float(weights[mask].sum())
    p_down = float(weights[~mask].sum())
    return p_up, p_down


def magnetization(state: np.ndarray, site: int) -> float:
    p_up, p_down = site_probabilities(state, site)
    return min(1.0, max(-1.0, p_up - p_down))


def _sites_of(state: np.ndarray) -> int:
    n = int(state.shape[-1]).bit_length() - 1
    if 2**n != state.shape[-1]:
        raise DomainError(f"state length {state.shape[-1]} is not a power of two")
    return n
