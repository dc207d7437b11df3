"""Exact propagation through a one-time eigendecomposition of H."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError
from .spin import ChainSpec, build_hamiltonian


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # column k pairs with eigenvalues[k]

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def propagator(self, t: float) -> np.ndarray:
        """exp(-iHt) as a dense matrix."""
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.conj().T

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def diagonalize(H: np.ndarray) -> SpectralDecomposition:
    try:
        w, v = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed for a {H.shape[0]}x{H.shape[0]} matrix: {exc}") from exc
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


def evolve(state: np.ndarray, decomp: SpectralDecomposition, t: float) -> np.ndarray:
    """Return exp(-iHt) applied to `state`.  Accepts a batch of states along the leading axes."""
    if t < 0:
        raise DomainError(f"evolution time must be >= 0, got {t}")
    if state.shape[-1] != decomp.dim:
        raise DomainError(f"state dimension {state.shape[-1]} does not match operator dimension {decomp.dim}")
    V = decomp.eigenvectors
    coeffs = state @ V.conj()  # components in the eigenbasis
    return (coeffs * np.exp(-1j * decomp.eigenvalues * t)) @ V.T


@lru_cache(maxsize=4096)
def decomposition_for(spec: ChainSpec) -> SpectralDecomposition:
    """Cached decomposition, one per distinct (N, J, B)."""
    return diagonalize(build_hamiltonian(spec))
