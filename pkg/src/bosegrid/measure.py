"""Local measurements on the finite representation.

Field and conjugate-field histograms, Pauli-string tomography of a local
density matrix, and an analytic simulation of phase estimation of the
boson number through the discrete oscillator spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hadamard

from .distribution import Distribution
from .finiterep import Eigensystem, FiniteRep
from .sampling import SamplingGrid, to_conjugate

__all__ = [
    "QPEConfig",
    "AncillaDistribution",
    "PauliDecomposition",
    "ank_value",
    "ank_matrix",
    "qpe_distribution",
    "high_energy_probability",
    "sample_shots",
    "field_histograms",
    "pauli_decomposition",
    "pauli_string",
    "boson_distribution",
    "qst_roundtrip",
]


# --- phase estimation ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QPEConfig:
    """Ancilla size and spectrum of the shifted discrete oscillator.

    Attributes
    ----------
    n_r : int
        Number of ancilla qubits.
    theta : float
        Evolution scale ``1 / (m0 2^n_r)``.
    energies : ndarray
        Eigenvalues of ``H_h - m0/2``.
    mass : float
    """

    n_r: int
    theta: float
    energies: np.ndarray
    mass: float

    def __post_init__(self):
        spread = float(self.energies.max() - self.energies.min())
        if not self.theta < 1.0 / spread:
            raise ValueError("theta must be below the inverse spectral range")
        if self.n_r < math.ceil(math.log2(spread / self.mass)):
            raise ValueError("ancilla register too small for the spectral range")

    @classmethod
    def from_eigensystem(cls, rep: FiniteRep, eig: Eigensystem, n_r: int | None = None) -> "QPEConfig":
        """Default ``n_r = log2(N) + 1``."""
        n_q = int(round(math.log2(rep.n_phi)))
        n_r = n_q + 1 if n_r is None else int(n_r)
        return cls(n_r, 1.0 / (rep.mass * 2 ** n_r), eig.energies - 0.5 * rep.mass, rep.mass)


@dataclass(frozen=True, eq=False)
class AncillaDistribution:
    """Ancilla readout ``p(k)`` with the high-integer summaries.

    Attributes
    ----------
    probs : ndarray
        ``p(k)`` for ``k < 2^n_r``.
    n_b : int
    p1max : float
        ``max_{k >= N_b} p(k)``.
    p_all : float
        ``sum_{k >= N_b} p(k)``.
    """

    probs: np.ndarray
    n_b: int
    p1max: float
    p_all: float

    def __post_init__(self):
        if np.any(self.probs < -1e-15) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ValueError("ancilla probabilities must be nonnegative and sum to one")

    def as_distribution(self) -> Distribution:
        return Distribution(np.arange(len(self.probs)), self.probs)


def ank_value(e_over_m0, k, n_r: int):
    """Amplitude ``a_nk`` of reading ``k`` for a state of energy ``E = e_over_m0 * m0``.

    Uses the closed geometric sum with ``mu = E/m0 - k`` reduced modulo
    ``2^n_r``; at ``mu = 0`` the exact limit ``a = 1`` is used.
    """
    M = 2 ** int(n_r)
    k = np.asarray(k)
    if np.any((k < 0) | (k >= M)):
        raise ValueError("k must satisfy 0 <= k < 2^n_r")
    mu = np.asarray(e_over_m0, dtype=float) - k
    mu = mu - M * np.round(mu / M)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(math.pi * mu) / (M * np.sin(math.pi * mu / M))
    ratio = np.where(mu == 0.0, 1.0, ratio)
    out = np.exp(-1j * math.pi * mu * (M - 1) / M) * ratio
    return out[()] if out.ndim == 0 else out


def ank_matrix(cfg: QPEConfig) -> np.ndarray:
    """``a_nk`` for every eigenstate ``n`` and ancilla integer ``k``."""
    M = 2 ** cfg.n_r
    return ank_value(cfg.energies[:, None] / cfg.mass, np.arange(M)[None, :], cfg.n_r)


def qpe_distribution(state: np.ndarray, cfg: QPEConfig, n_b: int) -> AncillaDistribution:
    """Ancilla distribution for a state given in the oscillator eigenbasis.

    Parameters
    ----------
    state : ndarray, shape (N,) or (E, N)
        Coefficients ``c_en``; the last axis indexes eigenstates.
    cfg : QPEConfig
    n_b : int
        Boson cutoff.

    Returns
    -------
    AncillaDistribution
        ``p(k) = sum_{e,n} |c_en a_nk|^2``.
    """
    c = np.atleast_2d(np.asarray(state))
    if c.shape[-1] != len(cfg.energies):
        raise ValueError("state must have one coefficient per eigenstate")
    weight = float(np.sum(np.abs(c) ** 2))
    if abs(weight - 1.0) > 1e-8:
        raise ValueError("state is not normalized")
    occ = np.sum(np.abs(c) ** 2, axis=0)
    probs = occ @ np.abs(ank_matrix(cfg)) ** 2
    high = probs[n_b:]
    return AncillaDistribution(probs, int(n_b), float(high.max()) if high.size else 0.0, float(high.sum()))


def high_energy_probability(state: np.ndarray, n_b: int) -> float:
    """``eps_H = sum_e sum_{n >= N_b} |c_en|^2``."""
    c = np.atleast_2d(np.asarray(state))
    return float(np.sum(np.abs(c[:, n_b:]) ** 2))


def sample_shots(dist: Distribution | AncillaDistribution, shots: int, seed: int) -> np.ndarray:
    """Multinomial counts of ``shots`` draws from ``dist`` with a seeded generator."""
    if seed is None:
        raise ValueError("a seed is required")
    probs = dist.probs / dist.probs.sum()
    return np.random.default_rng(seed).multinomial(int(shots), probs)


# --- field histograms ----------------------------------------------------------

def field_histograms(state: np.ndarray, grid: SamplingGrid):
    """Field and conjugate-field histograms of a grid state or density matrix.

    The conjugate histogram is the diagonal after applying ``F^-1``.

    Returns
    -------
    p_phi, p_kappa : Distribution
    """
    state = np.asarray(state)
    if state.shape[0] != grid.n_points:
        raise ValueError("state dimension does not match the grid")
    if state.ndim == 1:
        p_phi = np.abs(state) ** 2
        p_kappa = np.abs(to_conjugate(state)) ** 2
    else:
        p_phi = np.real(np.diag(state))
        rot = to_conjugate(to_conjugate(state).conj().T).conj().T
        p_kappa = np.real(np.diag(rot))
    return Distribution(grid.phi, p_phi, tol=1e-12), Distribution(grid.kappa, p_kappa, tol=1e-12)


# --- tomography ----------------------------------------------------------------

_PAULI = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(labels) -> np.ndarray:
    """Explicit ``sigma_{v0} x ... x sigma_{v(n-1)}``; ``v0`` acts on the most significant bit."""
    out = np.ones((1, 1), dtype=complex)
    for v in labels:
        out = np.kron(out, _PAULI[int(v)])
    return out


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    count = np.zeros_like(a)
    while np.any(a):
        count += a & 1
        a = a >> 1
    return count


def _label_masks(n_q: int):
    """Map every string index ``(v0, ..., v_{n-1})`` to its X and Z bit masks."""
    labels = np.indices((4,) * n_q).reshape(n_q, -1).T
    bits = 1 << np.arange(n_q - 1, -1, -1)
    xm = ((labels == 1) | (labels == 2)) @ bits
    zm = ((labels == 2) | (labels == 3)) @ bits
    return xm, zm


@dataclass(frozen=True, eq=False)
class PauliDecomposition:
    """Coefficients ``s_v = Tr(P_v rho)``, indexed ``coeffs[v0, ..., v_{n-1}]``."""

    coeffs: np.ndarray
    n_q: int

    def __post_init__(self):
        if self.coeffs.shape != (4,) * self.n_q:
            raise ValueError("coefficient array has the wrong shape")

    def reconstruct(self) -> np.ndarray:
        """``rho = 2^-n sum_v s_v P_v``."""
        n = self.n_q
        dim = 2 ** n
        xm, zm = _label_masks(n)
        s = self.coeffs.reshape(-1)
        table = np.zeros((dim, dim), dtype=complex)
        table[xm, zm] = s * (1j ** (_popcount(xm & zm) % 4))
        had = hadamard(dim).astype(float)
        c = np.arange(dim)
        rho = np.zeros((dim, dim), dtype=complex)
        for x in range(dim):
            # P|c> = i^{#Y} (-1)^{|c & z|} |c ^ x>
            rho[c ^ x, c] = had @ table[x] / dim
        return rho


def pauli_decomposition(rho: np.ndarray, n_q: int | None = None) -> PauliDecomposition:
    """Pauli-string coefficients of a ``2^n_q`` dimensional density matrix."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    n = int(round(math.log2(dim))) if n_q is None else int(n_q)
    if rho.shape != (dim, dim) or 2 ** n != dim:
        raise ValueError("density matrix dimension must be 2^n_q")
    if n > 8:
        raise ValueError("tomography is limited to n_q <= 8")
    had = hadamard(dim).astype(float)
    c = np.arange(dim)
    table = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        # Tr(P rho) = sum_c phase(c) rho[c, c ^ x]; phase sums are a Hadamard transform
        table[x] = had @ rho[c, c ^ x]
    xm, zm = _label_masks(n)
    s = table[xm, zm] * (1j ** (_popcount(xm & zm) % 4))
    return PauliDecomposition(np.real(s).reshape((4,) * n), n)


def boson_distribution(rho: np.ndarray, eig: Eigensystem) -> Distribution:
    """``p(n) = <phi~_n| rho |phi~_n>`` in the discrete oscillator eigenbasis."""
    v = eig.states
    p = np.real(np.einsum("in,ij,jn->n", v, np.asarray(rho), v))
    return Distribution(np.arange(len(p)), p, tol=1e-10)


def qst_roundtrip(rho: np.ndarray, n_q: int, eig: Eigensystem):
    """Decompose, reconstruct and read out the boson distribution.

    Returns
    -------
    decomposition : PauliDecomposition
    rho_rec : ndarray
    p_n : Distribution
        Boson distribution of the reconstructed matrix.
    """
    if np.asarray(rho).shape != (2 ** n_q, 2 ** n_q):
        raise ValueError("density matrix dimension does not match n_q")
    if eig.states.shape[0] != 2 ** n_q:
        raise ValueError("eigensystem dimension does not match n_q")
    dec = pauli_decomposition(rho, n_q)
    rho_rec = dec.reconstruct()
    return dec, rho_rec, boson_distribution(rho_rec, eig)
