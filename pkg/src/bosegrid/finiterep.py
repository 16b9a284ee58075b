"""Finite field-amplitude representation of a single boson mode.

The finite space has ``N`` grid states.  The field operator is diagonal on
the half-integer grid, the conjugate field is its finite-Fourier conjugate
``Pi = m0 F Phi F^-1`` and the discrete oscillator is
``H = Pi^2/2 + m0^2 Phi^2/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hgfunc import hg_table, tail_bound_grid, tail_weight
from .sampling import SamplingGrid, fft_matrix

__all__ = [
    "FiniteRep",
    "Eigensystem",
    "ErrorReport",
    "TwoSiteOps",
    "ResourceError",
    "build",
    "diagonalize",
    "discretize_hg",
    "error_report",
    "commutator_residual",
    "commutator_residuals",
    "cutoff_from_residuals",
    "commutator_cutoff",
    "energy_range",
    "tensor_two_site",
    "linear_cutoff_fit",
]


class ResourceError(MemoryError):
    """Raised when an operator would exceed the memory budget."""


@dataclass(frozen=True, eq=False)
class FiniteRep:
    """Operators of the finite representation.

    Attributes
    ----------
    grid : SamplingGrid
    mass : float
    phi_op : ndarray, shape (N, N)
        Real diagonal field operator.
    fft_op : ndarray, shape (N, N)
        Unitary finite Fourier transform.
    pi_op : ndarray, shape (N, N)
        Hermitian conjugate-field operator (purely imaginary).
    h_osc : ndarray, shape (N, N)
        Real symmetric discrete harmonic oscillator.
    """

    grid: SamplingGrid
    mass: float
    phi_op: np.ndarray
    fft_op: np.ndarray
    pi_op: np.ndarray
    h_osc: np.ndarray

    @property
    def n_phi(self) -> int:
        return self.grid.n_points

    @property
    def phi(self) -> np.ndarray:
        return self.grid.phi


@dataclass(frozen=True, eq=False)
class Eigensystem:
    """Eigenpairs of the discrete oscillator in the ladder gauge.

    Attributes
    ----------
    energies : ndarray
        Ascending eigenvalues.
    states : ndarray, shape (N, N)
        Real orthonormal eigenvectors as columns.
    parity : ndarray of int
        +1 for even and -1 for odd eigenvectors under ``i -> -i``.
    parity_fixed : bool
        True when the signs were fixed by the ladder convention.
    """

    energies: np.ndarray
    states: np.ndarray
    parity: np.ndarray
    parity_fixed: bool = True


@dataclass
class ErrorReport:
    """Per-state representation errors for ``n = 0..n_max``.

    ``eps_w`` is the HG tail weight on the grid window and ``eps_w_bound`` the
    closed-form estimate of the same quantity.
    """

    n_phi: int
    mass: float
    eps_w: np.ndarray
    eps_d: np.ndarray
    eps_pi: np.ndarray
    eps_phipi: np.ndarray
    eps_c: np.ndarray
    eps_w_bound: np.ndarray = field(default=None)
    precision: str = "double"

    def __post_init__(self):
        for name in ("eps_w", "eps_d", "eps_pi", "eps_phipi", "eps_c"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if np.any(arr < 0):
                raise ValueError(f"{name} has negative entries")
            setattr(self, name, arr)

    def as_rows(self) -> list[dict]:
        rows = []
        for n in range(len(self.eps_c)):
            rows.append({
                "n": n,
                "eps_w": float(self.eps_w[n]),
                "eps_w_bound": float(self.eps_w_bound[n]) if self.eps_w_bound is not None else float("nan"),
                "eps_d": float(self.eps_d[n]),
                "eps_pi": float(self.eps_pi[n]),
                "eps_phipi": float(self.eps_phipi[n]),
                "eps_c": float(self.eps_c[n]),
            })
        return rows


def build(n_phi: int, m0: float = 1.0) -> FiniteRep:
    """Construct the finite representation on ``n_phi`` grid points.

    Parameters
    ----------
    n_phi : int
        Even number of grid points, ``2 <= n_phi <= 4096``.
    m0 : float
        Boson mass; fixes ``delta_phi = sqrt(2 pi/(N m0))``.

    Returns
    -------
    FiniteRep
    """
    if not isinstance(n_phi, (int, np.integer)) or n_phi < 2 or n_phi % 2:
        raise ValueError("n_phi must be an even integer >= 2")
    if n_phi > 4096:
        raise ResourceError("n_phi above 4096 is not supported")
    if not m0 > 0:
        raise ValueError("mass must be positive")
    grid = SamplingGrid.from_mass(int(n_phi), float(m0))
    phi = grid.phi
    fmat = fft_matrix(grid.n_points)
    pi_op = m0 * (fmat * phi[None, :]) @ fmat.conj().T
    pi_op = 0.5 * (pi_op + pi_op.conj().T)
    pi_sq = m0 ** 2 * ((fmat * (phi ** 2)[None, :]) @ fmat.conj().T).real
    h = 0.5 * pi_sq + 0.5 * m0 ** 2 * np.diag(phi ** 2)
    h = 0.5 * (h + h.T)
    return FiniteRep(grid, float(m0), np.diag(phi), fmat, pi_op, h)


def _parity_blocks(h: np.ndarray):
    n = h.shape[0]
    half = n // 2
    pos = np.arange(half, n)
    mirror = n - 1 - pos
    blocks = {}
    for s in (1, -1):
        blocks[s] = h[np.ix_(pos, pos)] + s * h[np.ix_(pos, mirror)]
    return pos, mirror, blocks


def _ladder_gauge(states: np.ndarray, phi: np.ndarray) -> np.ndarray:
    n = states.shape[0]
    half = n // 2
    if states[half, 0] < 0:
        states[:, 0] *= -1
    for k in range(n - 1):
        coupling = states[:, k] @ (phi * states[:, k + 1])
        if abs(coupling) > 1e-12:
            if coupling < 0:
                states[:, k + 1] *= -1
        else:
            # decoupled pair: component at the first positive index >= 0
            col = states[half:, k + 1]
            lead = col[np.argmax(np.abs(col) > 1e-12)]
            if lead < 0:
                states[:, k + 1] *= -1
    return states


def diagonalize(rep: FiniteRep) -> Eigensystem:
    """Diagonalize the discrete oscillator.

    The even and odd parity blocks are solved separately, so every
    eigenvector has definite parity.  Signs follow the ladder convention:
    the ground state is positive at the centre and
    ``<n|Phi|n+1> > 0`` for consecutive states.

    Returns
    -------
    Eigensystem
    """
    h = rep.h_osc
    n = h.shape[0]
    pos, mirror, blocks = _parity_blocks(h)
    energies, vecs, parity = [], [], []
    for s, block in blocks.items():
        w, q = np.linalg.eigh(block)
        v = np.zeros((n, len(w)))
        v[pos, :] = q / math.sqrt(2.0)
        v[mirror, :] = s * q / math.sqrt(2.0)
        energies.append(w)
        vecs.append(v)
        parity.append(np.full(len(w), s))
    energies = np.concatenate(energies)
    order = np.argsort(energies, kind="stable")
    states = np.concatenate(vecs, axis=1)[:, order]
    states = _ladder_gauge(states, rep.phi)
    return Eigensystem(energies[order], states, np.concatenate(parity)[order], True)


def discretize_hg(rep: FiniteRep, n: int) -> tuple[np.ndarray, float]:
    """Sampled HG vector ``sqrt(dphi) phi_n(phi_i)``, renormalized.

    Returns
    -------
    vec : ndarray
        Unit vector.
    norm_deviation : float
        ``|norm - 1|`` before renormalization.
    """
    if not 0 <= n < rep.n_phi:
        raise ValueError("order must satisfy 0 <= n < n_phi")
    raw = math.sqrt(rep.grid.delta_phi) * hg_table(n, rep.mass, rep.phi)[n]
    nrm = float(np.linalg.norm(raw))
    return raw / nrm, abs(nrm - 1.0)


def commutator_residuals(rep: FiniteRep, eig: Eigensystem, n_max: int | None = None) -> np.ndarray:
    """``||([Phi, Pi] - i)|phi_n>||`` for ``n = 0..n_max``."""
    n_max = rep.n_phi - 1 if n_max is None else n_max
    v = eig.states[:, : n_max + 1]
    phi = rep.phi[:, None]
    pv = rep.pi_op @ v
    comm = phi * pv - rep.pi_op @ (phi * v)
    return np.linalg.norm(comm - 1j * v, axis=0)


def commutator_residual(rep: FiniteRep, eig: Eigensystem, n: int) -> float:
    """Commutator residual ``||([Phi, Pi] - i)|phi_n>||`` of one eigenvector."""
    if not 0 <= n <= rep.n_phi - 1:
        raise ValueError("n out of range")
    return float(commutator_residuals(rep, eig, n)[n])


def cutoff_from_residuals(eps_c: np.ndarray, tol: float = 1e-4) -> int:
    """Largest ``N_b`` with ``eps_c(n) < tol`` for every ``n < N_b``."""
    bad = np.nonzero(np.asarray(eps_c) >= tol)[0]
    return int(bad[0]) if bad.size else len(eps_c)


def commutator_cutoff(n_phi: int, tol: float = 1e-4, m0: float = 1.0) -> int:
    """Boson cutoff of an ``n_phi`` grid at commutator accuracy ``tol``."""
    rep = build(n_phi, m0)
    eig = diagonalize(rep)
    return cutoff_from_residuals(commutator_residuals(rep, eig, n_phi - 3), tol)


def energy_range(eig: Eigensystem, m0: float = 1.0) -> float:
    """Spectral width ``(E_max - E_min) / m0``."""
    return float((eig.energies[-1] - eig.energies[0]) / m0)


def _double_errors(rep, eig, n_max):
    m0 = rep.mass
    v = eig.states
    phi = rep.phi[:, None]
    n_idx = np.arange(n_max + 3)
    sampled = math.sqrt(rep.grid.delta_phi) * hg_table(n_max + 2, m0, rep.phi).T
    eps_d = np.linalg.norm(sampled - v[:, : n_max + 3], axis=0)
    cols = v[:, : n_max + 1]
    pv = rep.pi_op @ cols
    eps_pi = np.empty(n_max + 1)
    eps_phipi = np.empty(n_max + 1)
    for n in range(n_max + 1):
        lower = math.sqrt(n) * v[:, n - 1] if n > 0 else 0.0
        target = -1j * math.sqrt(m0 / 2) * (lower - math.sqrt(n + 1) * v[:, n + 1])
        eps_pi[n] = np.linalg.norm(pv[:, n] - target)
        low2 = math.sqrt(n * (n - 1)) * v[:, n - 2] if n > 1 else 0.0
        target2 = 0.5j * (-low2 + math.sqrt((n + 1) * (n + 2)) * v[:, n + 2] + v[:, n])
        eps_phipi[n] = np.linalg.norm(phi[:, 0] * pv[:, n] - target2)
    eps_c = commutator_residuals(rep, eig, n_max)
    return eps_d[n_idx], eps_pi, eps_phipi, eps_c


def _mp_errors(n_phi, m0, n_max, dps):
    import mpmath as mp

    with mp.workdps(dps):
        N = n_phi
        m = mp.mpf(m0)
        dphi = mp.sqrt(2 * mp.pi / (N * m))
        idx = [mp.mpf(2 * k - (N - 1)) / 2 for k in range(N)]
        phi = [i * dphi for i in idx]
        # Pi = i A with A real antisymmetric Toeplitz; Pi^2 real symmetric Toeplitz
        a_diag, p2_diag = {}, {}
        for d in range(-(N - 1), N):
            ang = [2 * mp.pi * d * q / N for q in idx]
            a_diag[d] = m / N * mp.fsum(phi[j] * mp.sin(ang[j]) for j in range(N))
            p2_diag[d] = m ** 2 / N * mp.fsum(phi[j] ** 2 * mp.cos(ang[j]) for j in range(N))
        half = N // 2
        states, energies = [], []
        for s in (1, -1):
            blk = mp.matrix(half, half)
            for a in range(half):
                for b in range(half):
                    ja, jb, jm = half + a, half + b, N - 1 - (half + b)
                    val = p2_diag[ja - jb] / 2 + s * p2_diag[ja - jm] / 2
                    if a == b:
                        val += m ** 2 * phi[ja] ** 2 / 2
                    blk[a, b] = val
            w, q = mp.eigsy(blk)
            for k in range(half):
                vec = [mp.mpf(0)] * N
                for a in range(half):
                    vec[half + a] = q[a, k] / mp.sqrt(2)
                    vec[N - 1 - (half + a)] = s * q[a, k] / mp.sqrt(2)
                energies.append(w[k])
                states.append(vec)
        order = sorted(range(N), key=lambda k: energies[k])
        states = [states[k] for k in order]

        def dot(x, y):
            return mp.fsum(p * q for p, q in zip(x, y))

        if states[0][half] < 0:
            states[0] = [-x for x in states[0]]
        for k in range(min(N - 1, n_max + 2)):
            if dot(states[k], [p * x for p, x in zip(phi, states[k + 1])]) < 0:
                states[k + 1] = [-x for x in states[k + 1]]

        def apply_a(vec):
            return [mp.fsum(a_diag[j - l] * vec[l] for l in range(N)) for j in range(N)]

        def hg_mp(n, x):
            y = mp.sqrt(m) * x
            p0 = (m / mp.pi) ** mp.mpf(0.25) * mp.exp(-y * y / 2)
            if n == 0:
                return p0
            p1 = mp.sqrt(2) * y * p0
            for k in range(1, n):
                p0, p1 = p1, mp.sqrt(mp.mpf(2) / (k + 1)) * y * p1 - mp.sqrt(mp.mpf(k) / (k + 1)) * p0
            return p1

        def norm(x):
            return mp.sqrt(mp.fsum(t * t for t in x))

        eps_d = []
        for n in range(n_max + 3):
            sampled = [mp.sqrt(dphi) * hg_mp(n, p) for p in phi]
            eps_d.append(float(norm([a - b for a, b in zip(sampled, states[n])])))
        eps_pi, eps_phipi, eps_c = [], [], []
        zero = [mp.mpf(0)] * N
        for n in range(n_max + 1):
            v = states[n]
            av = apply_a(v)
            apv = apply_a([p * x for p, x in zip(phi, v)])
            # [Phi, Pi] v - i v = i (Phi A v - A Phi v - v)
            eps_c.append(float(norm([p * a - b - x for p, a, b, x in zip(phi, av, apv, v)])))
            lower = states[n - 1] if n > 0 else zero
            # Pi v = i A v; target -i sqrt(m/2)(sqrt(n) v_{n-1} - sqrt(n+1) v_{n+1})
            t1 = [mp.sqrt(m / 2) * (mp.sqrt(n) * lo - mp.sqrt(n + 1) * up) for lo, up in zip(lower, states[n + 1])]
            eps_pi.append(float(norm([a + t for a, t in zip(av, t1)])))
            low2 = states[n - 2] if n > 1 else zero
            # Phi Pi v = i Phi A v; target (i/2)(-sqrt(n(n-1)) v_{n-2} + sqrt((n+1)(n+2)) v_{n+2} + v)
            t2 = [(-mp.sqrt(n * (n - 1)) * lo + mp.sqrt((n + 1) * (n + 2)) * up + x) / 2
                  for lo, up, x in zip(low2, states[n + 2], v)]
            eps_phipi.append(float(norm([p * a - t for p, a, t in zip(phi, av, t2)])))
    return np.array(eps_d), np.array(eps_pi), np.array(eps_phipi), np.array(eps_c)


def error_report(rep: FiniteRep, eig: Eigensystem, n_max: int, dps: int | None = None) -> ErrorReport:
    """Representation errors of the low eigenvectors.

    Parameters
    ----------
    rep, eig : FiniteRep, Eigensystem
        Representation and its ladder-gauged eigensystem.
    n_max : int
        Highest state, ``n_max <= N - 3``.
    dps : int, optional
        If given, the eigenproblem and all norms are recomputed with
        ``mpmath`` at this many decimal digits; needed when the errors fall
        below double precision.

    Returns
    -------
    ErrorReport
        ``eps_d[n] = || |n~> - |phi_n> ||`` for ``n <= n_max + 2``; the other
        entries for ``n <= n_max``.
    """
    N = rep.n_phi
    if not 0 <= n_max <= N - 3:
        raise ValueError("n_max must satisfy 0 <= n_max <= n_phi - 3")
    if dps is None:
        eps_d, eps_pi, eps_phipi, eps_c = _double_errors(rep, eig, n_max)
        precision = "double"
    else:
        eps_d, eps_pi, eps_phipi, eps_c = _mp_errors(N, rep.mass, n_max, dps)
        precision = f"mp{dps}"
    eps_w = np.array([tail_weight(n, rep.mass, rep.grid.F) for n in range(n_max + 3)])
    bound = np.array([tail_bound_grid(n, N) for n in range(n_max + 3)])
    return ErrorReport(N, rep.mass, eps_w, eps_d, eps_pi, eps_phipi, eps_c, bound, precision)


def linear_cutoff_fit(n_phi_list, tol: float = 1e-3) -> tuple[float, float, np.ndarray]:
    """Fit ``N_phi = c1 + c2 N_b`` with ``N_b`` from the commutator rule at ``tol``.

    Returns
    -------
    c1, c2 : float
    cutoffs : ndarray of int
    """
    n_phi_list = np.asarray(list(n_phi_list))
    nb = np.array([commutator_cutoff(int(n), tol) for n in n_phi_list])
    design = np.column_stack([np.ones(len(nb)), nb])
    (c1, c2), *_ = np.linalg.lstsq(design, n_phi_list.astype(float), rcond=None)
    return float(c1), float(c2), nb


@dataclass(frozen=True, eq=False)
class TwoSiteOps:
    """Sparse two-site operators on the product space (site 1 is the slow index)."""

    phi1: sp.csr_matrix
    phi2: sp.csr_matrix
    pi1: sp.csr_matrix
    pi2: sp.csr_matrix
    identity: sp.csr_matrix
    n_phi: int


def tensor_two_site(rep: FiniteRep, max_n_phi: int = 128) -> TwoSiteOps:
    """Embed the local operators into the two-site product space."""
    N = rep.n_phi
    if N > max_n_phi:
        raise ResourceError(f"two-site space limited to n_phi <= {max_n_phi}")
    eye = sp.identity(N, format="csr")
    phi = sp.diags(rep.phi).tocsr()
    pi = sp.csr_matrix(rep.pi_op)
    return TwoSiteOps(
        phi1=sp.kron(phi, eye, format="csr"),
        phi2=sp.kron(eye, phi, format="csr"),
        pi1=sp.kron(pi, eye, format="csr"),
        pi2=sp.kron(eye, pi, format="csr"),
        identity=sp.identity(N * N, format="csr"),
        n_phi=N,
    )
