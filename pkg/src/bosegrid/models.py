"""Squeezed vacuum, local and two-site Phi^4 models in a boson number basis.

Operators are assembled from ladder-operator matrix elements of a boson of
mass ``m`` (the *boson mass*, unrelated to the sign of the bare ``m0^2``):

    Phi = (a + a^dag) / sqrt(2 m),   Pi = i sqrt(m/2) (a^dag - a).

The local Hamiltonian is ``Pi^2/2 + m0^2 Phi^2/2 + g Phi^4/24``; the two-site
model adds a second copy and the coupling ``-h Phi_1 Phi_2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eig_banded
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh
from scipy.special import gammaln

from .distribution import Distribution
from .hgfunc import hg_table

__all__ = [
    "SqueezedVacuum",
    "SqueezeFit",
    "ModelSystem",
    "ModelFamily",
    "LocalDensity",
    "SamplingIntervals",
    "CutoffTable",
    "ConvergenceError",
    "squeezed_coefficients",
    "squeezed_vacuum",
    "squeezed_cutoff",
    "squeezed_cutoff_fit",
    "number_operators",
    "build_model",
    "local_density",
    "local_distributions",
    "tail_profile",
    "optimal_sampling_intervals",
    "cutoff_from_probs",
    "cutoff_vs_mass",
]


class ConvergenceError(ArithmeticError):
    """Ground-state energy failed to converge within the n_cut ceiling."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved delta {achieved:.3e})")
        self.achieved = achieved


# --- squeezed vacuum ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SqueezedVacuum:
    """Mass-``m0`` vacuum written in the number basis of mass ``m1``.

    Attributes
    ----------
    ratio : float
        ``m1 / m0``.
    r : float
        Squeezing parameter ``ln(ratio) / 2``.
    coeffs : ndarray
        ``C_n`` for ``n < len(coeffs)``; odd entries are zero.
    """

    ratio: float
    r: float
    coeffs: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return self.coeffs ** 2


def _squeezed_log_probs(r: float, k: np.ndarray) -> np.ndarray:
    t = abs(math.tanh(r))
    base = gammaln(2 * k + 1) - 2 * k * math.log(2.0) - 2 * gammaln(k + 1) - math.log(math.cosh(r))
    if t == 0.0:
        return np.where(k == 0, base, -np.inf)
    return base + 2 * k * math.log(t)


def squeezed_coefficients(ratio: float, n_max: int) -> np.ndarray:
    """Coefficients ``C_0 .. C_{n_max}`` of the squeezed vacuum.

    ``C_{2k} = sqrt((2k)!) / (2^k k!) tanh(r)^k / sqrt(cosh r)``, the signs
    being those of the lowest eigenvector of the mass-``m0`` oscillator in
    the mass-``m1`` number basis.
    """
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    r = 0.5 * math.log(ratio)
    k = np.arange(n_max // 2 + 1)
    mag = np.exp(0.5 * _squeezed_log_probs(r, k))
    sign = np.where(r < 0, (-1.0) ** k, 1.0)
    out = np.zeros(n_max + 1)
    out[0::2] = (sign * mag)[: len(out[0::2])]
    return out


def _squeezed_tail(ratio: float, floor: float = 1e-18):
    """Probabilities ``p(2k)`` and tails ``sum_{j>=k} p(2j)`` until the remainder is below ``floor``."""
    r = 0.5 * math.log(ratio)
    t2 = math.tanh(r) ** 2
    k_max = 64
    while True:
        k = np.arange(k_max)
        p = np.exp(_squeezed_log_probs(r, k))
        # p(2k+2)/p(2k) = t2 (2k+1)/(2k+2) < t2, so a geometric bound holds
        remainder = p[-1] * t2 / (1.0 - t2) if t2 < 1 else math.inf
        if remainder < floor or t2 == 0.0:
            break
        k_max *= 2
    tails = np.cumsum(p[::-1])[::-1] + remainder
    return p, tails


def squeezed_vacuum(ratio: float, tol: float = 1e-14) -> SqueezedVacuum:
    """Squeezed vacuum truncated once the discarded weight is below ``tol``."""
    p, tails = _squeezed_tail(ratio, floor=tol * 1e-3)
    k_cut = int(np.argmax(np.append(tails, 0.0) <= tol))
    coeffs = squeezed_coefficients(ratio, max(2 * k_cut, 1))
    return SqueezedVacuum(float(ratio), 0.5 * math.log(ratio), coeffs)


def squeezed_cutoff(ratio: float, eps: float) -> int:
    """Smallest ``N_b`` whose discarded weight ``sum_{n>=N_b} |C_n|^2`` is at most ``eps``.

    Parameters
    ----------
    ratio : float
        ``m1 / m0 > 0``.
    eps : float
        Truncation weight, ``0 < eps < 1``.

    Returns
    -------
    int
        An odd number (or 1), since odd coefficients vanish.
    """
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _, tails = _squeezed_tail(ratio)
    tails = np.append(tails, 0.0)
    k = int(np.argmax(tails <= eps))
    # keeping 2k-1 states retains C_0 .. C_{2k-2}
    return max(2 * k - 1, 0) if k > 0 else 0


@dataclass(frozen=True)
class SqueezeFit:
    """Least-squares fit ``N_b = (a + b ln eps) * ratio``."""

    a: float
    b: float
    r2: float
    ratios: tuple
    eps: tuple
    cutoffs: np.ndarray = field(compare=False)


def squeezed_cutoff_fit(ratios: Sequence[float], eps_list: Sequence[float]) -> SqueezeFit:
    """Fit the linear-in-ratio, log-in-eps form to ``squeezed_cutoff``."""
    ratios = tuple(float(x) for x in ratios)
    eps_list = tuple(float(x) for x in eps_list)
    nb = np.array([[squeezed_cutoff(x, e) for e in eps_list] for x in ratios], dtype=float)
    rr, ee = np.meshgrid(ratios, np.log(eps_list), indexing="ij")
    design = np.column_stack([rr.ravel(), (rr * ee).ravel()])
    y = nb.ravel()
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ (a, b)
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return SqueezeFit(float(a), float(b), r2, ratios, eps_list, nb.astype(int))


# --- number-basis operators ---------------------------------------------------

def number_operators(n_cut: int, mass: float) -> dict[str, sp.csr_matrix]:
    """Sparse ``phi, phi2, phi4, pi2`` truncated to ``n_cut`` number states.

    Products are formed in a space four states larger and then truncated, so
    every kept matrix element is exact.
    """
    if not mass > 0:
        raise ValueError("boson mass must be positive")
    big = n_cut + 4
    a = sp.diags(np.sqrt(np.arange(1, big)), 1, format="csr")
    ad = a.T.tocsr()
    phi = (a + ad) / math.sqrt(2.0 * mass)
    x = ad - a
    pi2 = -(mass / 2.0) * (x @ x)
    phi2 = phi @ phi
    phi4 = phi2 @ phi2
    cut = slice(0, n_cut)
    return {k: v[cut, cut].tocsr() for k, v in {"phi": phi, "phi2": phi2, "phi4": phi4, "pi2": pi2}.items()}


def _local_h(ops, m0_sq: float, g: float) -> sp.csr_matrix:
    return (0.5 * ops["pi2"] + 0.5 * m0_sq * ops["phi2"] + (g / 24.0) * ops["phi4"]).tocsr()


def _lowest_banded(h: sp.csr_matrix, bandwidth: int):
    n = h.shape[0]
    dense_band = np.zeros((bandwidth + 1, n))
    coo = sp.triu(h).tocoo()
    dense_band[bandwidth + coo.row - coo.col, coo.col] = coo.data
    w, v = eig_banded(dense_band, lower=False, select="i", select_range=(0, 0))
    return float(w[0]), v[:, 0]


def _solve_local(m0_sq, g, mass, n_cut):
    ops = number_operators(n_cut, mass)
    h = _local_h(ops, m0_sq, g)
    even = np.arange(0, n_cut, 2)
    e, u = _lowest_banded(h[even][:, even], 2)
    vec = np.zeros(n_cut)
    vec[even] = u
    return e, vec, h


def _solve_two_site(m0_sq, g, hc, mass, n_cut):
    ops = number_operators(n_cut, mass)
    hl = _local_h(ops, m0_sq, g)
    eye = sp.identity(n_cut, format="csr")
    h = (sp.kron(hl, eye) + sp.kron(eye, hl) - hc * sp.kron(ops["phi"], ops["phi"])).tocsr()
    i1, i2 = np.divmod(np.arange(n_cut * n_cut), n_cut)
    even = np.nonzero((i1 + i2) % 2 == 0)[0]
    block = h[even][:, even].tocsc()
    v0 = np.ones(block.shape[0])
    w, u = eigsh(block, k=1, which="SA", tol=0, v0=v0, ncv=min(block.shape[0] - 1, 40))
    vec = np.zeros(n_cut * n_cut)
    vec[even] = u[:, 0]
    return float(w[0]), vec, h


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    lead = vec[np.argmax(np.abs(vec) > 1e-12 * np.abs(vec).max())]
    return -vec if lead < 0 else vec


@dataclass(frozen=True, eq=False)
class ModelSystem:
    """Ground state of a local or two-site Phi^4 model.

    Attributes
    ----------
    kind : str
        ``"local_phi4"`` or ``"two_site_phi4"``.
    m0_sq, g, h : float
        Quadratic, quartic and inter-site couplings.
    boson_mass : float
        Mass of the number basis.
    n_cut : int
        Number states per site.
    hamiltonian : scipy.sparse.csr_matrix
    energy : float
        Ground-state energy.
    ground : ndarray
        Normalized ground state; for two sites the index is ``n1 * n_cut + n2``.
    delta : float
        ``|E0(n_cut) - E0(n_cut/2)|``.
    """

    kind: str
    m0_sq: float
    g: float
    h: float
    boson_mass: float
    n_cut: int
    hamiltonian: sp.csr_matrix
    energy: float
    ground: np.ndarray
    delta: float

    @property
    def n_sites(self) -> int:
        return 1 if self.kind == "local_phi4" else 2


_KINDS = {"local_phi4": (4096, _solve_local), "two_site_phi4": (128, _solve_two_site)}


def build_model(kind: str, m0_sq: float, g: float = 0.0, h: float = 0.0, boson_mass: float = 1.0,
                n_cut: int | None = None, tol: float = 1e-8, max_n_cut: int | None = None) -> ModelSystem:
    """Assemble a model and solve for its ground state.

    The cutoff is doubled until ``|E0(n_cut) - E0(n_cut/2)| < tol * max(1, |E0|)``.

    Parameters
    ----------
    kind : {"local_phi4", "two_site_phi4"}
    m0_sq : float
        Bare mass squared; may be negative.
    g : float
        Quartic coupling, ``g >= 0``.
    h : float
        Inter-site coupling (two-site only).
    boson_mass : float
        Positive mass of the number basis.
    n_cut : int, optional
        Starting cutoff per site (default 64 local, 32 two-site).
    tol : float
        Relative energy convergence threshold.
    max_n_cut : int, optional
        Ceiling for the doubling (default 4096 local, 128 two-site).

    Raises
    ------
    ConvergenceError
        If the ceiling is reached without convergence.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    if g < 0:
        raise ValueError("quartic coupling must be nonnegative")
    if not boson_mass > 0:
        raise ValueError("boson mass must be positive")
    if kind == "local_phi4" and h != 0:
        raise ValueError("inter-site coupling requires the two-site model")
    ceiling, solver = _KINDS[kind]
    ceiling = ceiling if max_n_cut is None else max_n_cut
    n_cut = (64 if kind == "local_phi4" else 32) if n_cut is None else int(n_cut)
    if n_cut < 8:
        raise ValueError("n_cut must be at least 8")
    args = (m0_sq, g) if kind == "local_phi4" else (m0_sq, g, h)
    e_half, _, _ = solver(*args, boson_mass, n_cut // 2)
    while True:
        e, vec, ham = solver(*args, boson_mass, n_cut)
        delta = abs(e - e_half)
        if delta < tol * max(1.0, abs(e)):
            break
        if 2 * n_cut > ceiling:
            raise ConvergenceError(f"ground energy not converged at n_cut={n_cut}", delta)
        e_half, n_cut = e, 2 * n_cut
    vec = _fix_sign(vec / np.linalg.norm(vec))
    return ModelSystem(kind, float(m0_sq), float(g), float(h), float(boson_mass), n_cut, ham, e, vec, delta)


# --- local distributions ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalDensity:
    """Single-site reduced density matrix in the number basis of ``mass``.

    ``p_phi`` and ``p_kappa`` evaluate the diagonal in the field and
    conjugate-field bases through the HG expansion of the number states.
    """

    rho: np.ndarray
    mass: float
    weights: np.ndarray = field(init=False)
    vectors: np.ndarray = field(init=False)

    def __post_init__(self):
        lam, u = np.linalg.eigh(0.5 * (self.rho + self.rho.T))
        keep = lam > 1e-30
        object.__setattr__(self, "weights", lam[keep])
        object.__setattr__(self, "vectors", u[:, keep])

    @property
    def n_cut(self) -> int:
        return self.rho.shape[0]

    def p_n(self) -> Distribution:
        p = np.clip(np.diag(self.rho).copy(), 0.0, None)
        return Distribution(np.arange(self.n_cut), p)

    def _density(self, x, mass, vectors) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        table = hg_table(self.n_cut - 1, mass, x.ravel())
        amp = vectors.T @ table
        return (self.weights @ np.abs(amp) ** 2).reshape(x.shape)

    def p_phi(self, x) -> np.ndarray:
        return self._density(x, self.mass, self.vectors)

    def p_kappa(self, x) -> np.ndarray:
        phases = (-1j) ** (np.arange(self.n_cut) % 4)
        return self._density(x, 1.0 / self.mass, self.vectors * phases[:, None])

    def extent(self, conjugate: bool = False) -> float:
        """Abscissa beyond which every basis function is negligible."""
        m = 1.0 / self.mass if conjugate else self.mass
        return (math.sqrt(2 * self.n_cut + 1) + 10.0) / math.sqrt(m)


def local_density(system: ModelSystem, site: int = 0) -> LocalDensity:
    """Reduced density matrix of one site (pure-state projector for one site)."""
    if site not in range(system.n_sites):
        raise ValueError("site index out of range")
    if system.n_sites == 1:
        rho = np.outer(system.ground, system.ground)
    else:
        v = system.ground.reshape(system.n_cut, system.n_cut)
        rho = v @ v.T if site == 0 else v.T @ v
    return LocalDensity(rho, system.boson_mass)


def local_distributions(system: ModelSystem, site: int = 0):
    """Return ``(p_phi, p_kappa, p_n)`` for one site.

    ``p_phi`` and ``p_kappa`` are vectorized callables and ``p_n`` is a
    :class:`Distribution` over boson numbers.
    """
    rho = local_density(system, site)
    return rho.p_phi, rho.p_kappa, rho.p_n()


class _TailProfile:
    """Two-sided integrated tail ``sqrt(int_{|x|>X} p)`` by Gauss-Legendre panels."""

    _nodes, _weights = leggauss(20)

    def __init__(self, density, extent: float, width: float):
        self.density = density
        self.width = width
        m = int(math.ceil(extent / width))
        self.extent = m * width
        self.edges = np.arange(m + 1) * width
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        pts = mid[:, None] + 0.5 * width * self._nodes[None, :]
        both = density(pts) + density(-pts)
        panels = 0.5 * width * both @ self._weights
        self.cum = np.append(np.cumsum(panels[::-1])[::-1], 0.0)

    @property
    def total(self) -> float:
        return float(self.cum[0])

    def __call__(self, x: float) -> float:
        if x >= self.extent:
            return 0.0
        x = max(x, 0.0)
        j = min(int(x // self.width), len(self.edges) - 2)
        b = self.edges[j + 1]
        pts = 0.5 * (x + b) + 0.5 * (b - x) * self._nodes
        part = 0.5 * (b - x) * float((self.density(pts) + self.density(-pts)) @ self._weights)
        return math.sqrt(max(part + self.cum[j + 1], 0.0))


def tail_profile(rho: LocalDensity, conjugate: bool = False) -> _TailProfile:
    """Integrated two-sided tail norm of ``p_phi`` (or ``p_kappa``) as a callable."""
    m = 1.0 / rho.mass if conjugate else rho.mass
    dens = rho.p_kappa if conjugate else rho.p_phi
    return _TailProfile(dens, rho.extent(conjugate), 0.25 / math.sqrt(m))


@dataclass(frozen=True)
class SamplingIntervals:
    """Window half-widths with equal tail norms ``eps``."""

    F: float
    K: float
    ratio: float
    n_phi: int
    flagged: bool


def optimal_sampling_intervals(system: ModelSystem | LocalDensity, site: int = 0, eps: float = 1e-6) -> SamplingIntervals:
    """Solve ``||w_F|| = ||w_K|| = eps`` on the local distributions.

    The root search runs on the integrated tail, which is monotone even when
    ``p_kappa`` oscillates.  ``flagged`` is set when the truncated number
    basis carries more weight in its top state than ``eps**2``, i.e. when the
    tail at this accuracy is not resolved by the expansion.

    Returns
    -------
    SamplingIntervals
        ``n_phi = ceil(2 F K / pi)``.
    """
    if not 1e-14 < eps < 0.1:
        raise ValueError("eps must lie in (1e-14, 0.1)")
    rho = system if isinstance(system, LocalDensity) else local_density(system, site)
    roots = []
    for conj in (False, True):
        prof = tail_profile(rho, conj)
        roots.append(brentq(lambda x: prof(x) - eps, 0.0, prof.extent, xtol=1e-13, rtol=1e-13))
    F, K = roots
    top = float(np.diag(rho.rho)[-2:].sum())
    return SamplingIntervals(F, K, K / F, int(math.ceil(2.0 * F * K / math.pi)), top > eps ** 2)


# --- optimal boson mass -------------------------------------------------------

def cutoff_from_probs(probs, eps: float) -> tuple[int, float]:
    """Smallest ``N_b`` with discarded weight ``sum_{n>=N_b} p(n) <= eps``.

    Returns
    -------
    n_b : int
    discarded : float
        The discarded weight at ``n_b`` (used to break ties between masses).
    """
    p = np.asarray(probs, dtype=float)
    tails = np.append(np.cumsum(p[::-1])[::-1], 0.0)
    n_b = int(np.argmax(tails <= eps))
    return n_b, float(tails[n_b])


@dataclass(frozen=True)
class ModelFamily:
    """Model parameters without a boson mass; :meth:`build` picks one."""

    kind: str
    m0_sq: float
    g: float = 0.0
    h: float = 0.0
    n_cut: int | None = None

    def build(self, boson_mass: float) -> ModelSystem:
        return build_model(self.kind, self.m0_sq, self.g, self.h, boson_mass, self.n_cut)


@dataclass(frozen=True, eq=False)
class CutoffTable:
    """``N_b(m, eps)`` with discarded weights, shape ``(len(masses), len(eps))``."""

    masses: np.ndarray
    eps: np.ndarray
    cutoffs: np.ndarray
    discarded: np.ndarray

    def optimal_mass(self, eps_index: int) -> float:
        """Mass minimizing ``N_b``; ties go to the smaller discarded weight."""
        keys = list(zip(self.cutoffs[:, eps_index], self.discarded[:, eps_index]))
        return float(self.masses[min(range(len(keys)), key=keys.__getitem__)])


def cutoff_vs_mass(family: ModelFamily, mass_grid: Sequence[float], eps_list: Sequence[float],
                   site: int = 0) -> CutoffTable:
    """Tabulate the boson cutoff over boson masses and truncation weights."""
    masses = np.asarray(mass_grid, dtype=float)
    eps = np.asarray(eps_list, dtype=float)
    nb = np.zeros((len(masses), len(eps)), dtype=int)
    disc = np.zeros((len(masses), len(eps)))
    for i, m in enumerate(masses):
        p = local_density(family.build(m), site).p_n().probs
        for j, e in enumerate(eps):
            nb[i, j], disc[i, j] = cutoff_from_probs(p, e)
    return CutoffTable(masses, eps, nb, disc)
