"""Well-sampled wavefunctions with a large high-energy boson weight.

``f`` is a combination of symmetric sinc pairs centred on half-integer grid
positions ``+-q_k`` of a 64-point grid.  Each pair is sign-normalized,

    fbar_q(phi) = sin(pi q) [sinc(x - q) + sinc(x + q)] = -(2 q / pi) cos(pi x) / (x^2 - q^2),

with ``x = phi / delta_phi``.  Expanding ``q / (x^2 - q^2)`` in ``1/x^2``
shows that ``sum c_k q_k = sum c_k q_k^3 = sum c_k q_k^5 = 0`` removes the
``x^-2, x^-4, x^-6`` terms, leaving an ``x^-8`` decay.  ``g = c_g f s``
multiplies by a smooth window ``s`` with exponential decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial.legendre import leggauss

from .distribution import Distribution
from .finiterep import Eigensystem, FiniteRep, diagonalize
from .hgfunc import TailWeights, hg_table
from .sampling import FunctionDescriptor, SamplingGrid

__all__ = [
    "SincCombo",
    "WindowedCombo",
    "DEFAULT_Q",
    "cancellation_coefficients",
    "build_f",
    "build_g",
    "window",
    "boson_spectrum",
    "high_energy_weight",
    "discrete_spectrum_mismatch",
]

DEFAULT_Q = tuple(13.5 + k for k in range(8))
_GL_X, _GL_W = leggauss(30)


def _panels(func, a: float, b: float, width: float) -> float:
    m = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, m + 1)
    half = 0.5 * np.diff(edges)
    pts = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(func(pts.ravel())).reshape(pts.shape)
    return float(np.sum(half[:, None] * _GL_W[None, :] * vals))


def _panel_nodes(a: float, b: float, width: float):
    m = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, m + 1)
    half = 0.5 * np.diff(edges)
    pts = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _GL_X[None, :]
    return pts.ravel(), (half[:, None] * _GL_W[None, :]).ravel()


def cancellation_coefficients(q_list) -> np.ndarray:
    """Least-norm correction of the all-ones vector onto ``sum c q^{1,3,5} = 0``.

    The projection is carried out in exact rational arithmetic (the ``q`` are
    half-integers) and the result is scaled to unit Euclidean norm.

    Raises
    ------
    ValueError
        If the ``q`` are not distinct (singular constraint system).
    """
    qs = [Fraction(q).limit_denominator(1000) for q in q_list]
    if len(set(qs)) != len(qs) or len(qs) < 4:
        raise ValueError("need at least four distinct q values")
    rows = [[q ** p for q in qs] for p in (1, 3, 5)]
    gram = [[sum(a * b for a, b in zip(ri, rj)) for rj in rows] for ri in rows]
    rhs = [sum(r) for r in rows]
    aug = [g + [b] for g, b in zip(gram, rhs)]
    for i in range(3):
        if aug[i][i] == 0:
            raise ValueError("singular constraint system")
        for j in range(i + 1, 3):
            fac = aug[j][i] / aug[i][i]
            aug[j] = [x - fac * y for x, y in zip(aug[j], aug[i])]
    y = [Fraction(0)] * 3
    for i in (2, 1, 0):
        y[i] = (aug[i][3] - sum(aug[i][j] * y[j] for j in range(i + 1, 3))) / aug[i][i]
    c = np.array([float(1 - sum(rows[i][k] * y[i] for i in range(3))) for k in range(len(qs))])
    return c / np.linalg.norm(c)


@dataclass(frozen=True, eq=False)
class SincCombo:
    """Band-limited combination of sign-normalized sinc pairs.

    Attributes
    ----------
    q_list : ndarray
        Half-integer pair positions in grid units.
    c_list : ndarray
        Pair coefficients with unit Euclidean norm.
    grid : SamplingGrid
    norm : float
        Overall factor ``1/sqrt(2 delta_phi)`` giving unit L2 norm.
    asymptotic_slope : float
        Fitted log-log slope of ``|f|`` at the peaks of ``cos(pi x)`` on ``[3F, 30F]``.
    """

    q_list: np.ndarray
    c_list: np.ndarray
    grid: SamplingGrid
    norm: float
    asymptotic_slope: float = field(default=float("nan"))

    def cancellation_residuals(self) -> np.ndarray:
        """``|sum c q^p| / sum |c| q^p`` for ``p = 1, 3, 5``."""
        q, c = self.q_list, self.c_list
        return np.array([abs(np.dot(c, q ** p)) / np.dot(np.abs(c), q ** p) for p in (1, 3, 5)])

    def f(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        x = phi / self.grid.delta_phi
        q, c = self.q_list, self.c_list
        out = np.empty_like(x)
        far = np.abs(x) > 2.0 * q.max()
        near = ~far
        xs = x[near]
        sgn = np.sin(math.pi * q)
        out[near] = np.sum((c * sgn)[:, None] * (np.sinc(xs[None, :] - q[:, None]) + np.sinc(xs[None, :] + q[:, None])), axis=0)
        xb = x[far]
        # remainder after the cancelled orders: q/(x^2-q^2) -> q^7 / (x^6 (x^2-q^2))
        tail = np.sum(c[:, None] * q[:, None] ** 7 / (xb[None, :] ** 6 * (xb[None, :] ** 2 - q[:, None] ** 2)), axis=0)
        out[far] = -2.0 / math.pi * np.cos(math.pi * xb) * tail
        return self.norm * out

    def fhat(self, kappa) -> np.ndarray:
        k = np.asarray(kappa, dtype=float)
        d = self.grid.delta_phi
        q, c = self.q_list, self.c_list
        terms = 2.0 * (c * np.sin(math.pi * q))[:, None] * np.cos(np.outer(q * d, k.ravel()))
        val = (d / math.sqrt(2 * math.pi)) * self.norm * terms.sum(axis=0)
        val = val.reshape(k.shape)
        return np.where(np.abs(k) <= self.grid.K, val, 0.0)

    def field_tail(self) -> float:
        """``||w_F||`` from panel quadrature over ``[F, 30F]`` (beyond is below 1e-28)."""
        F = self.grid.F
        return math.sqrt(2.0 * _panels(lambda x: self.f(x) ** 2, F, 30 * F, 0.5 * self.grid.delta_phi))

    def tails(self) -> TailWeights:
        F, K = self.grid.F, self.grid.K
        r_F = math.sqrt(2.0 * _panels(lambda x: (x * self.f(x)) ** 2, F, 30 * F, 0.5 * self.grid.delta_phi))
        edge = float(self.f(np.array([F]))[0]) ** 2
        edge_k = float(self.fhat(np.array([K]))[0]) ** 2
        return TailWeights(self.field_tail(), 0.0, r_F, 0.0, (edge, edge), (edge_k, edge_k))

    def descriptor(self) -> FunctionDescriptor:
        return FunctionDescriptor(self.f, self.fhat, self.tails(), "sinc_combo")

    def boson_amplitudes(self, n_max: int, m0: float = 1.0) -> np.ndarray:
        """``<n|f>`` via the conjugate side, exact on the band ``[-K, K]``."""
        K = self.grid.K
        k, w = _panel_nodes(-K, K, 0.25)
        table = hg_table(n_max, 1.0 / m0, k)
        n = np.arange(n_max + 1)
        # <n|f> = int conj(fhat_n) fhat, fhat_n = (-i)^n phi_n(kappa; 1/m0)
        return (1j ** (n % 4)) * (table @ (w * self.fhat(k)))


def _envelope_slope(combo: SincCombo) -> float:
    F, d = combo.grid.F, combo.grid.delta_phi
    x = np.arange(math.ceil(3 * F / d), math.floor(30 * F / d) + 1, dtype=float)
    vals = np.abs(combo.f(x * d))
    return float(np.polyfit(np.log(x), np.log(vals), 1)[0])


def build_f(n_phi: int = 64, q_list=DEFAULT_Q, m0: float = 1.0) -> SincCombo:
    """Build the normalized sinc combination and verify its ``|phi|^-8`` decay.

    Raises
    ------
    ArithmeticError
        If the fitted envelope slope differs from ``-8`` by more than 0.2.
    """
    grid = SamplingGrid.from_mass(n_phi, m0)
    q = np.asarray(q_list, dtype=float)
    if np.any(np.abs(q - np.round(q - 0.5) - 0.5) > 1e-12):
        raise ValueError("pair positions must be half-integers")
    if q.max() >= n_phi / 2:
        raise ValueError("pair positions must lie inside the grid")
    c = cancellation_coefficients(q)
    combo = SincCombo(q, c, grid, 1.0 / math.sqrt(2.0 * grid.delta_phi))
    slope = _envelope_slope(combo)
    if abs(slope + 8.0) > 0.2:
        raise ArithmeticError(f"envelope slope {slope:.3f} differs from -8")
    return SincCombo(q, c, grid, combo.norm, slope)


def window(phi, L: float, sigma: float = 0.4) -> np.ndarray:
    """Smooth box ``1 / ((e^{-(phi+L)/sigma}+1)^2 (e^{(phi-L)/sigma}+1)^2)``.

    Far outside ``[-L, L]`` it decays as ``exp(-2 |phi| / sigma)``.
    """
    phi = np.asarray(phi, dtype=float)
    with np.errstate(over="ignore"):
        a = np.exp(-(phi + L) / sigma) + 1.0
        b = np.exp((phi - L) / sigma) + 1.0
        return 1.0 / (a * a * b * b)


@dataclass(frozen=True, eq=False)
class WindowedCombo:
    """``g = c_g f s`` with ``s`` the smooth window of width ``L = F``."""

    base: SincCombo
    sigma: float
    c_g: float
    extent: float
    nodes: np.ndarray = field(repr=False)
    weighted: np.ndarray = field(repr=False)

    @property
    def grid(self) -> SamplingGrid:
        return self.base.grid

    def f(self, phi) -> np.ndarray:
        return self.c_g * self.base.f(phi) * window(phi, self.grid.F, self.sigma)

    def fhat(self, kappa) -> np.ndarray:
        """Cosine transform of the even function ``g`` by panel quadrature."""
        k = np.asarray(kappa, dtype=float)
        out = (2.0 / math.sqrt(2 * math.pi)) * (np.cos(np.outer(k.ravel(), self.nodes)) @ self.weighted)
        return out.reshape(k.shape)

    def field_tail(self) -> float:
        F = self.grid.F
        return math.sqrt(2.0 * _panels(lambda x: self.f(x) ** 2, F, self.extent, 0.5 * self.grid.delta_phi))

    def conjugate_tail(self, kappa_max: float | None = None) -> float:
        K = self.grid.K
        top = K + 40.0 if kappa_max is None else kappa_max
        return math.sqrt(2.0 * _panels(lambda k: self.fhat(k) ** 2, K, top, 0.5))

    def descriptor(self) -> FunctionDescriptor:
        return FunctionDescriptor(self.f, self.fhat, None, "windowed_combo")

    def boson_amplitudes(self, n_max: int, m0: float = 1.0) -> np.ndarray:
        """``<n|g>`` by field-side quadrature over the support of ``g``."""
        x, w = _panel_nodes(-self.extent, self.extent, 0.5 * self.grid.delta_phi)
        table = hg_table(n_max, m0, x)
        return table @ (w * self.f(x))


def build_g(f: SincCombo, sigma: float = 0.4) -> WindowedCombo:
    """Multiply ``f`` by the smooth window with ``L = F`` and renormalize."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    F = f.grid.F
    # the window falls below e^-40 of its plateau here
    extent = F + 20.0 * sigma
    width = 0.5 * f.grid.delta_phi
    raw = _panels(lambda x: (f.f(x) * window(x, F, sigma)) ** 2, -extent, extent, width)
    c_g = 1.0 / math.sqrt(raw)
    nodes, weights = _panel_nodes(0.0, extent, width)
    weighted = weights * c_g * f.f(nodes) * window(nodes, F, sigma)
    return WindowedCombo(f, sigma, c_g, extent, nodes, weighted)


def boson_spectrum(fn, n_max: int = 200, m0: float = 1.0) -> Distribution:
    """Boson distribution ``p(n) = |<n|fn>|^2`` for ``n <= n_max``."""
    if not 0 <= n_max <= 200:
        raise ValueError("n_max must lie in [0, 200]")
    amps = fn.boson_amplitudes(n_max, m0)
    return Distribution(np.arange(n_max + 1), np.abs(amps) ** 2, tol=1e-6)


def high_energy_weight(fn, n_b: int, n_max: int = 200) -> float:
    """``1 - W_{N_b}`` with ``W_{N_b} = sum_{n<N_b} p(n)``."""
    p = boson_spectrum(fn, n_max).probs
    return float(1.0 - p[:n_b].sum())


def discrete_spectrum_mismatch(fn, rep: FiniteRep, eig: Eigensystem | None = None):
    """Boson distribution against its finite-space counterpart.

    Returns
    -------
    true, discrete : Distribution
        ``p(n) = |<n|fn>|^2`` and ``|<phi~_n|fn~>|^2`` for ``n < N``, where
        ``fn~`` holds the normalized samples ``sqrt(dphi) fn(phi_i)``.
    """
    if rep.n_phi > 201:
        raise ValueError("the continuum spectrum is limited to n <= 200")
    eig = diagonalize(rep) if eig is None else eig
    vec = math.sqrt(rep.grid.delta_phi) * np.asarray(fn.f(rep.phi), dtype=float)
    vec = vec / np.linalg.norm(vec)
    disc = (eig.states.T @ vec) ** 2
    true = np.abs(fn.boson_amplitudes(rep.n_phi - 1, rep.mass)) ** 2
    n = np.arange(rep.n_phi)
    return Distribution(n, true, tol=1e-3), Distribution(n, disc)
