"""Sinc reconstruction on half-integer grids, aliasing and sampling bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hgfunc import TailWeights, eval_hg, eval_hg_ft, hg_tail_weights

__all__ = [
    "SamplingGrid",
    "SampledFunction",
    "FunctionDescriptor",
    "AliasError",
    "fft_matrix",
    "to_conjugate",
    "to_field",
    "reconstruct",
    "sample",
    "sampling_error_bound",
    "alias",
    "alias_ft",
    "fft_vs_continuous_error",
    "lattice_error_bound",
    "hg_descriptor",
]


class AliasError(ArithmeticError):
    """Raised when an alias series does not converge."""


@dataclass(frozen=True)
class SamplingGrid:
    """Symmetric half-integer grid with ``n_points`` field and conjugate points.

    Parameters
    ----------
    n_points : int
        Even number of grid points ``N``.
    delta_phi, delta_kappa : float
        Field and conjugate spacings with ``delta_phi * delta_kappa = 2 pi / N``.
    """

    n_points: int
    delta_phi: float
    delta_kappa: float

    def __post_init__(self):
        if self.n_points < 2 or self.n_points % 2:
            raise ValueError("n_points must be an even integer >= 2")
        if not (self.delta_phi > 0 and self.delta_kappa > 0):
            raise ValueError("grid spacings must be positive")
        prod = self.delta_phi * self.delta_kappa * self.n_points / (2 * math.pi)
        if abs(prod - 1.0) > 1e-12:
            raise ValueError("delta_phi * delta_kappa must equal 2 pi / n_points")

    @classmethod
    def from_mass(cls, n_points: int, mass: float = 1.0) -> "SamplingGrid":
        """Grid whose conjugate/field window ratio equals ``mass``."""
        if not mass > 0:
            raise ValueError("mass must be positive")
        if n_points < 2 or n_points % 2:
            raise ValueError("n_points must be an even integer >= 2")
        return cls(
            n_points,
            math.sqrt(2 * math.pi / (n_points * mass)),
            math.sqrt(2 * math.pi * mass / n_points),
        )

    @classmethod
    def from_windows(cls, n_points: int, F: float) -> "SamplingGrid":
        """Grid covering ``[-F, F]`` with ``n_points`` points."""
        d_phi = 2.0 * F / n_points
        return cls(n_points, d_phi, 2 * math.pi / (n_points * d_phi))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_points) - 0.5 * (self.n_points - 1)

    @property
    def phi(self) -> np.ndarray:
        return self.indices * self.delta_phi

    @property
    def kappa(self) -> np.ndarray:
        return self.indices * self.delta_kappa

    @property
    def F(self) -> float:
        return 0.5 * self.n_points * self.delta_phi

    @property
    def K(self) -> float:
        return 0.5 * self.n_points * self.delta_kappa

    @property
    def mass(self) -> float:
        return self.delta_kappa / self.delta_phi


@dataclass
class SampledFunction:
    """Raw samples ``f(phi_i)`` (no ``sqrt(delta_phi)`` factor) on a grid."""

    grid: SamplingGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("values must have one entry per grid point")

    def norm(self) -> float:
        """Discrete L2 norm ``sqrt(delta_phi * sum |f_i|^2)``."""
        return math.sqrt(self.grid.delta_phi * float(np.sum(np.abs(self.values) ** 2)))


@dataclass
class FunctionDescriptor:
    """A wavefunction given by ``f``, its Fourier transform and its tail data."""

    f: Callable[[np.ndarray], np.ndarray]
    fhat: Callable[[np.ndarray], np.ndarray]
    tails: TailWeights | None = None
    name: str = field(default="function")


def hg_descriptor(n: int, m0: float, F: float | None = None, K: float | None = None) -> FunctionDescriptor:
    """Descriptor of the HG function ``phi_n`` with tails on ``[-F,F]``/``[-K,K]``."""
    tails = hg_tail_weights(n, m0, F, K) if F is not None and K is not None else None
    return FunctionDescriptor(
        f=lambda x: eval_hg(n, m0, x),
        fhat=lambda k: eval_hg_ft(n, m0, k),
        tails=tails,
        name=f"hg{n}",
    )


# --- finite Fourier transform ----------------------------------------------

def fft_matrix(n_points: int) -> np.ndarray:
    """Unitary with entries ``exp(+2 pi i j p / N) / sqrt(N)`` on half-integer ``j, p``."""
    idx = np.arange(n_points) - 0.5 * (n_points - 1)
    return np.exp(2j * math.pi * np.outer(idx, idx) / n_points) / math.sqrt(n_points)


def _half_integer_dft(x: np.ndarray, sign: int) -> np.ndarray:
    # sum_p exp(sign 2 pi i j p / N) x_p with j, p = j' - c, p' - c
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    c = 0.5 * (n - 1)
    k = np.arange(n)
    ramp = np.exp(-sign * 2j * math.pi * c * k / n)
    shape = (n,) + (1,) * (x.ndim - 1)
    core = np.fft.ifft(x * ramp.reshape(shape), axis=0) * n if sign > 0 else np.fft.fft(x * ramp.reshape(shape), axis=0)
    const = np.exp(sign * 2j * math.pi * c * c / n)
    return const * ramp.reshape(shape) * core / math.sqrt(n)


def to_field(x: np.ndarray) -> np.ndarray:
    """Apply the finite Fourier transform ``F`` (kernel ``exp(+2 pi i j p/N)``)."""
    return _half_integer_dft(x, +1)


def to_conjugate(x: np.ndarray) -> np.ndarray:
    """Apply ``F^-1``; maps ``sqrt(dphi) f(phi_j)`` to ``sqrt(dkappa) fhat(kappa_p)``."""
    return _half_integer_dft(x, -1)


# --- reconstruction ---------------------------------------------------------

def sample(f: Callable[[np.ndarray], np.ndarray], grid: SamplingGrid) -> SampledFunction:
    """Sample a callable at the field grid points."""
    return SampledFunction(grid, f(grid.phi))


def reconstruct(s: SampledFunction, phi) -> np.ndarray:
    """Truncated sinc series ``sum_i f(phi_i) sinc((phi - phi_i)/delta_phi)``.

    Parameters
    ----------
    s : SampledFunction
        Grid samples.
    phi : array_like
        Evaluation points.

    Returns
    -------
    ndarray
        Reconstructed complex amplitudes with the shape of ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    arg = (phi.reshape(-1, 1) - s.grid.phi[None, :]) / s.grid.delta_phi
    out = np.sinc(arg) @ s.values
    return out.reshape(phi.shape)


# --- bounds -------------------------------------------------------------------

def sampling_error_bound(t: TailWeights, F: float, K: float) -> tuple[float, float]:
    """Field-side and conjugate-side bounds on the sinc reconstruction error.

    Returns
    -------
    tuple of float
        ``w_K + w_F + pi r_K/(2K) + sqrt(pi/(2K) (|f(-F)|^2+|f(F)|^2))`` and
        its conjugate counterpart with ``F`` and ``K`` exchanged.
    """
    if not (F > 0 and K > 0):
        raise ValueError("window half-widths must be positive")
    field_side = t.w_K + t.w_F + math.pi * t.r_K / (2 * K) + math.sqrt(math.pi / (2 * K) * sum(t.boundary_f))
    conj_side = t.w_K + t.w_F + math.pi * t.r_F / (2 * F) + math.sqrt(math.pi / (2 * F) * sum(t.boundary_fhat))
    return field_side, conj_side


def _alias_sum(func, points: np.ndarray, period: float, scale: float, max_periods: int = 64) -> np.ndarray:
    total = np.asarray(func(points), dtype=complex).copy()
    for n in range(1, max_periods + 1):
        plus = np.asarray(func(points + n * period), dtype=complex)
        minus = np.asarray(func(points - n * period), dtype=complex)
        sign = -1.0 if n % 2 else 1.0
        total += sign * (plus + minus)
        if max(np.max(np.abs(plus)), np.max(np.abs(minus))) * scale < 1e-16:
            return scale * total
    raise AliasError(f"alias series did not converge within {max_periods} periods")


def alias(desc: FunctionDescriptor, grid: SamplingGrid) -> SampledFunction:
    """Anti-periodized field samples ``sqrt(dphi) sum_n (-1)^n f(phi_i + n N dphi)``."""
    s = math.sqrt(grid.delta_phi)
    vals = _alias_sum(desc.f, grid.phi, grid.n_points * grid.delta_phi, s)
    return SampledFunction(grid, vals)


def alias_ft(desc: FunctionDescriptor, grid: SamplingGrid) -> SampledFunction:
    """Anti-periodized conjugate samples; ``values`` are indexed by ``kappa_p``."""
    s = math.sqrt(grid.delta_kappa)
    vals = _alias_sum(desc.fhat, grid.kappa, grid.n_points * grid.delta_kappa, s)
    return SampledFunction(grid, vals)


def fft_vs_continuous_error(desc: FunctionDescriptor, grid: SamplingGrid):
    """Compare the finite Fourier transform of samples with the exact transform.

    Returns
    -------
    tuple
        ``((lhs_k, rhs), (lhs_phi, rhs))`` where ``lhs_k`` is
        ``dkappa sum_p |(F f)(kappa_p) - fhat(kappa_p)|^2``, ``lhs_phi`` the
        field-side analogue, and ``rhs`` the tail expression
        ``2(w_F^2 + w_K^2) + pi/K (|f(-F)|^2+|f(F)|^2) + pi/F (|fhat(-K)|^2+|fhat(K)|^2)``.
    """
    if desc.tails is None:
        raise ValueError("descriptor needs tail weights")
    t = desc.tails
    dphi, dk = grid.delta_phi, grid.delta_kappa
    f_s = np.asarray(desc.f(grid.phi), dtype=complex)
    fh_s = np.asarray(desc.fhat(grid.kappa), dtype=complex)
    lhs_k = float(np.sum(np.abs(to_conjugate(math.sqrt(dphi) * f_s) - math.sqrt(dk) * fh_s) ** 2))
    lhs_phi = float(np.sum(np.abs(to_field(math.sqrt(dk) * fh_s) - math.sqrt(dphi) * f_s) ** 2))
    rhs = (2 * (t.w_F ** 2 + t.w_K ** 2) + math.pi / grid.K * sum(t.boundary_f)
           + math.pi / grid.F * sum(t.boundary_fhat))
    return (lhs_k, rhs), (lhs_phi, rhs)


def lattice_error_bound(local_tails: Sequence[TailWeights], F: float, K: float, n_sites: int,
                        r_K_joint: float, r_F_joint: float) -> tuple[float, float]:
    """Sampling error bound for an ``n_sites`` lattice wavefunction.

    Parameters
    ----------
    local_tails : sequence of TailWeights
        Tails of each site's reduced density (``boundary_*`` hold the
        diagonal density at the window edges).
    F, K : float
        Window half-widths.
    n_sites : int
        Number of sites ``N``.
    r_K_joint, r_F_joint : float
        Weights of ``kappa_1...kappa_N fhat`` and ``phi_1...phi_N f`` outside
        the ``N``-dimensional windows.

    Returns
    -------
    tuple of float
        Field-side and conjugate-side bounds.
    """
    if n_sites < 1 or len(local_tails) != n_sites:
        raise ValueError("need one TailWeights per site")
    if not (F > 0 and K > 0):
        raise ValueError("window half-widths must be positive")
    c = (math.pi ** 2 / 4 + 1) ** (n_sites / 2)
    field_side = sum(t.w_K + t.w_F + math.sqrt(math.pi / (2 * K) * sum(t.boundary_f)) for t in local_tails)
    conj_side = sum(t.w_F + t.w_K + math.sqrt(math.pi / (2 * F) * sum(t.boundary_fhat)) for t in local_tails)
    return field_side + c * r_K_joint / K ** n_sites, conj_side + c * r_F_joint / F ** n_sites
