"""Hermite-Gauss functions, their Fourier transforms and tail weights.

The n-th Hermite-Gauss (HG) function of mass ``m0`` is the harmonic
oscillator eigenfunction

    phi_n(phi) = (m0/pi)^(1/4) / sqrt(2^n n!) H_n(sqrt(m0) phi) exp(-m0 phi^2 / 2)

It is always evaluated through the normalized three-term recurrence with a
running exponent, so orders above 1000 stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "HGBasis",
    "TailWeights",
    "QuadratureError",
    "eval_hg",
    "eval_hg_ft",
    "hg_table",
    "tail_weight",
    "tail_moment",
    "hg_tail_weights",
    "tail_bound",
    "tail_bound_grid",
]

_RESCALE = 2.0 ** 500
_LOG_RESCALE = 500.0 * math.log(2.0)


class QuadratureError(ArithmeticError):
    """Raised when a quadrature rule fails to reach its tolerance.

    Attributes
    ----------
    achieved : float
        Estimated absolute error at the point of failure.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class HGBasis:
    """Set of HG functions of a given mass up to ``max_order``.

    Parameters
    ----------
    mass : float
        Boson mass ``m0 > 0``.
    max_order : int
        Highest order evaluated by :meth:`table`.
    """

    mass: float
    max_order: int

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.max_order < 0:
            raise ValueError("max_order must be nonnegative")

    def __call__(self, n: int, phi) -> np.ndarray:
        return eval_hg(n, self.mass, phi)

    def table(self, phi) -> np.ndarray:
        """Return ``phi_n(phi)`` for ``n = 0..max_order``, shape (max_order+1, ...)."""
        return hg_table(self.max_order, self.mass, phi)

    def ft(self, n: int, kappa) -> np.ndarray:
        return eval_hg_ft(n, self.mass, kappa)


@dataclass(frozen=True)
class TailWeights:
    """Tail data of a wavefunction outside ``[-F, F]`` and ``[-K, K]``.

    Attributes
    ----------
    w_F, w_K : float
        L2 norm of the function outside the field window and of its Fourier
        transform outside the conjugate window.
    r_F, r_K : float
        Same norms for ``phi f(phi)`` and ``kappa fhat(kappa)``.
    boundary_f : tuple of float
        ``(|f(-F)|^2, |f(F)|^2)``.
    boundary_fhat : tuple of float
        ``(|fhat(-K)|^2, |fhat(K)|^2)``.
    """

    w_F: float
    w_K: float
    r_F: float
    r_K: float
    boundary_f: tuple[float, float]
    boundary_fhat: tuple[float, float]

    def __post_init__(self):
        vals = (self.w_F, self.w_K, self.r_F, self.r_K, *self.boundary_f, *self.boundary_fhat)
        if any(v < 0 or not np.isfinite(v) for v in vals):
            raise ValueError("tail weights must be finite and nonnegative")

    @classmethod
    def zero(cls) -> "TailWeights":
        return cls(0.0, 0.0, 0.0, 0.0, (0.0, 0.0), (0.0, 0.0))


def _check_mass(m0: float) -> float:
    m0 = float(m0)
    if not m0 > 0:
        raise ValueError("mass must be positive")
    return m0


def _hg_steps(n_max: int, m0: float, phi):
    """Yield ``(k, phi_k(phi))`` for ``k = 0..n_max`` using the scaled recurrence."""
    y = math.sqrt(m0) * np.asarray(phi, dtype=float)
    log_scale = 0.25 * math.log(m0 / math.pi) - 0.5 * y * y
    p_prev = np.zeros_like(y)
    p = np.ones_like(y)
    with np.errstate(divide="ignore", under="ignore"):
        for k in range(n_max + 1):
            if k > 0:
                p_prev, p = p, math.sqrt(2.0 / k) * y * p - math.sqrt((k - 1) / k) * p_prev
                big = np.abs(p) > _RESCALE
                if np.any(big):
                    p = np.where(big, p / _RESCALE, p)
                    p_prev = np.where(big, p_prev / _RESCALE, p_prev)
                    log_scale = np.where(big, log_scale + _LOG_RESCALE, log_scale)
            yield k, np.sign(p) * np.exp(np.log(np.abs(p)) + log_scale)


def eval_hg(n: int, m0: float, phi) -> np.ndarray:
    """Evaluate the HG function ``phi_n`` of mass ``m0``.

    Parameters
    ----------
    n : int
        Order, ``n >= 0``.
    m0 : float
        Mass, ``m0 > 0``.
    phi : array_like
        Field values.

    Returns
    -------
    ndarray or float
        ``phi_n(phi)``; scalar input gives a scalar.
    """
    if n < 0:
        raise ValueError("order must be nonnegative")
    m0 = _check_mass(m0)
    out = None
    for _, out in _hg_steps(int(n), m0, phi):
        pass
    return out[()] if np.ndim(out) == 0 else out


def hg_table(n_max: int, m0: float, phi) -> np.ndarray:
    """Return all orders ``0..n_max`` stacked along the first axis."""
    if n_max < 0:
        raise ValueError("order must be nonnegative")
    m0 = _check_mass(m0)
    phi = np.asarray(phi, dtype=float)
    out = np.empty((n_max + 1,) + phi.shape)
    for k, v in _hg_steps(int(n_max), m0, phi):
        out[k] = v
    return out


def eval_hg_ft(n: int, m0: float, kappa) -> np.ndarray:
    """Fourier transform of ``phi_n`` (kernel ``exp(-i kappa phi)/sqrt(2 pi)``).

    The transform is ``(-i)^n`` times the HG function of mass ``1/m0``.
    """
    m0 = _check_mass(m0)
    return (-1j) ** (n % 4) * eval_hg(n, 1.0 / m0, kappa)


# --- tail quadrature -------------------------------------------------------

def _exp_sinh(func, a: float, rtol: float = 1e-13, atol: float = 1e-300, max_level: int = 12) -> float:
    """Integrate ``func`` over ``[a, inf)`` with the exp-sinh double-exponential rule."""
    t_max = 4.5
    h = 0.5
    prev = None
    for _ in range(max_level):
        t = np.arange(-t_max, t_max + 0.5 * h, h)
        u = 0.5 * math.pi * np.sinh(t)
        x = a + np.exp(u)
        w = 0.5 * math.pi * np.cosh(t) * np.exp(u)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            vals = func(x) * w
        vals = np.where(np.isfinite(vals), vals, 0.0)
        total = h * float(np.sum(vals))
        if prev is not None and abs(total - prev) <= max(rtol * abs(total), atol):
            return total
        prev = total
        h *= 0.5
    raise QuadratureError("exp-sinh rule did not converge", abs(total - prev))


def _gauss_panels(func, a: float, b: float, n_panels: int, order: int = 24) -> float:
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return float(np.dot(w, func(x)))


def tail_moment(n: int, m0: float, F: float, power: int = 0, atol: float = 1e-14) -> float:
    """Return ``(int_{|phi|>F} phi^(2 power) phi_n(phi)^2 dphi)^(1/2)``.

    ``power=0`` gives the tail weight, ``power=1`` the weight of
    ``phi * phi_n`` used in the sampling bounds.
    """
    m0 = _check_mass(m0)
    if not F > 0:
        raise ValueError("window half-width must be positive")
    # mass scaling to unit mass: y = sqrt(m0) phi
    Y = F * math.sqrt(m0)

    def integrand(y):
        return y ** (2 * power) * eval_hg(n, 1.0, y) ** 2

    turning = math.sqrt(2 * n + 1) + 2.0
    total = 0.0
    start = Y
    if Y < turning:
        n_pan = max(2, int(math.ceil((turning - Y) * math.sqrt(2 * n + 1))))
        coarse = _gauss_panels(integrand, Y, turning, n_pan)
        fine = _gauss_panels(integrand, Y, turning, 2 * n_pan)
        if abs(fine - coarse) > max(atol ** 2, 1e-13 * abs(fine)):
            raise QuadratureError("panel Gauss rule did not converge", abs(fine - coarse))
        total += fine
        start = turning
    total += _exp_sinh(integrand, start)
    return math.sqrt(max(2.0 * total, 0.0) / m0 ** power)


def tail_weight(n: int, m0: float, F: float) -> float:
    """Tail weight ``||w_F||`` of ``phi_n`` outside ``[-F, F]``.

    Parameters
    ----------
    n : int
        HG order.
    m0 : float
        Mass.
    F : float
        Window half-width.

    Returns
    -------
    float
        Square root of the integrated ``phi_n^2`` beyond ``|phi| = F``.
        The conjugate-side weight is ``tail_weight(n, 1/m0, K)``.

    Raises
    ------
    QuadratureError
        If the quadrature fails to converge.
    """
    return tail_moment(n, m0, F, power=0)


def hg_tail_weights(n: int, m0: float, F: float, K: float) -> TailWeights:
    """Collect all tail data of ``phi_n`` for windows ``F`` and ``K``."""
    f_edge = float(eval_hg(n, m0, F)) ** 2
    k_edge = float(eval_hg(n, 1.0 / m0, K)) ** 2
    return TailWeights(
        w_F=tail_moment(n, m0, F, 0),
        w_K=tail_moment(n, 1.0 / m0, K, 0),
        r_F=tail_moment(n, m0, F, 1),
        r_K=tail_moment(n, 1.0 / m0, K, 1),
        boundary_f=(f_edge, f_edge),
        boundary_fhat=(k_edge, k_edge),
    )


# --- asymptotic tail estimates ---------------------------------------------

def tail_bound(n: int, L: float) -> float:
    """Leading-term tail estimate for window parameter ``L``.

    Returns the square root of ``2^n L^(2n) exp(-L^2) / (L sqrt(pi) n!)``,
    which bounds the HG tail weight for ``F = L / sqrt(m0)``.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    log_sq = n * math.log(2.0 * L * L) - L * L - math.log(L * math.sqrt(math.pi)) - gammaln(n + 1)
    return math.exp(0.5 * log_sq)


def tail_bound_grid(n: int, n_phi: int) -> float:
    """Closed-form tail estimate on a grid of ``n_phi`` points.

    Evaluates

        exp(-pi N/4) N^((2n-1)/4) n^(-n/2) (e pi)^(n/2) n^(-1/4) / pi^(3/2)

    At ``n = 0`` the ``n``-power factors are set to one.
    """
    if n_phi < 2:
        raise ValueError("n_phi must be at least 2")
    if n < 0:
        raise ValueError("order must be nonnegative")
    N = float(n_phi)
    log_v = -0.25 * math.pi * N + 0.25 * (2 * n - 1) * math.log(N) + 0.5 * n * (math.log(math.pi) + 1.0)
    if n > 0:
        log_v -= 0.5 * n * math.log(n) + 0.25 * math.log(n)
    return math.exp(log_v) / (math.pi * math.sqrt(math.pi))
