"""Discrete probability distributions shared by the measurement-facing modules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Distribution"]


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probabilities on a discrete support.

    Parameters
    ----------
    support : array_like
        Grid values or integers.
    probs : array_like
        Nonnegative probabilities, same length as ``support``.
    tol : float
        Allowed deficit of the total below one.  A surplus above one is
        limited to ``1e-10`` (roundoff).
    """

    support: np.ndarray
    probs: np.ndarray
    tol: float = 1e-8

    def __post_init__(self):
        support = np.asarray(self.support)
        probs = np.asarray(self.probs, dtype=float)
        if support.shape != probs.shape or probs.ndim != 1:
            raise ValueError("support and probs must be 1-d arrays of equal length")
        if np.any(probs < -1e-15):
            raise ValueError("probabilities must be nonnegative")
        total = float(probs.sum())
        if not (1.0 - self.tol <= total <= 1.0 + 1e-10):
            raise ValueError(f"probabilities sum to {total!r}, outside [1-{self.tol:g}, 1]")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    def __len__(self) -> int:
        return len(self.probs)

    def total(self) -> float:
        return float(self.probs.sum())

    def tail_from(self, index: int) -> float:
        """Probability carried by entries ``index, index+1, ...``."""
        return float(self.probs[index:].sum())

    def moment(self, power: int = 2) -> float:
        return float(np.dot(self.probs, np.asarray(self.support, dtype=float) ** power))
