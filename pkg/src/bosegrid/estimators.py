"""scikit-learn compatible wrappers around the grid representation."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .finiterep import build, commutator_cutoff, diagonalize
from .sampling import SampledFunction, SamplingGrid, reconstruct

__all__ = ["DiscreteOscillator", "SincInterpolator"]


class DiscreteOscillator(TransformerMixin, BaseEstimator):
    """Change of basis from grid amplitudes to discrete oscillator eigenstates.

    Parameters
    ----------
    n_phi : int
        Even number of grid points.
    mass : float
        Boson mass of the grid.
    tol : float
        Commutator tolerance defining ``n_b_``.

    Attributes
    ----------
    energies_ : ndarray of shape (n_phi,)
    components_ : ndarray of shape (n_phi, n_phi)
        Eigenvectors as rows.
    n_b_ : int
        Boson cutoff of the grid.
    """

    def __init__(self, n_phi: int = 64, mass: float = 1.0, tol: float = 1e-4):
        self.n_phi = n_phi
        self.mass = mass
        self.tol = tol

    def fit(self, X=None, y=None):
        """Diagonalize the oscillator; ``X`` is only checked for its width."""
        if X is not None:
            X = check_array(X, dtype=None)
            if X.shape[1] != self.n_phi:
                raise ValueError(f"X has {X.shape[1]} features, expected n_phi={self.n_phi}")
        rep = build(int(self.n_phi), float(self.mass))
        eig = diagonalize(rep)
        self.energies_ = eig.energies
        self.components_ = eig.states.T
        self.n_b_ = commutator_cutoff(int(self.n_phi), self.tol, float(self.mass))
        self.n_features_in_ = int(self.n_phi)
        return self

    def transform(self, X):
        """Coefficients ``c_n`` of each row of grid amplitudes."""
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=None)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("X width does not match n_phi")
        return X @ self.components_.T

    def inverse_transform(self, C):
        check_is_fitted(self, "components_")
        C = check_array(C, dtype=None)
        return C @ self.components_

    def high_energy_weight(self, X) -> np.ndarray:
        """Weight above ``n_b_`` for each normalized row of ``X``."""
        C = self.transform(X)
        return np.sum(np.abs(C[:, self.n_b_:]) ** 2, axis=1)


class SincInterpolator(RegressorMixin, BaseEstimator):
    """Sinc-series regression from samples on a symmetric half-integer grid.

    ``fit`` takes the grid points as a single feature column and the sampled
    values as targets; the spacing is inferred from the points.  ``predict``
    evaluates the truncated sinc series.

    Parameters
    ----------
    rtol : float
        Allowed relative deviation of the points from a half-integer grid.
    """

    def __init__(self, rtol: float = 1e-9):
        self.rtol = rtol

    def fit(self, X, y):
        X = check_array(X)
        y = np.asarray(y)
        if X.shape[1] != 1:
            raise ValueError("X must have exactly one feature (the field value)")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one value per sample")
        phi = X[:, 0]
        order = np.argsort(phi)
        phi, y = phi[order], y[order]
        n = len(phi)
        if n < 2 or n % 2:
            raise ValueError("need an even number of samples")
        d = (phi[-1] - phi[0]) / (n - 1)
        grid = SamplingGrid(n, d, 2 * np.pi / (n * d))
        if np.max(np.abs(phi - grid.phi)) > self.rtol * grid.F:
            raise ValueError("samples do not lie on a symmetric half-integer grid")
        self.grid_ = grid
        self.samples_ = SampledFunction(grid, y)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "samples_")
        X = check_array(X)
        out = reconstruct(self.samples_, X[:, 0])
        return out.real if np.all(np.isreal(self.samples_.values)) else out
