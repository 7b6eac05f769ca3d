"""scikit-learn style wrappers.

``TraceEstimator`` maps state angles to simulated estimates of Tr(rho_A^n);
fitting it against exact traces yields the slope metric. ``SpectrumTransformer``
turns rows of traces of powers into eigenvalues.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .noise import load_noise
from .spectroscopy import ALGORITHMS, Algorithm, SpectroscopyJob, newton_girard, trace_oracle
from .sweep import job_seed, slope_regression


def _angles(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected one feature (theta), got {X.shape[1]}")
        X = X[:, 0]
    if np.any(X < 0) or np.any(X > np.pi):
        raise ValueError("theta values must lie in [0, pi]")
    return X


class TraceEstimator(RegressorMixin, BaseEstimator):
    """Simulated spectroscopy run as a regressor from theta to Tr(rho_A^n).

    Args:
        algorithm: One of the six algorithm names.
        n: Trace power.
        shots: Shots per estimate.
        noise: Preset name, JSON path or ``NoiseProfile``.
        seed: Master seed; sample ``i`` of every call uses its own derived seed.

    Attributes:
        estimates_: Estimates on the training angles.
        slope_, intercept_, slope_stderr_: Least-squares fit of the estimates
            on the targets (exact traces when ``y`` is omitted).
    """

    def __init__(self, algorithm="tct", n=2, shots=100_000, noise="noiseless", seed=0):
        self.algorithm = algorithm
        self.n = n
        self.shots = shots
        self.noise = noise
        self.seed = seed

    def _estimate(self, thetas: np.ndarray) -> np.ndarray:
        alg = Algorithm.parse(self.algorithm)
        noise = load_noise(self.noise)
        out = np.empty(len(thetas))
        for i, theta in enumerate(thetas):
            job = SpectroscopyJob(alg, self.n, 1, float(theta), self.shots, job_seed(self.seed, alg, self.n, i))
            out[i] = job.run(noise).value
        return out

    def fit(self, X, y=None):
        thetas = _angles(X)
        if y is None:
            y = np.array([trace_oracle(t, self.n) for t in thetas])
        else:
            y = check_array(y, ensure_2d=False, dtype=np.float64)
            if len(y) != len(thetas):
                raise ValueError("X and y have different lengths")
        self.n_features_in_ = 1
        self.estimates_ = self._estimate(thetas)
        self.slope_, self.intercept_, self.slope_stderr_ = slope_regression(y, self.estimates_)
        return self

    def predict(self, X):
        check_is_fitted(self, "estimates_")
        return self._estimate(_angles(X))


class SpectrumTransformer(TransformerMixin, BaseEstimator):
    """Rows of [Tr(rho), ..., Tr(rho^m)] to the m largest eigenvalues, descending."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} traces per row, got {X.shape[1]}")
        return np.vstack([newton_girard(row) for row in X])


__all__ = ["ALGORITHMS", "SpectrumTransformer", "TraceEstimator"]
