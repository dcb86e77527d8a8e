"""Gaussian kernel density estimates sharing the learner's γ."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ocal.errors import OcalError
from ocal.kernel import cross_kernel

logger = logging.getLogger(__name__)


def gaussian_normalizer(gamma: float, n_features: int) -> float:
    """Return (γ/π)^(M/2), which makes exp(−γ‖x − x_s‖²) integrate to one."""
    return (gamma / math.pi) ** (n_features / 2.0)


@dataclass(frozen=True)
class DensityModel:
    """A KDE over a subset of the rows of a data matrix."""

    support: np.ndarray
    gamma: float
    normalizer: float

    @property
    def size(self) -> int:
        """Number of support points."""
        return int(self.support.size)


def kde_fit(X: np.ndarray, support: np.ndarray, gamma: float) -> DensityModel:
    """Build a density model over ``X[support]``.

    Raises:
        OcalError: If the support is empty or γ is not positive.
    """
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise OcalError("Density estimation needs a nonempty support")
    if not gamma > 0:
        raise OcalError(f"Density bandwidth γ must be positive, got {gamma}")
    n_features = np.atleast_2d(X).shape[1]
    return DensityModel(
        support=support, gamma=gamma, normalizer=gaussian_normalizer(gamma, n_features)
    )


def kde_eval_many(m: DensityModel, X: np.ndarray, X_eval: np.ndarray) -> np.ndarray:
    """Return the density at every row of ``X_eval``."""
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
    K = cross_kernel(X_eval, np.asarray(X, dtype=float)[m.support], m.gamma)
    return m.normalizer * K.mean(axis=1)


def kde_eval(m: DensityModel, X: np.ndarray, x: np.ndarray) -> float:
    """Return the density at a single observation."""
    return float(kde_eval_many(m, X, np.asarray(x, dtype=float)[None, :])[0])


def kde_loo_eval(m: DensityModel, X: np.ndarray, i: int) -> float:
    """Return the density at ``X[i]`` estimated without support point ``i``.

    Uses loo = (n·full − self) / (n − 1), where self is the peak value of point i, clamped
    at zero against rounding.

    Raises:
        OcalError: If ``i`` is not a support point or the support holds a single point.
    """
    if m.size < 2:
        raise OcalError("Leave-one-out density needs at least two support points")
    if i not in set(m.support.tolist()):
        raise OcalError(f"Observation {i} is not part of the density support")
    full = kde_eval(m, X, np.asarray(X)[i])
    return max(0.0, (m.size * full - m.normalizer) / (m.size - 1))


def kde_loo_many(m: DensityModel, X: np.ndarray) -> np.ndarray:
    """Return the leave-one-out density of every support point, in support order."""
    if m.size < 2:
        raise OcalError("Leave-one-out density needs at least two support points")
    full = kde_eval_many(m, X, np.asarray(X)[m.support])
    return np.maximum((m.size * full - m.normalizer) / (m.size - 1), 0.0)
