"""RBF kernel, Gram matrix caching and hyperparameter heuristics for γ and C."""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, Hashable, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.metrics.pairwise import rbf_kernel

from ocal.errors import OcalError, UnsupportedHeuristicError

logger = logging.getLogger(__name__)


class KernelConfig(BaseModel):
    """Width of the RBF kernel k(x, x') = exp(−γ‖x − x'‖²)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(gt=0, allow_inf_nan=False, description="RBF width γ.")


class CostConfig(BaseModel):
    """Cost parameters of the SVDD family."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    C: float = Field(gt=0, le=1, description="SVDD cost.")
    C1: float = Field(gt=0, description="Cost of unlabeled and labeled-inlier slack.")
    C2: float = Field(gt=0, description="Cost of labeled slack (SVDDneg outliers, SSAD labels).")
    kappa: float = Field(default=1.0, ge=0, description="SSAD margin trade-off κ.")


def rbf(x: np.ndarray, x2: np.ndarray, cfg: KernelConfig) -> float:
    """Evaluate the RBF kernel for one pair of observations."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise OcalError(f"Dimension mismatch: {x.shape} vs {x2.shape}")
    diff = x - x2
    return float(math.exp(-cfg.gamma * float(diff @ diff)))


def cross_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Return the |A|×|B| matrix of RBF values."""
    if A.shape[1] != B.shape[1]:
        raise OcalError(f"Dimension mismatch: {A.shape[1]} vs {B.shape[1]} features")
    return rbf_kernel(A, B, gamma=gamma)


def gram_matrix(X: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Return the N×N Gram matrix, exactly symmetric with unit diagonal."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K = rbf_kernel(X, gamma=cfg.gamma)
    upper = np.triu(K, 1)
    K = upper + upper.T
    np.fill_diagonal(K, 1.0)
    return K


class KernelCache:
    """Materialize the Gram matrix once per (dataset, γ) and hand out read-only views."""

    def __init__(self) -> None:
        """Start with an empty cache."""
        self._store: Dict[Tuple[Hashable, float], np.ndarray] = {}

    def get(self, key: Hashable, X: np.ndarray, cfg: KernelConfig) -> np.ndarray:
        """Return the cached Gram matrix for ``key``, computing it on first use."""
        slot = (key, cfg.gamma)
        if slot not in self._store:
            K = gram_matrix(X, cfg)
            K.flags.writeable = False
            self._store[slot] = K
            logger.debug("cached %d×%d Gram matrix for %s", K.shape[0], K.shape[1], slot)
        return self._store[slot]

    def __len__(self) -> int:
        """Return the number of cached matrices."""
        return len(self._store)


def scott_bandwidth(X: np.ndarray) -> float:
    """Return Scott's rule bandwidth h = N^(−1/(M+4)) · mean column standard deviation."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n_obs, n_features = X.shape
    if n_obs < 2:
        raise OcalError("Scott's rule needs at least two observations")
    sigma = float(np.mean(np.std(X, axis=0, ddof=1)))
    return n_obs ** (-1.0 / (n_features + 4)) * sigma


def gamma_scott(X: np.ndarray) -> float:
    """Return γ = 1 / (2h²) for Scott's bandwidth h."""
    h = scott_bandwidth(X)
    if h <= 0:
        raise OcalError("Scott's rule gives zero bandwidth on constant data")
    return 1.0 / (2.0 * h * h)


def gamma_wang(X: np.ndarray) -> float:
    """Self-adaptive data shifting heuristic (not shipped)."""
    raise UnsupportedHeuristicError(
        "γ heuristic 'wang' is registered but not implemented; use 'scott' or 'fixed:<value>'"
    )


GAMMA_HEURISTICS: Dict[str, Callable[[np.ndarray], float]] = {
    "scott": gamma_scott,
    "wang": gamma_wang,
}


def resolve_gamma(name: str, X: np.ndarray) -> float:
    """Evaluate a γ heuristic by registry name (``scott``, ``wang`` or ``fixed:<value>``)."""
    if name.startswith("fixed:"):
        try:
            gamma = float(name.split(":", 1)[1])
        except ValueError as exc:
            raise OcalError(f"Invalid fixed γ '{name}'") from exc
        if not (gamma > 0 and math.isfinite(gamma)):
            raise OcalError(f"Fixed γ must be positive and finite, got {gamma}")
        return gamma
    if name not in GAMMA_HEURISTICS:
        raise OcalError(
            f"Unknown γ heuristic '{name}'. Known: {sorted(GAMMA_HEURISTICS)} and fixed:<value>"
        )
    return GAMMA_HEURISTICS[name](X)


def cost_tax(
    n_obs: int,
    expected_outlier_fraction: float,
    kappa: float = 1.0,
    c2: float | None = None,
) -> CostConfig:
    """Initialize C = C1 = 1 / (N·ν), clamped to (0, 1]; C2 defaults to C1."""
    if n_obs < 1:
        raise OcalError(f"cost_tax needs N >= 1, got {n_obs}")
    if not 0 < expected_outlier_fraction < 1:
        raise OcalError(
            f"Outlier fraction must lie in (0, 1), got {expected_outlier_fraction}"
        )
    c = min(1.0, 1.0 / (n_obs * expected_outlier_fraction))
    return CostConfig(C=c, C1=c, C2=c if c2 is None else c2, kappa=kappa)

