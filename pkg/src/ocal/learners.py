"""SVDD, SVDDneg and SSAD base learners and their decision function.

All three learners share one dual (see ``ocal.solver``). Points carry an orientation
s_i (+1 for unlabeled and labeled inliers, −1 for labeled outliers) and a box bound:

    SVDD      s = +1 everywhere, box C; labels are ignored.
    SVDDneg   box C1 for U ∪ L_in, C2 for L_out.
    SSAD      box C1 for U, C2 for L; labeled points also carry the margin τ.

The SSAD dual follows from the primal

    min R² − κτ + C1 Σ_U ξ + C2 Σ_L ξ
    s.t. ‖φ(x_i) − a‖² ≤ R² + ξ_i          (U)
         ‖φ(x_i) − a‖² ≤ R² + ξ_i − τ      (L_in)
         ‖φ(x_i) − a‖² ≥ R² − ξ_i + τ      (L_out)
         ξ ≥ 0, τ ≥ 0

whose Lagrangian gives a = Σ s_i α_i φ(x_i), Σ s_i α_i = 1, 0 ≤ α_i ≤ C_i and
Σ_L α_i ≥ κ, with τ the multiplier of the last constraint. τ appears only on labeled
constraints. κ has no effect when L is empty.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ocal import constants
from ocal.errors import OcalError
from ocal.kernel import CostConfig, KernelConfig, cost_tax, cross_kernel, gram_matrix
from ocal.signatures import LearnerSpec
from ocal.solver import solve_signed_dual, solve_with_labeled_mass

logger = logging.getLogger(__name__)

LEARNER_DESCRIPTIONS = {
    "SVDD": "Unsupervised minimum enclosing ball in kernel space; ignores labels.",
    "SVDDneg": "SVDD with labeled outliers constrained outside the ball (cost C2).",
    "SSAD": "Semi-supervised SVDD with a κ-weighted margin around labeled points.",
}


@dataclass(frozen=True)
class FitRequest:
    """Everything needed to fit one model.

    ``labels`` holds pool status codes aligned with the rows of ``X``.
    """

    X: np.ndarray
    labels: np.ndarray
    learner: str
    kernel: KernelConfig
    costs: CostConfig
    train_idx: Optional[np.ndarray] = None
    gram: Optional[np.ndarray] = None
    tol: float = constants.KKT_TOL
    max_iter: int = constants.MAX_SOLVER_ITER


@dataclass(frozen=True)
class TrainedModel:
    """A fitted hypersphere, represented by its kernel expansion."""

    learner: str
    alpha: np.ndarray
    signs: np.ndarray
    radius_sq: float
    margin: float
    kernel: KernelConfig
    costs: CostConfig
    train_idx: np.ndarray
    center_norm_sq: float
    kkt_violation: float
    iterations: int
    warnings: tuple[str, ...] = field(default=())
    boundary_tol: float = constants.KKT_TOL

    @property
    def beta(self) -> np.ndarray:
        """Signed coefficients s_i·α_i of the center."""
        return self.signs * self.alpha

    @property
    def radius(self) -> float:
        """Radius R."""
        return float(np.sqrt(self.radius_sq))

    @property
    def boundary_band(self) -> float:
        """Largest f(x) still on the boundary.

        Squared distances within ``boundary_tol`` of R² are as close to the sphere as the
        solver can tell, so free support vectors never count as outliers.
        """
        return float(np.sqrt(self.radius_sq + self.boundary_tol)) - self.radius


def _orientation(req: FitRequest) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return signs, box bounds and the labeled mask for a request."""
    labels = np.asarray(req.labels)
    n = labels.size
    is_out = labels == constants.LABELED_OUTLIER
    is_lab = labels != constants.UNLABELED

    if req.learner == "SVDD":
        return np.ones(n), np.full(n, req.costs.C), np.zeros(n, dtype=bool)
    if req.learner == "SVDDneg":
        signs = np.where(is_out, -1.0, 1.0)
        upper = np.where(is_out, req.costs.C2, req.costs.C1)
        return signs, upper, np.zeros(n, dtype=bool)
    if req.learner == "SSAD":
        signs = np.where(is_out, -1.0, 1.0)
        upper = np.where(is_lab, req.costs.C2, req.costs.C1)
        return signs, upper, is_lab
    raise OcalError(f"Unknown learner '{req.learner}'. Known: {list(LEARNER_DESCRIPTIONS)}")


def _radius_and_residual(
    values: np.ndarray, signs: np.ndarray, alpha: np.ndarray, upper: np.ndarray
) -> tuple[float, float]:
    """Recover R² from constraint values and report the complementary-slackness residual.

    ``values`` are squared feature-space distances shifted by ±τ for labeled points, so that
    every constraint reads value ≤ R² (s = +1) or value ≥ R² (s = −1).
    """
    eps = constants.BOX_EPS
    free = (alpha > eps) & (alpha < upper - eps)
    zero = alpha <= eps
    bound = alpha >= upper - eps
    pos = signs > 0

    at_least = values[(pos & zero) | (~pos & bound)]
    at_most = values[(pos & bound) | (~pos & zero)]
    if free.any():
        radius_sq = float(np.mean(values[free]))
    else:
        radius_sq = float(values[alpha > eps].max())
    radius_sq = max(radius_sq, 0.0)

    residual = 0.0
    if free.any():
        residual = max(residual, float(np.max(np.abs(values[free] - radius_sq))))
    if at_least.size:
        residual = max(residual, float(at_least.max()) - radius_sq)
    if at_most.size:
        residual = max(residual, radius_sq - float(at_most.min()))
    return radius_sq, max(residual, 0.0)


def fit(req: FitRequest) -> TrainedModel:
    """Fit the requested learner by solving its dual.

    Raises:
        OcalError: On an empty training set or unknown learner.
        SolverError: If the dual is infeasible or does not converge.
    """
    X = np.atleast_2d(np.asarray(req.X, dtype=float))
    n = X.shape[0]
    if n == 0:
        raise OcalError("Cannot fit on an empty training set")
    if np.asarray(req.labels).shape != (n,):
        raise OcalError("labels must align with the rows of X")

    signs, upper, labeled = _orientation(req)
    K = req.gram if req.gram is not None else gram_matrix(X, req.kernel)

    warnings: list[str] = []
    if req.learner == "SSAD":
        sol = solve_with_labeled_mass(
            K, signs, upper, labeled, req.costs.kappa, tol=req.tol, max_iter=req.max_iter
        )
        if sol.mass_shortfall:
            warnings.append("kappa exceeds attainable labeled mass")
    else:
        sol = solve_signed_dual(K, signs, upper, tol=req.tol, max_iter=req.max_iter)

    alpha = sol.alpha
    beta = signs * alpha
    support = np.flatnonzero(alpha)
    Kb = K[:, support] @ beta[support]
    center_norm_sq = float(beta[support] @ Kb[support])
    dist_sq = np.diag(K) - 2.0 * Kb + center_norm_sq

    tau = sol.multiplier
    shifted = dist_sq + np.where(labeled, tau * signs, 0.0)
    radius_sq, residual = _radius_and_residual(shifted, signs, alpha, upper)

    logger.debug(
        "%s fit: n=%d support=%d R²=%.6g τ=%.4g residual=%.2e",
        req.learner,
        n,
        support.size,
        radius_sq,
        tau,
        residual,
    )
    train_idx = np.arange(n) if req.train_idx is None else np.asarray(req.train_idx, dtype=int)
    return TrainedModel(
        learner=req.learner,
        alpha=alpha,
        signs=signs,
        radius_sq=radius_sq,
        margin=tau,
        kernel=req.kernel,
        costs=req.costs,
        train_idx=train_idx,
        center_norm_sq=center_norm_sq,
        kkt_violation=residual,
        iterations=sol.iterations,
        warnings=tuple(warnings),
        boundary_tol=req.tol,
    )


def decision_function(
    m: TrainedModel,
    X_train: np.ndarray,
    X_eval: np.ndarray,
    K_cross: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Return f(x) = ‖φ(x) − a‖ − R for every row of ``X_eval``.

    Args:
        m: Fitted model.
        X_train: The matrix the model was fit on.
        X_eval: Observations to score.
        K_cross: Optional precomputed kernel between ``X_eval`` and ``X_train``.
    """
    X_eval = np.atleast_2d(np.asarray(X_eval, dtype=float))
    support = np.flatnonzero(m.alpha)
    if K_cross is None:
        if X_eval.shape[1] != np.asarray(X_train).shape[1]:
            raise OcalError("Feature dimension does not match the training data")
        Ks = cross_kernel(X_eval, np.asarray(X_train, dtype=float)[support], m.kernel.gamma)
    else:
        Ks = np.asarray(K_cross)[:, support]
    # k(x, x) = 1 for the RBF kernel
    dist_sq = 1.0 - 2.0 * (Ks @ m.beta[support]) + m.center_norm_sq
    return np.sqrt(np.clip(dist_sq, 0.0, None)) - m.radius


def decision_value(m: TrainedModel, X_train: np.ndarray, x: np.ndarray) -> float:
    """Return f(x) for a single observation."""
    return float(decision_function(m, X_train, np.asarray(x, dtype=float)[None, :])[0])


def predict(m: TrainedModel, X_train: np.ndarray, x: np.ndarray) -> str:
    """Classify an observation as outlier iff f(x) lies beyond the boundary band."""
    outside = decision_value(m, X_train, x) > m.boundary_band
    return constants.OUTLIER if outside else constants.INLIER


def predict_many(
    m: TrainedModel,
    X_train: np.ndarray,
    X_eval: np.ndarray,
    K_cross: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Return 1 for predicted outliers and 0 for predicted inliers."""
    f = decision_function(m, X_train, X_eval, K_cross)
    return (f > m.boundary_band).astype(np.int8)


def dual_objective(alpha: np.ndarray, signs: np.ndarray, K: np.ndarray) -> float:
    """Evaluate the maximized dual Σ s_i α_i K_ii − βᵀKβ with β = s∘α."""
    beta = signs * alpha
    return float(beta @ np.diag(K) - beta @ K @ beta)


def audit_record(m: TrainedModel) -> Dict[str, Any]:
    """Return a JSON-ready snapshot of a fitted model."""
    return {
        "learner": m.learner,
        "alpha": m.alpha.tolist(),
        "signs": m.signs.astype(int).tolist(),
        "train_idx": m.train_idx.tolist(),
        "radius_sq": m.radius_sq,
        "margin": m.margin,
        "gamma": m.kernel.gamma,
        "costs": m.costs.model_dump(),
        "kkt_residual": m.kkt_violation,
        "iterations": m.iterations,
    }


def resolve_costs(spec: LearnerSpec, n_train: int, outlier_fraction: float) -> CostConfig:
    """Return the costs of one fit: fixed when the spec sets C, otherwise re-derived.

    ν comes from ``spec.outlier_fraction`` and falls back to ``outlier_fraction``.
    """
    if spec.C is not None:
        c2 = spec.C if spec.C2 is None else spec.C2
        return CostConfig(C=spec.C, C1=spec.C, C2=c2, kappa=spec.kappa)
    nu = spec.outlier_fraction if spec.outlier_fraction is not None else outlier_fraction
    return cost_tax(n_train, nu, kappa=spec.kappa, c2=spec.C2)
