"""Query strategies: informativeness scores over the eligible unlabeled set.

Data-based strategies (mm, emm, eme, ml) work on kernel density estimates, model-based
strategies (hc, db) on the decision function f, hybrid strategies (nb, bnc) on both f and
nearest neighbors, and the baselines (rand, rand_out) on a seeded random stream.
The query is the eligible observation with the highest score.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from sklearn.neighbors import NearestNeighbors

from ocal import constants
from ocal.data import PoolState
from ocal.density import gaussian_normalizer, kde_eval_many, kde_fit
from ocal.errors import OcalError, PoolExhaustedError
from ocal.kernel import cross_kernel
from ocal.signatures import StrategyConfig

logger = logging.getLogger(__name__)

STRATEGY_DESCRIPTIONS = {
    "mm": "Minimum margin: posterior class probabilities closest to each other.",
    "emm": "Expected minimum margin: margin with a uniformly distributed outlier share.",
    "eme": "Expected maximum entropy of the class posteriors.",
    "ml": "Minimum loss: expected gain of the leave-one-out inlier density.",
    "hc": "High confidence: observations that match the inlier class the least.",
    "db": "Decision boundary: observations closest to the boundary.",
    "nb": "Neighborhood-based: boundary distance blended with unlabeled neighborhoods.",
    "bnc": "Boundary-neighbor combination with random exploration.",
    "rand": "Uniformly random unlabeled observation.",
    "rand_out": "Uniformly random observation among the predicted outliers.",
}


@dataclass(frozen=True)
class InformativenessVector:
    """Scores aligned with the sorted eligible indices."""

    eligible: np.ndarray
    scores: np.ndarray
    exploratory: bool = False
    fallback: bool = False

    def __post_init__(self) -> None:
        """Check alignment and finiteness."""
        if self.eligible.shape != self.scores.shape:
            raise OcalError("Scores must align with the eligible observations")
        if not np.all(np.isfinite(self.scores)):
            raise OcalError("Informativeness scores must be finite")


@dataclass(frozen=True)
class GateResult:
    """Outcome of the feasibility gate."""

    ok: bool
    reason: Optional[str] = None


@dataclass
class ScoringInputs:
    """What a strategy may look at in one iteration.

    ``decision`` holds f(x) for the eligible observations, in the same order, and
    ``boundary`` the largest f the current model still counts as an inlier.
    """

    X: np.ndarray
    pool: PoolState
    eligible: np.ndarray
    gamma: float
    config: StrategyConfig
    rng: np.random.Generator
    decision: Optional[np.ndarray] = None
    boundary: float = 0.0


def density_ratio(p_in: np.ndarray, p_x: np.ndarray) -> np.ndarray:
    """Return r = p(x|in) / p(x), clamped to [0, RATIO_CAP]."""
    p_in = np.asarray(p_in, dtype=float)
    p_x = np.asarray(p_x, dtype=float)
    safe = np.where(p_x >= constants.MIN_DENSITY, p_x, 1.0)
    r = np.where(p_x >= constants.MIN_DENSITY, p_in / safe, 0.0)
    return np.clip(r, 0.0, constants.RATIO_CAP)


def _far_field(p_x: np.ndarray) -> np.ndarray:
    return np.asarray(p_x, dtype=float) < constants.MIN_DENSITY


def tau_mm(p_in: np.ndarray, p_x: np.ndarray, prior: float) -> np.ndarray:
    """Minimum margin −|(2·p(x|in)·p(in) − p(x)) / p(x)|."""
    r = density_ratio(p_in, p_x)
    return np.where(_far_field(p_x), 0.0, -np.abs(2.0 * r * prior - 1.0))


def tau_emm(p_in: np.ndarray, p_x: np.ndarray) -> np.ndarray:
    """Expected minimum margin (r − 1)·sign(0.5 − r), with sign(0) = 0."""
    r = density_ratio(p_in, p_x)
    return np.where(_far_field(p_x), 0.0, (r - 1.0) * np.sign(0.5 - r))


def tau_eme(p_in: np.ndarray, p_x: np.ndarray) -> np.ndarray:
    """Expected maximum entropy; 0 outside 0 < r < 1."""
    r = density_ratio(p_in, p_x)
    inside = (r > 0) & (r < 1) & ~_far_field(p_x)
    rr = np.where(inside, r, 0.5)
    value = (-(rr**2) * np.log(rr) + rr + (rr - 1.0) ** 2 * np.log1p(-rr)) / (2.0 * rr)
    return np.where(inside, value, 0.0)


def tau_ml(
    candidates: np.ndarray,
    inliers: np.ndarray,
    outliers: np.ndarray,
    gamma: float,
    prior: float,
    with_outlier_terms: bool = True,
) -> np.ndarray:
    """Minimum loss p(in)·τ_ML-in + (1 − p(in))·τ_ML-out for every candidate row.

    τ_ML-in is the mean leave-one-out inlier density over L_in ∪ {x} minus the mean
    density of the augmented inlier estimate at the labeled outliers. τ_ML-out is the
    mean leave-one-out density over L_in minus the mean inlier density over L_out ∪ {x}.
    Without outlier terms both subtrahends are dropped.

    Args:
        candidates: Observations to score (rows).
        inliers: Labeled inliers, at least two.
        outliers: Labeled outliers; may be empty when ``with_outlier_terms`` is False.
        gamma: Kernel width shared with the learner.
        prior: p(in).
        with_outlier_terms: Keep the outlier subtrahends.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    inliers = np.atleast_2d(np.asarray(inliers, dtype=float))
    n = inliers.shape[0]
    if n < 2:
        raise OcalError("ml needs at least two labeled inliers")
    c = gaussian_normalizer(gamma, inliers.shape[1])

    K_in = cross_kernel(inliers, inliers, gamma)
    loo_sums = K_in.sum(axis=1) - np.diag(K_in)
    k_x = cross_kernel(candidates, inliers, gamma)
    kx_total = k_x.sum(axis=1)

    # leave-one-out densities of L_in ∪ {x}: n inliers plus x itself
    in_first = c * ((loo_sums.sum() + kx_total) / n + kx_total / n) / (n + 1)
    out_first = c * np.mean(loo_sums / (n - 1))

    tau_in = in_first
    tau_out = np.full(candidates.shape[0], out_first)
    if with_outlier_terms:
        outliers = np.atleast_2d(np.asarray(outliers, dtype=float)).reshape(-1, inliers.shape[1])
        m = outliers.shape[0]
        if m == 0:
            raise OcalError("ml with outlier terms needs labeled outliers")
        K_oi = cross_kernel(outliers, inliers, gamma).sum(axis=1)
        K_ox = cross_kernel(candidates, outliers, gamma)
        tau_in = tau_in - c * (K_oi.sum() + K_ox.sum(axis=1)) / (m * (n + 1))
        tau_out = tau_out - c * (K_oi.sum() / n + kx_total / n) / (m + 1)
    return prior * tau_in + (1.0 - prior) * tau_out


def tau_hc(decision: np.ndarray) -> np.ndarray:
    """High confidence f(x)."""
    return np.asarray(decision, dtype=float).copy()


def tau_db(decision: np.ndarray) -> np.ndarray:
    """Decision boundary −|f(x)|."""
    return -np.abs(np.asarray(decision, dtype=float))


def nearest_neighbors(
    X: np.ndarray, query: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Return distances and indices of the k nearest neighbors of ``X[query]``, excluding self.

    Raises:
        OcalError: If k exceeds N − 1.
    """
    n_obs = X.shape[0]
    if not 1 <= k <= n_obs - 1:
        raise OcalError(f"Neighborhood size k={k} needs 1 <= k <= {n_obs - 1}")
    query = np.asarray(query, dtype=int)
    nn = NearestNeighbors(n_neighbors=k + 1).fit(X)
    dist, ind = nn.kneighbors(X[query])
    keep = ind != query[:, None]
    no_self = keep.all(axis=1)
    keep[no_self, -1] = False
    return dist[keep].reshape(-1, k), ind[keep].reshape(-1, k)


def tau_nb(
    decision: np.ndarray, neighbor_status: np.ndarray, eta: float
) -> np.ndarray:
    """Neighborhood-based η·τ_DB + (1 − η)·τ̂_NB.

    ``neighbor_status`` holds the pool status of each candidate's k neighbors.
    """
    k = neighbor_status.shape[1]
    labeled_inliers = np.sum(neighbor_status == constants.LABELED_INLIER, axis=1)
    tau_hat = -(0.5 + labeled_inliers / (2.0 * k))
    return eta * tau_db(decision) + (1.0 - eta) * tau_hat


def _normalized(values: np.ndarray) -> np.ndarray:
    top = float(values.max()) if values.size else 0.0
    if top == 0.0:
        return np.zeros_like(values)
    return (values - values.min()) / top


def tau_bnc(decision: np.ndarray, nn_distance: np.ndarray, eta: float) -> np.ndarray:
    """Boundary-neighbor combination without the random exploration step.

    (1 − η)·(−(|f| − min|f|) / max|f|) + η·(−(d₁ − min d₁) / max d₁), with the minima and
    maxima taken over the candidates; a zero maximum makes its term vanish.
    """
    dist_f = np.abs(np.asarray(decision, dtype=float))
    d1 = np.asarray(nn_distance, dtype=float)
    return (1.0 - eta) * -_normalized(dist_f) + eta * -_normalized(d1)


def tau_rand(n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent uniform scores."""
    return rng.random(n)


def tau_rand_out(
    decision: np.ndarray, rng: np.random.Generator, boundary: float = 0.0
) -> tuple[np.ndarray, bool]:
    """Uniform scores in (0, 1] on predicted outliers (f > ``boundary``), 0 elsewhere.

    Returns the scores and whether it fell back to ``tau_rand`` for lack of predicted outliers.
    """
    decision = np.asarray(decision, dtype=float)
    outside = decision > boundary
    if not outside.any():
        return tau_rand(decision.size, rng), True
    scores = np.zeros(decision.size)
    scores[outside] = 1.0 - rng.random(int(outside.sum()))
    return scores, False


def _densities(inputs: ScoringInputs) -> tuple[np.ndarray, np.ndarray]:
    X = inputs.X
    px_support = (
        np.arange(X.shape[0]) if inputs.config.px_support == "all" else inputs.pool.U
    )
    cand = X[inputs.eligible]
    p_in = kde_eval_many(kde_fit(X, inputs.pool.L_in, inputs.gamma), X, cand)
    p_x = kde_eval_many(kde_fit(X, px_support, inputs.gamma), X, cand)
    return p_in, p_x


def _prior(inputs: ScoringInputs) -> float:
    if inputs.config.prior_inlier is None:
        raise OcalError(f"Strategy '{inputs.config.name}' needs prior_inlier")
    return inputs.config.prior_inlier


def _decision(inputs: ScoringInputs) -> np.ndarray:
    if inputs.decision is None:
        raise OcalError(f"Strategy '{inputs.config.name}' needs decision values")
    return inputs.decision


def _score_mm(inputs: ScoringInputs) -> InformativenessVector:
    p_in, p_x = _densities(inputs)
    return InformativenessVector(inputs.eligible, tau_mm(p_in, p_x, _prior(inputs)))


def _score_emm(inputs: ScoringInputs) -> InformativenessVector:
    p_in, p_x = _densities(inputs)
    return InformativenessVector(inputs.eligible, tau_emm(p_in, p_x))


def _score_eme(inputs: ScoringInputs) -> InformativenessVector:
    p_in, p_x = _densities(inputs)
    return InformativenessVector(inputs.eligible, tau_eme(p_in, p_x))


def _score_ml(inputs: ScoringInputs) -> InformativenessVector:
    X, pool = inputs.X, inputs.pool
    with_outliers = pool.L_out.size >= X.shape[1]
    if not with_outliers and not inputs.config.modified_ml:
        raise OcalError("ml needs M labeled outliers unless modified_ml is set")
    scores = tau_ml(
        X[inputs.eligible],
        X[pool.L_in],
        X[pool.L_out],
        inputs.gamma,
        _prior(inputs),
        with_outlier_terms=with_outliers,
    )
    return InformativenessVector(inputs.eligible, scores)


def _score_hc(inputs: ScoringInputs) -> InformativenessVector:
    return InformativenessVector(inputs.eligible, tau_hc(_decision(inputs)))


def _score_db(inputs: ScoringInputs) -> InformativenessVector:
    return InformativenessVector(inputs.eligible, tau_db(_decision(inputs)))


def _score_nb(inputs: ScoringInputs) -> InformativenessVector:
    _, ind = nearest_neighbors(inputs.X, inputs.eligible, inputs.config.k_nn)
    status = inputs.pool.status[ind]
    scores = tau_nb(_decision(inputs), status, inputs.config.eta_nb)
    return InformativenessVector(inputs.eligible, scores)


def _score_bnc(inputs: ScoringInputs) -> InformativenessVector:
    cfg = inputs.config
    if inputs.rng.random() < cfg.p_bnc:
        return InformativenessVector(
            inputs.eligible, tau_rand(inputs.eligible.size, inputs.rng), exploratory=True
        )
    dist, _ = nearest_neighbors(inputs.X, inputs.eligible, 1)
    scores = tau_bnc(_decision(inputs), dist[:, 0], cfg.eta_bnc)
    return InformativenessVector(inputs.eligible, scores)


def _score_rand(inputs: ScoringInputs) -> InformativenessVector:
    return InformativenessVector(inputs.eligible, tau_rand(inputs.eligible.size, inputs.rng))


def _score_rand_out(inputs: ScoringInputs) -> InformativenessVector:
    scores, fallback = tau_rand_out(_decision(inputs), inputs.rng, inputs.boundary)
    if fallback:
        logger.debug("rand_out: no predicted outliers, querying at random")
    return InformativenessVector(inputs.eligible, scores, fallback=fallback)


STRATEGIES: Dict[str, Callable[[ScoringInputs], InformativenessVector]] = {
    "mm": _score_mm,
    "emm": _score_emm,
    "eme": _score_eme,
    "ml": _score_ml,
    "hc": _score_hc,
    "db": _score_db,
    "nb": _score_nb,
    "bnc": _score_bnc,
    "rand": _score_rand,
    "rand_out": _score_rand_out,
}


def informativeness(name: str, inputs: ScoringInputs) -> InformativenessVector:
    """Score the eligible observations with the named strategy.

    Raises:
        PoolExhaustedError: If nothing is eligible.
        OcalError: For unknown strategies or missing inputs.
    """
    if name not in STRATEGIES:
        raise OcalError(f"Unknown query strategy '{name}'. Known: {list(STRATEGIES)}")
    if inputs.eligible.size == 0:
        raise PoolExhaustedError("No eligible unlabeled observation left to query")
    return STRATEGIES[name](inputs)


def select_query(scores: InformativenessVector) -> int:
    """Return the eligible index with the highest score; ties go to the lowest index.

    Raises:
        PoolExhaustedError: If nothing is eligible.
    """
    if scores.eligible.size == 0:
        raise PoolExhaustedError("No eligible unlabeled observation left to query")
    order = np.argsort(scores.eligible, kind="stable")
    best = int(np.argmax(scores.scores[order]))
    return int(scores.eligible[order][best])


def feasibility_gate(
    strategy: str,
    n_inliers: int,
    n_outliers: int,
    n_features: int,
    split: str,
    learner: str,
    modified_ml: bool = True,
) -> GateResult:
    """Check a scenario against the label requirements of its parts.

    Args:
        strategy: Query strategy name.
        n_inliers: Labeled inliers in the initial pool.
        n_outliers: Labeled outliers in the initial pool.
        n_features: Number of attributes M.
        split: Split strategy name.
        learner: Learner name.
        modified_ml: Whether ml may omit its outlier terms.
    """
    if strategy not in STRATEGIES:
        return GateResult(False, f"unknown query strategy '{strategy}'")
    if split == "Si" and n_inliers < 1:
        return GateResult(False, "Si fits on labeled inliers but the initial pool has none")
    if learner == "SVDD" and split != "Si":
        return GateResult(False, "unsupervised SVDD ignores labels and only runs with Si")
    if strategy in constants.DATA_BASED_STRATEGIES and n_inliers < n_features:
        return GateResult(
            False,
            f"{strategy} estimates the inlier density and needs {n_features} labeled "
            f"inliers, the initial pool has {n_inliers}",
        )
    if strategy == "ml":
        if n_inliers < 2:
            return GateResult(False, "ml needs at least two labeled inliers")
        if n_outliers < n_features and not modified_ml:
            return GateResult(
                False,
                f"ml needs {n_features} labeled outliers, the initial pool has {n_outliers}",
            )
    if strategy == "hc" and n_inliers + n_outliers == 0:
        return GateResult(False, "hc needs at least one label")
    return GateResult(True)
