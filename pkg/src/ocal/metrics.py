"""Classification metrics and progress-curve summaries.

Outliers are the positive class throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ocal import constants
from ocal.errors import EmptyCurveError, OcalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with outlier as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        """Size of the evaluation set."""
        return self.tp + self.fp + self.tn + self.fn


def confusion_matrix(predicted: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    """Count agreements between predictions and ground truth (1 = outlier)."""
    pred = np.asarray(predicted).astype(bool)
    true = np.asarray(truth).astype(bool)
    if pred.shape != true.shape:
        raise OcalError(f"Prediction and truth shapes differ: {pred.shape} vs {true.shape}")
    return ConfusionMatrix(
        tp=int(np.sum(pred & true)),
        fp=int(np.sum(pred & ~true)),
        tn=int(np.sum(~pred & ~true)),
        fn=int(np.sum(~pred & true)),
    )


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any marginal is empty."""
    denom = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    if denom == 0:
        return 0.0
    return (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(denom)


def kappa(cm: ConfusionMatrix) -> float:
    """Cohen's kappa; 0 when chance agreement is 1."""
    n = cm.total
    if n == 0:
        return 0.0
    p_o = (cm.tp + cm.tn) / n
    p_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.tn + cm.fn) * (cm.tn + cm.fp)) / (n * n)
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def auc(scores: np.ndarray, truth: np.ndarray) -> float:
    """Probability that an outlier is scored above an inlier, ties counting one half.

    Returns 0.5 when one of the classes is missing.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    ranks = rankdata(scores)
    u = ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (fpr, tpr) at every distinct threshold, from (0, 0) to (1, 1)."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    t = truth[order]
    # last position of each run of tied scores
    cut = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tps = np.cumsum(t)[cut]
    fps = np.cumsum(~t)[cut]
    n_pos = max(int(truth.sum()), 1)
    n_neg = max(int((~truth).sum()), 1)
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    return fpr, tpr


def pauc(
    scores: np.ndarray, truth: np.ndarray, fpr_max: float = constants.DEFAULT_PAUC_FPR
) -> float:
    """Area under the ROC curve for FPR in [0, fpr_max], divided by fpr_max."""
    if not 0 < fpr_max <= 1:
        raise OcalError(f"fpr_max must lie in (0, 1], got {fpr_max}")
    truth = np.asarray(truth).astype(bool)
    if truth.all() or not truth.any():
        return 0.5
    fpr, tpr = roc_curve(scores, truth)
    keep = fpr <= fpr_max
    x = fpr[keep]
    y = tpr[keep]
    if x[-1] < fpr_max:
        j = int(np.searchsorted(fpr, fpr_max, side="right"))
        x0, x1 = fpr[j - 1], fpr[j]
        y0, y1 = tpr[j - 1], tpr[j]
        y_cut = y0 + (y1 - y0) * (fpr_max - x0) / (x1 - x0)
        x = np.r_[x, fpr_max]
        y = np.r_[y, y_cut]
    area = float(np.sum(np.diff(x) * (y[1:] + y[:-1])) / 2.0)
    return area / fpr_max


@dataclass(frozen=True)
class MetricSpec:
    """A parsed metric registry name."""

    name: str
    kind: str
    fpr_max: Optional[float] = None


METRIC_DESCRIPTIONS = {
    "mcc": "Matthews correlation coefficient of the predicted labels.",
    "kappa": "Cohen's kappa of the predicted labels.",
    "auc": "Area under the ROC curve of the decision values.",
    "pauc:<fpr_max>": "ROC area up to fpr_max, normalized to [0, 1].",
}


def parse_metric_name(name: str) -> MetricSpec:
    """Resolve ``mcc``, ``kappa``, ``auc`` or ``pauc:<fpr_max>``."""
    if name in ("mcc", "kappa", "auc"):
        return MetricSpec(name=name, kind=name)
    if name.startswith("pauc"):
        raw = name.split(":", 1)[1] if ":" in name else str(constants.DEFAULT_PAUC_FPR)
        try:
            fpr_max = float(raw)
        except ValueError as exc:
            raise OcalError(f"Invalid pAUC cutoff in '{name}'") from exc
        if not 0 < fpr_max <= 1:
            raise OcalError(f"pAUC cutoff must lie in (0, 1], got {fpr_max}")
        return MetricSpec(name=name, kind="pauc", fpr_max=fpr_max)
    raise OcalError(f"Unknown metric '{name}'. Known: {sorted(METRIC_DESCRIPTIONS)}")


def evaluate(
    names: Iterable[str], decision: np.ndarray, truth: np.ndarray, boundary: float = 0.0
) -> Dict[str, float]:
    """Compute every requested metric from decision values.

    Observations with f > ``boundary`` are predicted outliers; the ranking metrics use f as is.
    """
    decision = np.asarray(decision, dtype=float)
    cm = confusion_matrix(decision > boundary, truth)
    values: Dict[str, float] = {}
    for name in names:
        spec = parse_metric_name(name)
        if spec.kind == "mcc":
            values[name] = mcc(cm)
        elif spec.kind == "kappa":
            values[name] = kappa(cm)
        elif spec.kind == "auc":
            values[name] = auc(decision, truth)
        else:
            values[name] = pauc(decision, truth, spec.fpr_max)  # type: ignore[arg-type]
    return values


@dataclass(frozen=True)
class CurveRecord:
    """One point of a progress curve."""

    t: int
    queried_index: Optional[int]
    oracle_label: Optional[str]
    metrics: Dict[str, float]
    exploratory: bool = False


@dataclass
class ProgressCurve:
    """Quality after each query; the first record is the initial state."""

    records: List[CurveRecord] = field(default_factory=list)

    def append(self, record: CurveRecord) -> None:
        """Add the next record, keeping iterations strictly increasing."""
        if self.records and record.t <= self.records[-1].t:
            raise OcalError(
                f"Iteration {record.t} does not follow iteration {self.records[-1].t}"
            )
        if self.records and record.queried_index is None:
            raise OcalError("Every record after the initial one needs a query")
        self.records.append(record)

    def values(self, metric: str) -> np.ndarray:
        """Return QM(t) for one metric along the curve."""
        return np.array([r.metrics[metric] for r in self.records], dtype=float)

    @property
    def queries(self) -> List[CurveRecord]:
        """Records that carry a query."""
        return self.records[1:]

    def __len__(self) -> int:
        """Number of records including the initial one."""
        return len(self.records)


def _qr(qm: np.ndarray, i: int, j: int) -> float:
    return float(qm[j] - qm[i])


def _need(k: int, available: int, what: str) -> None:
    if not 1 <= k <= available:
        raise OcalError(f"{what} needs 1 <= k <= {available}, got {k}")


def start_quality(qm: np.ndarray) -> float:
    """SQ: quality before the first query."""
    return float(qm[0])


def ramp_up(qm: np.ndarray, k: int) -> float:
    """RU(k): gain after the first k queries."""
    _need(k, qm.size - 1, "RU")
    return _qr(qm, 0, k)


def quality_range(qm: np.ndarray, i: int = 0, j: int = -1) -> float:
    """QR(i, j): quality at record j minus quality at record i."""
    return _qr(qm, i, j)


def average_end_quality(qm: np.ndarray, k: int) -> float:
    """AEQ(k): mean quality over the last k records."""
    _need(k, qm.size, "AEQ")
    return float(np.mean(qm[-k:]))


def learning_stability(qm: np.ndarray, k: int) -> float:
    """LS(k): recent gain per query relative to the overall gain per query."""
    n_queries = qm.size - 1
    _need(k, n_queries, "LS")
    total = _qr(qm, 0, -1)
    if total <= 0:
        return 0.0
    recent = _qr(qm, -1 - k, -1)
    return (recent / k) / (total / n_queries)


def ratio_outlier_queries(curve: ProgressCurve) -> float:
    """ROQ: share of queries the oracle answered with outlier."""
    queries = curve.queries
    if not queries:
        return 0.0
    hits = sum(1 for r in queries if r.oracle_label == constants.OUTLIER)
    return hits / len(queries)


SUMMARY_DESCRIPTIONS = {
    "sq": "Start quality QM(t_init).",
    "eq": "End quality QM(t_end).",
    "ru:<k>": "Ramp-up QM(t_k) − QM(t_init).",
    "qr": "Quality range QM(t_end) − QM(t_init).",
    "aeq:<k>": "Mean quality of the last k records.",
    "ls:<k>": "Learning stability of the last k queries.",
    "roq": "Ratio of outlier queries.",
}

_WITH_K: Dict[str, Callable[[np.ndarray, int], float]] = {
    "ru": ramp_up,
    "aeq": average_end_quality,
    "ls": learning_stability,
}


def summarize(curve: ProgressCurve, which: Sequence[str], metric: str) -> Dict[str, float]:
    """Compute the requested summaries of one metric's progress curve.

    Args:
        curve: The progress curve.
        which: Summary names such as ``sq``, ``qr``, ``aeq:5`` or ``ls:5``.
        metric: Metric whose values are summarized.

    Raises:
        EmptyCurveError: If the curve has no records.
        OcalError: On unknown summaries or out-of-range k.
    """
    if len(curve) == 0:
        raise EmptyCurveError("Cannot summarize an empty progress curve")
    qm = curve.values(metric)
    out: Dict[str, float] = {}
    for name in which:
        key, _, arg = name.partition(":")
        if key == "sq":
            out[name] = start_quality(qm)
        elif key == "eq":
            out[name] = float(qm[-1])
        elif key == "qr":
            out[name] = quality_range(qm)
        elif key == "roq":
            out[name] = ratio_outlier_queries(curve)
        elif key in _WITH_K:
            try:
                k = int(arg)
            except ValueError as exc:
                raise OcalError(f"Summary '{name}' needs an integer k, e.g. '{key}:5'") from exc
            out[name] = _WITH_K[key](qm, k)
        else:
            raise OcalError(f"Unknown summary '{name}'. Known: {sorted(SUMMARY_DESCRIPTIONS)}")
    return out
