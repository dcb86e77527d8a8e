"""Dataset loading, resampling, initial pools and train/test splits."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from ocal import constants
from ocal.errors import InfeasibleScenarioError, OcalError, ParseError

logger = logging.getLogger(__name__)

_LABEL_MAP = {
    "inlier": 0,
    "outlier": 1,
    "0": 0,
    "1": 1,
}

_PANDAS_LINE = re.compile(r"line (\d+)")


def round_half_up(value: float) -> int:
    """Round to the nearest integer with halves going up."""
    return int(math.floor(value + 0.5))


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Dataset:
    """Normalized observations with ground truth and provenance.

    ``y`` holds 1 for outliers and 0 for inliers.
    """

    name: str
    X: np.ndarray
    y: np.ndarray
    seed: Optional[int] = None
    provenance: Dict[str, object] = field(default_factory=dict)
    warnings: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate shapes and make the arrays read-only."""
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int8)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise OcalError(f"Dataset '{self.name}' needs an N×M matrix, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise OcalError(
                f"Dataset '{self.name}' has {X.shape[0]} rows but {y.shape[0]} labels"
            )
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "y", _freeze(y))

    @property
    def n_obs(self) -> int:
        """Number of observations N."""
        return int(self.X.shape[0])

    @property
    def n_features(self) -> int:
        """Number of attributes M."""
        return int(self.X.shape[1])

    @property
    def n_outliers(self) -> int:
        """Number of ground-truth outliers."""
        return int(self.y.sum())

    @property
    def outlier_rate(self) -> float:
        """Share of ground-truth outliers."""
        return self.n_outliers / self.n_obs

    def subset(self, indices: Sequence[int], **changes: object) -> "Dataset":
        """Return a dataset restricted to ``indices``, keeping their order."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            name=str(changes.get("name", self.name)),
            X=self.X[idx],
            y=self.y[idx],
            seed=changes.get("seed", self.seed),  # type: ignore[arg-type]
            provenance=dict(changes.get("provenance", self.provenance)),  # type: ignore[arg-type]
            warnings=tuple(changes.get("warnings", self.warnings)),  # type: ignore[arg-type]
        )


@dataclass
class PoolState:
    """Label status of every observation (see ``constants.UNLABELED`` and friends)."""

    status: np.ndarray

    @classmethod
    def unlabeled(cls, n_obs: int) -> "PoolState":
        """Create a pool where nothing is labeled."""
        return cls(np.full(n_obs, constants.UNLABELED, dtype=np.int8))

    @property
    def n_obs(self) -> int:
        """Number of observations covered by the pool."""
        return int(self.status.shape[0])

    def indices(self, status: int) -> np.ndarray:
        """Return the sorted indices with the given status."""
        return np.flatnonzero(self.status == status)

    @property
    def U(self) -> np.ndarray:
        """Unlabeled indices."""
        return self.indices(constants.UNLABELED)

    @property
    def L_in(self) -> np.ndarray:
        """Indices labeled as inliers."""
        return self.indices(constants.LABELED_INLIER)

    @property
    def L_out(self) -> np.ndarray:
        """Indices labeled as outliers."""
        return self.indices(constants.LABELED_OUTLIER)

    @property
    def L(self) -> np.ndarray:
        """All labeled indices."""
        return np.flatnonzero(self.status != constants.UNLABELED)

    def copy(self) -> "PoolState":
        """Return an independent copy."""
        return PoolState(self.status.copy())

    def assign(self, index: int, outlier: bool) -> None:
        """Label an unlabeled observation in place.

        Raises:
            OcalError: If the observation already carries a label.
        """
        if self.status[index] != constants.UNLABELED:
            raise OcalError(f"Observation {index} is already labeled")
        self.status[index] = (
            constants.LABELED_OUTLIER if outlier else constants.LABELED_INLIER
        )


@dataclass(frozen=True)
class SplitAssignment:
    """Which observations a learner is fit on and which it is evaluated on."""

    strategy: str
    train_idx: np.ndarray
    test_idx: np.ndarray
    train_fraction: Optional[float] = None
    stratified: bool = False

    def fit_indices(self, pool: PoolState) -> np.ndarray:
        """Return the training indices at fit time (labeled inliers under Si)."""
        if self.strategy == "Si":
            return pool.L_in
        return self.train_idx

    def eligible(self, pool: PoolState) -> np.ndarray:
        """Return the observations a query strategy may select."""
        return np.intersect1d(pool.U, self.train_idx, assume_unique=True)


def normalize(X: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Min-max normalize every column to [0, 1].

    Constant columns become all zeros.

    Returns:
        The normalized matrix and the indices of constant columns.
    """
    X = np.asarray(X, dtype=float)
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    constant = [int(j) for j in np.flatnonzero(span == 0)]
    safe = np.where(span == 0, 1.0, span)
    out = (X - lo) / safe
    out[:, span == 0] = 0.0
    return out, constant


def drop_duplicates(X: np.ndarray) -> np.ndarray:
    """Return sorted indices of the first occurrence of every distinct row."""
    rounded = np.round(X, constants.DUPLICATE_DECIMALS) + 0.0
    _, first = np.unique(rounded, axis=0, return_index=True)
    return np.sort(first)


@dataclass(frozen=True)
class ColumnSpec:
    """Describe which CSV columns hold the label and the features."""

    label: str = "label"
    features: Optional[Tuple[str, ...]] = None


def load_csv(path: str | Path, schema: ColumnSpec | None = None) -> Dataset:
    """Load a labeled CSV file into a normalized, de-duplicated dataset.

    Args:
        path: CSV file with a header row.
        schema: Label and feature column names; defaults to a final ``label`` column.

    Raises:
        ParseError: For malformed rows, non-numeric or missing values and unknown labels.
    """
    schema = schema or ColumnSpec()
    path = Path(path)
    if not path.exists():
        raise OcalError(f"Dataset file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        match = _PANDAS_LINE.search(str(exc))
        raise ParseError(
            "malformed row", line=int(match.group(1)) if match else None
        ) from exc

    if schema.label not in frame.columns:
        raise ParseError(f"missing label column '{schema.label}'", line=1)

    feature_cols = list(schema.features or [c for c in frame.columns if c != schema.label])
    if not feature_cols:
        raise ParseError("no feature columns", line=1)

    values = np.empty((len(frame), len(feature_cols)))
    for j, col in enumerate(feature_cols):
        if col not in frame.columns:
            raise ParseError(f"missing feature column '{col}'", line=1)
        raw = frame[col].str.strip()
        numeric = pd.to_numeric(raw, errors="coerce")
        bad = np.flatnonzero(numeric.isna().to_numpy())
        if bad.size:
            row = int(bad[0])
            cell = raw.iloc[row]
            what = "missing value" if pd.isna(cell) or cell == "" else f"non-numeric value {cell!r}"
            raise ParseError(f"{what} in column '{col}'", line=row + 2)
        values[:, j] = numeric.to_numpy(dtype=float)

    labels = frame[schema.label].str.strip().str.lower()
    y = np.empty(len(frame), dtype=np.int8)
    for row, label in enumerate(labels):
        if label not in _LABEL_MAP:
            raise ParseError(f"unknown label {label!r}", line=row + 2)
        y[row] = _LABEL_MAP[label]

    X, constant = normalize(values)
    warnings: List[str] = []
    for j in constant:
        message = f"constant column '{feature_cols[j]}' normalized to zeros"
        logger.warning("%s: %s", path.name, message)
        warnings.append(message)

    keep = drop_duplicates(X)
    if keep.size < X.shape[0]:
        logger.info("%s: removed %d duplicate rows", path.name, X.shape[0] - keep.size)

    return Dataset(
        name=path.stem,
        X=X[keep],
        y=y[keep],
        provenance={"path": str(path), "features": feature_cols, "duplicates": int(X.shape[0] - keep.size)},
        warnings=tuple(warnings),
    )


def resample(d: Dataset, outlier_rate: float, max_n: int, seed: int) -> Dataset:
    """Downsample a dataset to a target outlier rate and size.

    Inliers are kept up to ``round(max_n·(1−rate))``; the outlier count follows from the
    rate. When too few outliers exist, all of them are kept and a warning is recorded.
    """
    if not 0 < outlier_rate < 1:
        raise OcalError(f"outlier_rate must lie in (0, 1), got {outlier_rate}")
    inliers = np.flatnonzero(d.y == 0)
    outliers = np.flatnonzero(d.y == 1)
    if inliers.size == 0 or outliers.size == 0:
        raise OcalError(f"Dataset '{d.name}' needs at least one inlier and one outlier")

    n_in = min(inliers.size, round_half_up(max_n * (1 - outlier_rate)))
    n_out = round_half_up(n_in * outlier_rate / (1 - outlier_rate))
    n_out = max(1, min(n_out, max_n - n_in))

    warnings = list(d.warnings)
    shortfall = n_out > outliers.size
    if shortfall:
        message = (
            f"only {outliers.size} outliers available, {n_out} needed for rate {outlier_rate}"
        )
        logger.warning("%s: %s", d.name, message)
        warnings.append(message)
        n_out = int(outliers.size)

    rng = np.random.default_rng(seed)
    picked_in = rng.choice(inliers, size=n_in, replace=False)
    picked_out = rng.choice(outliers, size=n_out, replace=False)
    picked = np.sort(np.concatenate([picked_in, picked_out]))

    provenance = dict(d.provenance)
    provenance.update(
        {
            "source": d.name,
            "resample_seed": seed,
            "outlier_rate": outlier_rate,
            "max_n": max_n,
            "outlier_shortfall": shortfall,
        }
    )
    return d.subset(picked, seed=seed, provenance=provenance, warnings=warnings)


def resample_versions(
    d: Dataset,
    outlier_rate: float = constants.DEFAULT_OUTLIER_RATE,
    max_n: int = constants.DEFAULT_MAX_N,
    seeds: Iterable[int] = constants.DEFAULT_RESAMPLE_SEEDS,
) -> List[Dataset]:
    """Return one resampled version of ``d`` per seed."""
    return [resample(d, outlier_rate, max_n, seed) for seed in seeds]


def stratified_counts(size: int, n_obs: int, n_outliers: int) -> Tuple[int, int]:
    """Split a pool size into (inliers, outliers) following the outlier rate.

    The outlier stratum is rounded half up and capped by availability; inliers take the rest.
    """
    rate = n_outliers / n_obs if n_obs else 0.0
    n_out = min(max(round_half_up(size * rate), 0), n_outliers)
    n_in = size - n_out
    if n_in > n_obs - n_outliers:
        n_in = n_obs - n_outliers
        n_out = min(size - n_in, n_outliers)
    return n_in, n_out


def expected_label_counts(
    strategy: str, param: float | int | None, n_obs: int, n_outliers: int, n_features: int
) -> Tuple[int, int]:
    """Return the (labeled inliers, labeled outliers) an initial pool strategy yields."""
    if strategy == "Pu":
        return 0, 0
    if strategy == "Pp":
        p = float(param if param is not None else constants.DEFAULT_POOL_P)
        if not 0 < p < 1:
            raise OcalError(f"Pp needs 0 < p < 1, got {p}")
        return stratified_counts(round_half_up(p * n_obs), n_obs, n_outliers)
    if strategy == "Pn":
        n = int(param if param is not None else constants.DEFAULT_POOL_N)
        if not 0 < n <= n_obs:
            raise OcalError(f"Pn needs 0 < n <= {n_obs}, got {n}")
        return stratified_counts(n, n_obs, n_outliers)
    if strategy == "Pa":
        if n_features > n_obs - n_outliers:
            raise InfeasibleScenarioError(
                f"Pa needs {n_features} labeled inliers but only {n_obs - n_outliers} exist"
            )
        return n_features, 0
    raise OcalError(f"Unknown pool strategy '{strategy}'")


def make_initial_pool(
    d: Dataset,
    strategy: str,
    param: float | int | None,
    seed: int,
    candidates: Optional[np.ndarray] = None,
) -> PoolState:
    """Draw the labeled set available before the first query.

    Args:
        d: The dataset; labels are copied from its ground truth.
        strategy: One of ``Pu``, ``Pp``, ``Pn``, ``Pa``.
        param: ``p`` for Pp, ``n`` for Pn, ignored otherwise.
        seed: Sampling seed.
        candidates: Observations the pool may be drawn from (the training split under Sh).
    """
    pool = PoolState.unlabeled(d.n_obs)
    cand = np.arange(d.n_obs) if candidates is None else np.sort(np.asarray(candidates, dtype=int))
    cand_in = cand[d.y[cand] == 0]
    cand_out = cand[d.y[cand] == 1]

    n_in, n_out = expected_label_counts(
        strategy, param, cand.size, cand_out.size, d.n_features
    )
    if n_in == 0 and n_out == 0:
        return pool

    rng = np.random.default_rng(seed)
    chosen_in = rng.choice(cand_in, size=n_in, replace=False)
    chosen_out = rng.choice(cand_out, size=n_out, replace=False)
    pool.status[chosen_in] = constants.LABELED_INLIER
    pool.status[chosen_out] = constants.LABELED_OUTLIER
    return pool


def make_split(
    d: Dataset,
    strategy: str,
    train_fraction: float = constants.DEFAULT_TRAIN_FRACTION,
    seed: int = 0,
) -> SplitAssignment:
    """Partition observations into train and test sets.

    Sh draws a class-stratified holdout of size ``N − round(train_fraction·N)``; Sf and Si use
    all observations for both. Under Si the learner is fit on labeled inliers only, which
    ``SplitAssignment.fit_indices`` resolves at fit time.
    """
    everything = np.arange(d.n_obs)
    if strategy in ("Sf", "Si"):
        return SplitAssignment(strategy, everything, everything)
    if strategy != "Sh":
        raise OcalError(f"Unknown split strategy '{strategy}'")
    if not 0 < train_fraction < 1:
        raise OcalError(f"Sh needs 0 < train_fraction < 1, got {train_fraction}")

    n_train = round_half_up(train_fraction * d.n_obs)
    if not 0 < n_train < d.n_obs:
        raise OcalError(f"Sh with fraction {train_fraction} leaves an empty partition")
    try:
        train, test = train_test_split(
            everything, train_size=n_train, stratify=d.y, random_state=seed
        )
        stratified = True
    except ValueError:
        logger.warning("%s: class too small for a stratified holdout, splitting at random", d.name)
        train, test = train_test_split(everything, train_size=n_train, random_state=seed)
        stratified = False
    return SplitAssignment(
        "Sh", np.sort(train), np.sort(test), train_fraction=train_fraction, stratified=stratified
    )


def make_blobs_with_outliers(
    n_inliers: int,
    n_outliers: int,
    n_features: int = 2,
    seed: int = 0,
    inner_radius: float = 4.0,
    box: float = 6.0,
) -> Dataset:
    """Generate one Gaussian inlier blob with uniform outliers far from it.

    Outliers are drawn uniformly from ``[−box, box]^M`` and rejected inside ``inner_radius``.
    The result is min-max normalized like a loaded file.
    """
    rng = np.random.default_rng(seed)
    inliers = rng.standard_normal((n_inliers, n_features))
    outliers = np.empty((0, n_features))
    while outliers.shape[0] < n_outliers:
        draw = rng.uniform(-box, box, size=(4 * n_outliers, n_features))
        draw = draw[np.linalg.norm(draw, axis=1) >= inner_radius]
        outliers = np.vstack([outliers, draw])[:n_outliers]
    X, _ = normalize(np.vstack([inliers, outliers]))
    y = np.concatenate([np.zeros(n_inliers), np.ones(n_outliers)])
    return Dataset(
        name=f"blobs-{n_features}d-{seed}",
        X=X,
        y=y,
        seed=seed,
        provenance={"generator": "blobs_with_outliers", "seed": seed},
    )
