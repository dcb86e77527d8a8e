"""Pydantic schemas for experiment configs, grid documents and result files.

Every document the toolkit reads or writes is validated by one of these models.
Unknown keys are rejected so a misspelled field never silently falls back to a default.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ocal import constants
from ocal.metrics import parse_metric_name

StrategyName = Literal["mm", "emm", "eme", "ml", "hc", "db", "nb", "bnc", "rand", "rand_out"]
PoolName = Literal["Pu", "Pp", "Pn", "Pa"]
SplitName = Literal["Sh", "Sf", "Si"]
LearnerName = Literal["SVDD", "SVDDneg", "SSAD"]


class StrategyConfig(BaseModel):
    """Query strategy and its parameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: StrategyName = Field(description="Registry name of the query strategy.")
    prior_inlier: Optional[float] = Field(
        default=None,
        gt=0,
        lt=1,
        description="p(in) for mm and ml. Defaults to one minus the true outlier share.",
    )
    eta_nb: float = Field(
        default=constants.DEFAULT_ETA_NB, ge=0, le=1, description="Weight of τ_DB in nb."
    )
    k_nn: int = Field(
        default=constants.DEFAULT_K_NN, ge=1, description="Neighborhood size of nb."
    )
    eta_bnc: float = Field(
        default=constants.DEFAULT_ETA_BNC,
        ge=0,
        le=1,
        description="Weight of the nearest-neighbor distance term in bnc.",
    )
    p_bnc: float = Field(
        default=constants.DEFAULT_P_BNC,
        ge=0,
        le=1,
        description="Probability that a bnc iteration queries at random.",
    )
    modified_ml: bool = Field(
        default=True,
        description="Let ml run with fewer than M labeled outliers by omitting the "
        "outlier terms.",
    )
    px_support: Literal["all", "unlabeled"] = Field(
        default="all", description="Observations the marginal density p(x) is estimated from."
    )
    rng_seed: int = Field(default=0, description="Offset of the per-iteration random stream.")


class BlobsSpec(BaseModel):
    """Synthetic Gaussian blob with uniform far outliers."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_inliers: int = Field(ge=1)
    n_outliers: int = Field(ge=1)
    n_features: int = Field(default=2, ge=1)
    seed: int = 0


class DatasetRef(BaseModel):
    """Where a dataset comes from and how it is resampled."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(description="Name used in results and summaries.")
    path: Optional[str] = Field(default=None, description="CSV file with a label column.")
    label_column: str = Field(default="label", description="Name of the label column.")
    synthetic: Optional[BlobsSpec] = Field(
        default=None, description="Generate the data instead of reading a file."
    )
    outlier_rate: Optional[float] = Field(
        default=None, gt=0, lt=1, description="Resample to this outlier share."
    )
    max_n: int = Field(
        default=constants.DEFAULT_MAX_N, ge=2, description="Size cap when resampling."
    )
    resample_seed: Optional[int] = Field(
        default=None, description="Seed of the resampled version."
    )

    @model_validator(mode="after")
    def _one_source(self) -> "DatasetRef":
        if (self.path is None) == (self.synthetic is None):
            raise ValueError(f"Dataset '{self.name}' needs exactly one of 'path' or 'synthetic'")
        return self


class PoolSpec(BaseModel):
    """Initial pool strategy."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy: PoolName
    param: Optional[float] = Field(default=None, description="p for Pp, n for Pn.")
    seed: int = Field(default=0, description="Seed of the initial pool draw.")


class SplitSpec(BaseModel):
    """Split strategy."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    strategy: SplitName
    train_fraction: float = Field(default=constants.DEFAULT_TRAIN_FRACTION, gt=0, lt=1)


class LearnerSpec(BaseModel):
    """Base learner and its hyperparameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: LearnerName
    gamma: str = Field(
        default="scott", description="γ heuristic: 'scott', 'wang' or 'fixed:<value>'."
    )
    kappa: float = Field(default=1.0, ge=0, description="SSAD margin trade-off κ.")
    C: Optional[float] = Field(
        default=None,
        gt=0,
        le=1,
        description="Fixed C = C1. Re-derived from the training size at every fit when unset.",
    )
    C2: Optional[float] = Field(default=None, gt=0, description="Fixed C2; defaults to C1.")
    outlier_fraction: Optional[float] = Field(
        default=None,
        gt=0,
        lt=1,
        description="ν used to derive C. Defaults to the true outlier share.",
    )


def _check_metrics(names: List[str]) -> List[str]:
    if not names:
        raise ValueError("At least one metric is required")
    for name in names:
        parse_metric_name(name)
    return names


class ExperimentConfig(BaseModel):
    """One grid cell: everything needed to replay an active-learning run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dataset: DatasetRef
    pool: PoolSpec
    split: SplitSpec
    learner: LearnerSpec
    strategy: StrategyConfig
    metrics: List[str] = Field(default_factory=lambda: list(constants.DEFAULT_METRICS))
    budget: int = Field(default=constants.DEFAULT_BUDGET, ge=0)
    seed: int = Field(default=0, description="Repetition seed.")
    oracle_noise: float = Field(default=0.0, ge=0, lt=1)

    check_metrics = field_validator("metrics")(_check_metrics)

    def canonical_json(self) -> str:
        """Serialize with sorted keys and compact separators."""
        return canonical_json(self.model_dump(mode="json"))

    def fingerprint(self) -> str:
        """Return the SHA-256 of the canonical serialization."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


class GridSpec(BaseModel):
    """Cross product of experiment settings."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="grid")
    datasets: List[DatasetRef] = Field(min_length=1)
    resample_seeds: List[int] = Field(
        default_factory=lambda: list(constants.DEFAULT_RESAMPLE_SEEDS),
        description="Resampled versions per dataset that sets an outlier_rate.",
    )
    pools: List[PoolSpec] = Field(min_length=1)
    pool_seeds: List[int] = Field(default_factory=lambda: [0])
    splits: List[SplitSpec] = Field(min_length=1)
    learners: List[LearnerSpec] = Field(min_length=1)
    kappas: Optional[List[float]] = Field(
        default=None, description="κ sweep applied to SSAD learners."
    )
    strategies: List[StrategyConfig] = Field(min_length=1)
    metrics: List[str] = Field(default_factory=lambda: list(constants.DEFAULT_METRICS))
    budget: int = Field(default=constants.DEFAULT_BUDGET, ge=0)
    seeds: List[int] = Field(default_factory=lambda: [0])
    oracle_noise: float = Field(default=0.0, ge=0, lt=1)

    check_metrics = field_validator("metrics")(_check_metrics)


class ResultLine(BaseModel):
    """One progress-curve record as stored in a cell's JSON-lines file."""

    model_config = ConfigDict(extra="forbid")

    t: int = Field(ge=0)
    queried_index: Optional[int] = None
    oracle_label: Optional[Literal["inlier", "outlier"]] = None
    metrics: Dict[str, float]
    exploratory: bool = False


class CellSummary(BaseModel):
    """Everything about a cell that is not part of its curve."""

    model_config = ConfigDict(extra="forbid")

    fingerprint: str
    config: ExperimentConfig
    status: Literal["ok", "truncated", "failed", "infeasible"]
    summaries: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    error: Optional[str] = None
    timing_ms: List[float] = Field(default_factory=list)
    audit: Optional[List[Dict[str, Any]]] = None


def canonical_json(payload: Any) -> str:
    """Render JSON with sorted keys and no insignificant whitespace."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
