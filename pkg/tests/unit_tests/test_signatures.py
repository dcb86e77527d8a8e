from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from ocal.builder import ExperimentConfigBuilder
from ocal.metrics import CurveRecord, ProgressCurve
from ocal.oracle import Oracle
from ocal.signatures import (
    DatasetRef,
    ExperimentConfig,
    GridSpec,
    LearnerSpec,
    PoolSpec,
    SplitSpec,
    StrategyConfig,
    canonical_json,
)
from ocal.store import read_curve, write_curve

EXAMPLE_GRID = Path(__file__).parents[2] / "static" / "grids" / "example.json"


def _config(blobs_ref, **run) -> ExperimentConfig:
    return (
        ExperimentConfigBuilder()
        .set_dataset(blobs_ref)
        .set_pool(PoolSpec(strategy="Pn", param=25))
        .set_split(SplitSpec(strategy="Sf"))
        .set_learner(LearnerSpec(name="SVDDneg"))
        .set_strategy(StrategyConfig(name="db"))
        .set_run(**run)
        .build()
    )


def test_fingerprint_is_stable(blobs_ref) -> None:
    a = _config(blobs_ref, budget=10, seed=1)
    b = ExperimentConfig.model_validate_json(a.canonical_json())
    assert a.fingerprint() == b.fingerprint()
    assert len(a.fingerprint()) == 64
    assert _config(blobs_ref, budget=10, seed=2).fingerprint() != a.fingerprint()


def test_canonical_json() -> None:
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


def test_unknown_keys_are_rejected() -> None:
    with pytest.raises(ValidationError):
        StrategyConfig(name="db", eta=0.3)
    with pytest.raises(ValidationError):
        PoolSpec(strategy="Px")


def test_dataset_needs_exactly_one_source() -> None:
    with pytest.raises(ValidationError):
        DatasetRef(name="nothing")
    with pytest.raises(ValidationError):
        DatasetRef(
            name="both", path="data.csv", synthetic={"n_inliers": 10, "n_outliers": 1}
        )


def test_metric_names_are_validated(blobs_ref) -> None:
    with pytest.raises(ValidationError):
        _config(blobs_ref, metrics=["f1"])
    assert _config(blobs_ref, metrics=["pauc:0.05"]).metrics == ["pauc:0.05"]


def test_builder_requires_every_part(blobs_ref) -> None:
    builder = ExperimentConfigBuilder().set_dataset(blobs_ref)
    with pytest.raises(ValueError, match="missing"):
        builder.build()


def test_builder_resets_after_build(blobs_ref) -> None:
    builder = ExperimentConfigBuilder()
    builder.set_dataset(blobs_ref).set_pool(PoolSpec(strategy="Pu")).set_split(
        SplitSpec(strategy="Sf")
    ).set_learner(LearnerSpec(name="SVDDneg")).set_strategy(StrategyConfig(name="rand"))
    builder.build()
    with pytest.raises(ValueError):
        builder.build()


def _with(blobs_ref, learner: LearnerSpec, kappa=None, dataset=None, resample_seed=None):
    return (
        ExperimentConfigBuilder()
        .set_dataset(dataset or blobs_ref, resample_seed=resample_seed)
        .set_pool(PoolSpec(strategy="Pu"))
        .set_split(SplitSpec(strategy="Sf"))
        .set_learner(learner, kappa=kappa)
        .set_strategy(StrategyConfig(name="rand"))
        .build()
    )


def test_builder_applies_kappa_to_ssad_only(blobs_ref) -> None:
    assert _with(blobs_ref, LearnerSpec(name="SSAD"), kappa=0.1).learner.kappa == 0.1
    assert _with(blobs_ref, LearnerSpec(name="SVDDneg"), kappa=0.1).learner.kappa == 1.0


def test_builder_pins_resample_seed_only_when_resampling(blobs_ref) -> None:
    resampled = blobs_ref.model_copy(update={"outlier_rate": 0.05})
    learner = LearnerSpec(name="SVDDneg")
    assert _with(blobs_ref, learner, dataset=resampled, resample_seed=2).dataset.resample_seed == 2
    assert _with(blobs_ref, learner, resample_seed=2).dataset.resample_seed is None


def test_example_grid_is_valid() -> None:
    spec = GridSpec.model_validate_json(EXAMPLE_GRID.read_text())
    assert spec.budget == 30
    assert [s.name for s in spec.strategies] == ["db", "rand_out", "rand", "mm"]


def test_oracle_without_noise_returns_truth() -> None:
    oracle = Oracle(np.array([0, 1, 0]))
    assert [oracle.ask(i) for i in range(3)] == ["inlier", "outlier", "inlier"]


def test_oracle_noise_is_reproducible() -> None:
    truth = np.zeros(200, dtype=int)
    first, second = Oracle(truth, noise_rate=0.3, seed=4), Oracle(truth, noise_rate=0.3, seed=4)
    a = [first.ask(i) for i in range(200)]
    b = [second.ask(i) for i in range(200)]
    assert a == b
    assert 20 < a.count("outlier") < 100


def test_oracle_rejects_bad_noise() -> None:
    with pytest.raises(ValueError):
        Oracle(np.zeros(3), noise_rate=1.0)


def test_curve_store_round_trip(tmp_path) -> None:
    curve = ProgressCurve()
    curve.append(CurveRecord(0, None, None, {"mcc": 0.25}))
    curve.append(CurveRecord(1, 7, "outlier", {"mcc": 0.5}, exploratory=True))
    path = tmp_path / "cell.jsonl"
    write_curve(path, curve)
    assert read_curve(path).records == curve.records
    assert path.read_text().splitlines()[1].startswith('{"exploratory":true')
