import json
import time
import warnings

import numpy as np
import pandas as pd
import pytest

from ocal import constants, graph, run_experiment
from ocal.builder import ExperimentConfigBuilder
from ocal.cli import main
from ocal.context import Context
from ocal.data import make_initial_pool, make_split
from ocal.harness import (
    aggregate,
    emit_curves,
    expand_grid,
    load_dataset,
    run_cell,
    run_grid,
    validate_grid,
)
from ocal.signatures import (
    BlobsSpec,
    CellSummary,
    DatasetRef,
    GridSpec,
    LearnerSpec,
    PoolSpec,
    SplitSpec,
    StrategyConfig,
)
from ocal.store import curve_path, load_results, summary_path


def _config(ref, strategy="db", pool="Pn", split="Sf", learner="SVDDneg", budget=5, seed=1):
    return (
        ExperimentConfigBuilder()
        .set_dataset(ref)
        .set_pool(PoolSpec(strategy=pool, param=25 if pool == "Pn" else None))
        .set_split(SplitSpec(strategy=split))
        .set_learner(LearnerSpec(name=learner))
        .set_strategy(StrategyConfig(name=strategy))
        .set_run(budget=budget, seed=seed)
        .build()
    )


def _grid(ref, **changes) -> GridSpec:
    doc = {
        "name": "small",
        "datasets": [ref.model_dump(mode="json")],
        "pools": [{"strategy": "Pu"}, {"strategy": "Pn", "param": 25}],
        "splits": [{"strategy": "Sf"}, {"strategy": "Si"}],
        "learners": [{"name": "SVDDneg"}],
        "strategies": [{"name": "mm"}, {"name": "db"}],
        "budget": 3,
        "seeds": [0],
    }
    doc.update(changes)
    return GridSpec.model_validate(doc)


def test_graph_is_compiled() -> None:
    assert graph.name == "Active Learning Loop"


def test_zero_budget_records_start_quality_only(blobs_ref) -> None:
    record = run_experiment(_config(blobs_ref, budget=0))
    assert record.status == "ok"
    assert len(record.curve) == 1
    assert set(record.summaries["mcc"]) == {"sq", "eq", "qr", "roq"}
    assert record.summaries["mcc"]["qr"] == 0.0


def test_queries_follow_the_oracle(blobs_ref) -> None:
    cfg = _config(blobs_ref, budget=5)
    record = run_experiment(cfg)
    d = load_dataset(cfg.dataset)
    initial = make_initial_pool(d, "Pn", 25, cfg.pool.seed)

    queried = [r.queried_index for r in record.curve.queries]
    assert [r.t for r in record.curve.records] == list(range(6))
    assert len(set(queried)) == 5
    assert not set(queried) & set(initial.L.tolist())
    for r in record.curve.queries:
        expected = constants.OUTLIER if d.y[r.queried_index] else constants.INLIER
        assert r.oracle_label == expected
    assert set(record.summaries) == set(cfg.metrics)
    assert len(record.timing_ms) == 6


@pytest.mark.parametrize("strategy", constants.STRATEGY_NAMES)
@pytest.mark.parametrize("learner", ["SVDDneg", "SSAD"])
def test_every_strategy_runs(blobs_ref, strategy, learner) -> None:
    record = run_experiment(_config(blobs_ref, strategy=strategy, learner=learner, budget=3))
    assert record.status == "ok"
    assert len(record.curve) == 4
    for r in record.curve.records:
        assert all(np.isfinite(v) for v in r.metrics.values())


def test_unsupervised_svdd_with_inlier_split(blobs_ref) -> None:
    record = run_experiment(_config(blobs_ref, learner="SVDD", split="Si", budget=3))
    assert record.status == "ok"
    assert len(record.curve) == 4


def test_holdout_is_never_queried(blobs_ref) -> None:
    cfg = _config(blobs_ref, split="Sh", strategy="rand", budget=10)
    record = run_experiment(cfg)
    split = make_split(load_dataset(cfg.dataset), "Sh", cfg.split.train_fraction, seed=cfg.seed)
    queried = {r.queried_index for r in record.curve.queries}
    assert len(queried) == 10
    assert not queried & set(split.test_idx.tolist())


def test_pool_exhaustion_truncates_the_run(blobs_ref) -> None:
    cfg = _config(blobs_ref, split="Sh", strategy="rand", budget=30)
    record = run_experiment(cfg)
    # 51 training observations, 25 of them labeled up front
    assert record.status == "truncated"
    assert len(record.curve) == 27
    assert any("pool exhausted" in w for w in record.warnings)


def test_audit_records_every_fit(blobs_ref) -> None:
    record = run_experiment(_config(blobs_ref, budget=2), Context(audit=True))
    assert [a["t"] for a in record.audit] == [0, 1, 2]
    assert all(a["kkt_residual"] <= 1e-5 for a in record.audit)


def test_runs_are_reproducible(blobs_ref, tmp_path) -> None:
    cfg = _config(blobs_ref, strategy="bnc", budget=6)
    first = run_cell(cfg, Context(), tmp_path / "a")
    second = run_cell(cfg, Context(), tmp_path / "b")
    assert first.status == second.status == "ok"
    a = curve_path(tmp_path / "a", cfg.fingerprint()).read_bytes()
    b = curve_path(tmp_path / "b", cfg.fingerprint()).read_bytes()
    assert a == b


def test_infeasible_cell_is_recorded(blobs_ref, tmp_path) -> None:
    cfg = _config(blobs_ref, pool="Pu", strategy="mm")
    summary = run_cell(cfg, Context(), tmp_path)
    assert summary.status == "infeasible"
    assert "labeled" in summary.error
    assert summary_path(tmp_path, cfg.fingerprint()).exists()
    assert not curve_path(tmp_path, cfg.fingerprint()).exists()


def test_budget_larger_than_pool_fails(blobs_ref, tmp_path) -> None:
    summary = run_cell(_config(blobs_ref, budget=60), Context(), tmp_path)
    assert summary.status == "failed"
    assert "exceeds" in summary.error


def test_grid_expansion_excludes_infeasible_cells(blobs_ref) -> None:
    spec = _grid(blobs_ref)
    cells = validate_grid(spec)
    assert len(cells) == 8
    excluded = {
        (c.config.pool.strategy, c.config.split.strategy, c.config.strategy.name)
        for c in cells
        if not c.gate.ok
    }
    assert excluded == {("Pu", "Sf", "mm"), ("Pu", "Si", "mm"), ("Pu", "Si", "db")}
    assert len(expand_grid(spec)) == 5


def test_grid_sweeps_kappa_for_ssad_only(blobs_ref) -> None:
    spec = _grid(
        blobs_ref,
        pools=[{"strategy": "Pn", "param": 25}],
        splits=[{"strategy": "Sf"}],
        learners=[{"name": "SVDDneg"}, {"name": "SSAD"}],
        kappas=[0.1, 1.0],
        strategies=[{"name": "db"}],
    )
    cells = validate_grid(spec)
    assert sorted((c.config.learner.name, c.config.learner.kappa) for c in cells) == [
        ("SSAD", 0.1),
        ("SSAD", 1.0),
        ("SVDDneg", 1.0),
    ]


def test_grid_run_summaries_and_curves(blobs_ref, tmp_path) -> None:
    spec = _grid(blobs_ref, splits=[{"strategy": "Sf"}])
    summaries = run_grid(spec, Context(workers=1), tmp_path / "results")
    assert len(summaries) == 3
    manifest = json.loads((tmp_path / "results" / "manifest.json").read_text())
    assert len(manifest["cells"]) == 3

    results = load_results(tmp_path / "results")
    assert len(results) == 3
    table = aggregate([s for s, _ in results], group_by=["strategy"], which=["qr", "sq"])
    assert sorted(table["strategy"]) == ["db", "mm"]

    written = emit_curves(results, tmp_path / "curves")
    curve_files = [p for p in written if p.name != "summary.csv"]
    assert len(curve_files) == 3 * len(spec.metrics)
    for path in curve_files:
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["iteration", "value", "queried_label"]
        assert len(frame) == spec.budget + 1
    assert len(pd.read_csv(tmp_path / "curves" / "summary.csv")) == 3


def _summary(ref, strategy: str, status: str, qr: float | None = None) -> CellSummary:
    cfg = _config(ref, strategy=strategy)
    return CellSummary(
        fingerprint=cfg.fingerprint(),
        config=cfg,
        status=status,
        summaries={} if qr is None else {"mcc": {"qr": qr}},
    )


def test_aggregate_median_and_missing_groups(blobs_ref) -> None:
    summaries = [
        _summary(blobs_ref, "db", "ok", 0.1),
        _summary(blobs_ref, "db", "ok", 0.5),
        _summary(blobs_ref, "db", "ok", 0.3),
        _summary(blobs_ref, "mm", "failed"),
    ]
    table = aggregate(summaries, group_by=["strategy"], statistic="median", which=["qr"])
    values = dict(zip(table["strategy"], table["qr"]))
    assert values["db"] == pytest.approx(0.3)
    assert values["mm"] == constants.MISSING_CELL
    mean = aggregate(summaries, group_by=["strategy"], statistic="mean", which=["qr"])
    assert dict(zip(mean["strategy"], mean["qr"]))["db"] == pytest.approx(0.3)


@pytest.mark.parametrize("with_failure", [False, True])
def test_aggregate_raises_no_future_warning(blobs_ref, with_failure) -> None:
    summaries = [_summary(blobs_ref, "db", "ok", 0.2), _summary(blobs_ref, "rand", "ok", 0.1)]
    if with_failure:
        summaries.append(_summary(blobs_ref, "mm", "failed"))
    with warnings.catch_warnings():
        warnings.simplefilter("error", FutureWarning)
        table = aggregate(summaries, group_by=["strategy"], which=["qr"])
    assert dict(zip(table["strategy"], table["qr"]))["db"] == pytest.approx(0.2)


def _blobs(seed: int) -> DatasetRef:
    return DatasetRef(name=f"blobs-{seed}", synthetic=BlobsSpec(n_inliers=150, n_outliers=8, seed=seed))


@pytest.mark.slow
def test_db_and_rand_out_learn_on_separable_blobs() -> None:
    started = time.perf_counter()
    qr = {name: [] for name in ("db", "rand_out", "rand")}
    for seed in range(10):
        for name in qr:
            cfg = _config(_blobs(seed), strategy=name, pool="Pu", budget=30, seed=seed)
            result = run_experiment(cfg)
            assert result.status == "ok"
            qr[name].append(result.summaries["mcc"]["qr"])
    elapsed = time.perf_counter() - started

    assert sum(v >= 0.2 for v in qr["db"]) >= 8
    assert np.median(qr["db"]) > np.median(qr["rand"])
    assert np.median(qr["rand_out"]) > np.median(qr["rand"])
    assert elapsed < 300


@pytest.mark.slow
def test_full_strategy_grid_on_a_larger_dataset(tmp_path) -> None:
    ref = DatasetRef(
        name="blobs-large", synthetic=BlobsSpec(n_inliers=950, n_outliers=50, n_features=20, seed=0)
    )
    spec = GridSpec(
        name="scale",
        datasets=[ref],
        pools=[PoolSpec(strategy="Pn", param=25)],
        splits=[SplitSpec(strategy="Sf")],
        learners=[LearnerSpec(name="SVDDneg")],
        strategies=[StrategyConfig(name=name) for name in constants.STRATEGY_NAMES],
        budget=50,
    )
    started = time.perf_counter()
    summaries = run_grid(spec, Context(workers=4), tmp_path / "results")
    elapsed = time.perf_counter() - started

    assert len(summaries) == 10
    assert all(s.status in ("ok", "truncated") for s in summaries)
    assert elapsed < 1800


def test_cli_lists_registries(capsys) -> None:
    assert main(["list-strategies"]) == 0
    assert "rand_out" in capsys.readouterr().out
    assert main(["list-learners"]) == 0
    assert "SSAD" in capsys.readouterr().out


def test_cli_end_to_end(blobs_ref, tmp_path, capsys) -> None:
    config = tmp_path / "grid.json"
    config.write_text(_grid(blobs_ref, pools=[{"strategy": "Pn", "param": 25}]).model_dump_json())
    results = tmp_path / "results"

    assert main(["validate", str(config)]) == 0
    assert main(["run", str(config), "--results-dir", str(results)]) == 0
    capsys.readouterr()
    assert main(["summarize", str(results), "--group-by", "split", "strategy", "--summary", "qr,sq"]) == 0
    out = capsys.readouterr().out
    assert "strategy" in out and "qr" in out
    assert main(["curves", str(results), "-o", str(tmp_path / "curves")]) == 0
    assert (tmp_path / "curves" / "summary.csv").exists()


def test_cli_reports_invalid_documents(tmp_path) -> None:
    config = tmp_path / "grid.json"
    config.write_text('{"datasets": []}')
    assert main(["validate", str(config)]) == 2
