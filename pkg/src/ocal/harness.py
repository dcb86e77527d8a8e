"""Run experiments, expand grids, and turn result stores into tables and curves."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ocal import constants, store
from ocal.builder import ExperimentConfigBuilder
from ocal.context import Context
from ocal.data import (
    ColumnSpec,
    Dataset,
    expected_label_counts,
    load_csv,
    make_blobs_with_outliers,
    make_initial_pool,
    make_split,
    resample,
)
from ocal.errors import InfeasibleScenarioError, OcalError
from ocal.graph import graph, recursion_limit
from ocal.kernel import KernelCache, KernelConfig, resolve_gamma
from ocal.metrics import CurveRecord, ProgressCurve, summarize
from ocal.oracle import Oracle
from ocal.signatures import CellSummary, DatasetRef, ExperimentConfig, GridSpec
from ocal.state import RunContext
from ocal.strategies import GateResult, feasibility_gate

logger = logging.getLogger(__name__)


@dataclass
class ResultRecord:
    """Outcome of one experiment."""

    fingerprint: str
    config: ExperimentConfig
    status: str
    curve: ProgressCurve = field(default_factory=ProgressCurve)
    summaries: Dict[str, Dict[str, float]] = field(default_factory=dict)
    timing_ms: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    error: Optional[str] = None
    audit: Optional[List[Dict[str, Any]]] = None

    def to_summary(self) -> CellSummary:
        """Return the persisted summary document of this record."""
        return CellSummary(
            fingerprint=self.fingerprint,
            config=self.config,
            status=self.status,  # type: ignore[arg-type]
            summaries=self.summaries,
            warnings=self.warnings,
            error=self.error,
            timing_ms=self.timing_ms,
            audit=self.audit,
        )


def load_dataset(ref: DatasetRef) -> Dataset:
    """Load or generate a dataset and resample it when the reference asks for it."""
    if ref.synthetic is not None:
        spec = ref.synthetic
        d = make_blobs_with_outliers(
            spec.n_inliers, spec.n_outliers, n_features=spec.n_features, seed=spec.seed
        )
        d = d.subset(np.arange(d.n_obs), name=ref.name)
    else:
        d = load_csv(ref.path, ColumnSpec(label=ref.label_column))  # type: ignore[arg-type]
        d = d.subset(np.arange(d.n_obs), name=ref.name)
    if ref.outlier_rate is not None:
        seed = ref.resample_seed if ref.resample_seed is not None else 0
        d = resample(d, ref.outlier_rate, ref.max_n, seed)
    return d


def default_summaries(n_queries: int) -> List[str]:
    """Return the summaries stored with a cell that asked ``n_queries`` queries."""
    names = ["sq", "eq", "qr", "roq"]
    if n_queries >= 1:
        k = min(constants.DEFAULT_SUMMARY_K, n_queries)
        names += [f"ru:{k}", f"aeq:{k}", f"ls:{k}"]
    return names


def _gram_key(ref: DatasetRef) -> Hashable:
    return ref.model_dump_json()


def run_experiment(
    cfg: ExperimentConfig,
    settings: Optional[Context] = None,
    cache: Optional[KernelCache] = None,
) -> ResultRecord:
    """Execute one active-learning run.

    The learner is fit on the split's training set (labeled inliers under Si) and
    evaluated on the holdout under Sh, on all observations otherwise. The run is
    deterministic given the config.

    Raises:
        InfeasibleScenarioError: If the initial pool does not satisfy the strategy's needs.
        OcalError: On invalid inputs or solver failures.
    """
    settings = settings or Context()
    d = load_dataset(cfg.dataset)
    gamma = resolve_gamma(cfg.learner.gamma, d.X)
    split = make_split(d, cfg.split.strategy, cfg.split.train_fraction, seed=cfg.seed)
    candidates = split.train_idx if split.strategy == "Sh" else None
    pool = make_initial_pool(d, cfg.pool.strategy, cfg.pool.param, cfg.pool.seed, candidates)

    gate = feasibility_gate(
        cfg.strategy.name,
        pool.L_in.size,
        pool.L_out.size,
        d.n_features,
        cfg.split.strategy,
        cfg.learner.name,
        cfg.strategy.modified_ml,
    )
    if not gate.ok:
        raise InfeasibleScenarioError(gate.reason or "rejected")
    if cfg.budget + pool.L.size > d.n_obs:
        raise OcalError(
            f"budget {cfg.budget} plus {pool.L.size} initial labels exceeds N={d.n_obs}"
        )

    strategy = cfg.strategy
    if strategy.prior_inlier is None:
        strategy = strategy.model_copy(update={"prior_inlier": 1.0 - d.outlier_rate})

    gram = (cache or KernelCache()).get(_gram_key(cfg.dataset), d.X, KernelConfig(gamma=gamma))
    context = RunContext(
        config=cfg,
        strategy=strategy,
        dataset=d,
        split=split,
        gram=gram,
        gamma=gamma,
        oracle=Oracle(d.y, noise_rate=cfg.oracle_noise, seed=cfg.seed),
        settings=settings,
    )
    logger.info(
        "%s: %s/%s/%s/%s γ=%.4g budget=%d",
        d.name,
        cfg.pool.strategy,
        cfg.split.strategy,
        cfg.learner.name,
        cfg.strategy.name,
        gamma,
        cfg.budget,
    )
    out = graph.invoke(
        {"status": pool.status, "budget": cfg.budget},
        context=context,
        config={"recursion_limit": recursion_limit(cfg.budget)},
    )

    curve = ProgressCurve()
    for rec in out["records"]:
        curve.append(CurveRecord(**rec))
    n_queries = len(curve) - 1
    summaries = {
        metric: summarize(curve, default_summaries(n_queries), metric) for metric in cfg.metrics
    }
    truncated = out.get("stop_reason") is not None
    return ResultRecord(
        fingerprint=cfg.fingerprint(),
        config=cfg,
        status="truncated" if truncated else "ok",
        curve=curve,
        summaries=summaries,
        timing_ms=list(out.get("timings", [])),
        warnings=list(d.warnings) + list(out.get("warnings", [])),
        audit=list(out.get("audit", [])) if settings.audit else None,
    )


def run_cell(cfg: ExperimentConfig, settings: Context, results_dir: Path) -> CellSummary:
    """Run one grid cell and persist it; failures are recorded, never raised."""
    try:
        record = run_experiment(cfg, settings)
    except InfeasibleScenarioError as exc:
        logger.warning("cell %s infeasible: %s", cfg.fingerprint()[:12], exc.reason)
        record = ResultRecord(cfg.fingerprint(), cfg, "infeasible", error=exc.reason)
    except OcalError as exc:
        logger.warning("cell %s failed: %s", cfg.fingerprint()[:12], exc)
        record = ResultRecord(cfg.fingerprint(), cfg, "failed", error=str(exc))

    if record.status in ("ok", "truncated"):
        store.write_curve(store.curve_path(results_dir, record.fingerprint), record.curve)
    summary = record.to_summary()
    store.write_summary(store.summary_path(results_dir, record.fingerprint), summary)
    return summary


@dataclass(frozen=True)
class GridCell:
    """A grid cell with the verdict of the feasibility gate."""

    config: ExperimentConfig
    gate: GateResult

    def describe(self) -> str:
        """Return a one-line label of the cell."""
        c = self.config
        kappa = f" κ={c.learner.kappa}" if c.learner.name == "SSAD" else ""
        resample = "" if c.dataset.resample_seed is None else f"#{c.dataset.resample_seed}"
        return (
            f"{c.dataset.name}{resample} {c.pool.strategy}(seed {c.pool.seed}) "
            f"{c.split.strategy} {c.learner.name}{kappa} {c.strategy.name} seed={c.seed}"
        )


def _label_counts(d: Dataset, cfg: ExperimentConfig) -> Tuple[int, int]:
    if cfg.split.strategy == "Sh":
        split = make_split(d, "Sh", cfg.split.train_fraction, seed=cfg.seed)
        n_obs = split.train_idx.size
        n_outliers = int(d.y[split.train_idx].sum())
    else:
        n_obs, n_outliers = d.n_obs, d.n_outliers
    return expected_label_counts(
        cfg.pool.strategy, cfg.pool.param, n_obs, n_outliers, d.n_features
    )


def validate_grid(spec: GridSpec) -> List[GridCell]:
    """Expand the cartesian product of a grid and run the feasibility gate on every cell."""
    datasets: Dict[str, Dataset] = {}
    cells: List[GridCell] = []
    builder = ExperimentConfigBuilder()

    for ref in spec.datasets:
        resample_seeds: Sequence[Optional[int]] = (
            spec.resample_seeds if ref.outlier_rate is not None else [None]
        )
        for rs in resample_seeds:
            dataset_ref = ref if rs is None else ref.model_copy(update={"resample_seed": rs})
            key = dataset_ref.model_dump_json()
            if key not in datasets:
                datasets[key] = load_dataset(dataset_ref)
            d = datasets[key]

            for pool, pool_seed, split, learner, strategy, seed in itertools.product(
                spec.pools, spec.pool_seeds, spec.splits, spec.learners, spec.strategies, spec.seeds
            ):
                kappas: Iterable[Optional[float]] = (
                    spec.kappas if spec.kappas and learner.name == "SSAD" else [None]
                )
                for kappa in kappas:
                    cfg = (
                        builder.set_dataset(ref, resample_seed=rs)
                        .set_pool(pool, seed=pool_seed)
                        .set_split(split)
                        .set_learner(learner, kappa=kappa)
                        .set_strategy(strategy)
                        .set_run(
                            budget=spec.budget,
                            seed=seed,
                            metrics=spec.metrics,
                            oracle_noise=spec.oracle_noise,
                        )
                        .build()
                    )
                    try:
                        n_in, n_out = _label_counts(d, cfg)
                        gate = feasibility_gate(
                            strategy.name,
                            n_in,
                            n_out,
                            d.n_features,
                            split.strategy,
                            learner.name,
                            strategy.modified_ml,
                        )
                    except InfeasibleScenarioError as exc:
                        gate = GateResult(False, exc.reason)
                    except OcalError as exc:
                        gate = GateResult(False, str(exc))
                    cells.append(GridCell(cfg, gate))
    return cells


def expand_grid(spec: GridSpec) -> List[ExperimentConfig]:
    """Return the feasible cells of a grid; every exclusion is logged with its reason."""
    configs = []
    for cell in validate_grid(spec):
        if cell.gate.ok:
            configs.append(cell.config)
        else:
            logger.warning("excluded %s: %s", cell.describe(), cell.gate.reason)
    logger.info("grid '%s': %d feasible cells", spec.name, len(configs))
    return configs


def run_grid(
    spec: GridSpec, settings: Optional[Context] = None, results_dir: Optional[Path] = None
) -> List[CellSummary]:
    """Run every feasible cell, in parallel across cells, and write the manifest."""
    settings = settings or Context()
    out_dir = Path(results_dir or settings.results_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    configs = expand_grid(spec)
    summaries = Parallel(n_jobs=settings.workers)(
        delayed(run_cell)(cfg, settings, out_dir) for cfg in configs
    )
    store.write_manifest(out_dir, spec.name, summaries)
    failed = sum(1 for s in summaries if s.status in ("failed", "infeasible"))
    logger.info("grid '%s': %d cells run, %d failed", spec.name, len(summaries), failed)
    return list(summaries)


def _axes(summary: CellSummary) -> Dict[str, Any]:
    c = summary.config
    return {
        "dataset": c.dataset.name,
        "resample_seed": c.dataset.resample_seed,
        "pool": c.pool.strategy,
        "pool_seed": c.pool.seed,
        "split": c.split.strategy,
        "learner": c.learner.name,
        "kappa": c.learner.kappa if c.learner.name == "SSAD" else None,
        "strategy": c.strategy.name,
        "seed": c.seed,
    }


def results_frame(summaries: Iterable[CellSummary], metric: str) -> pd.DataFrame:
    """Return one row per cell: its axes, status, and the summaries of ``metric``."""
    rows = []
    for s in summaries:
        row = {"fingerprint": s.fingerprint, "status": s.status, **_axes(s)}
        row.update(s.summaries.get(metric, {}))
        rows.append(row)
    return pd.DataFrame(rows)


def aggregate(
    summaries: Iterable[CellSummary],
    group_by: Sequence[str],
    statistic: str = "median",
    which: Sequence[str] = ("qr",),
    metric: str = "mcc",
) -> pd.DataFrame:
    """Group cells and reduce each summary with the median or mean.

    Failed and infeasible cells contribute no values; groups with nothing left show "-".
    """
    if statistic not in ("median", "mean"):
        raise OcalError(f"statistic must be 'median' or 'mean', got '{statistic}'")
    unknown = [g for g in group_by if g not in constants.GROUP_COLUMNS]
    if unknown:
        raise OcalError(f"Unknown group columns {unknown}. Known: {list(constants.GROUP_COLUMNS)}")

    frame = results_frame(summaries, metric)
    if frame.empty:
        return pd.DataFrame(columns=[*group_by, *which])
    for name in which:
        if name not in frame.columns:
            frame[name] = np.nan
    frame.loc[~frame["status"].isin(["ok", "truncated"]), list(which)] = np.nan

    keys = list(group_by) or ["_all"]
    if not group_by:
        frame["_all"] = "all"
    table = frame.groupby(keys, dropna=False)[list(which)].agg(statistic).reset_index()
    if not group_by:
        table = table.drop(columns="_all")
    for name in which:
        column = table[name].astype(object)
        table[name] = column.where(column.notna(), constants.MISSING_CELL)
    return table


def _safe_name(metric: str) -> str:
    return metric.replace(":", "_")


def emit_curves(results: Iterable[Tuple[CellSummary, ProgressCurve]], out: Path) -> List[Path]:
    """Write one plot-ready CSV per (cell, metric) and a summary CSV.

    Curve files have the columns ``iteration``, ``value`` and ``queried_label``.
    """
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    rows = []
    for summary, curve in results:
        rows.append({"fingerprint": summary.fingerprint, "status": summary.status, **_axes(summary)})
        for metric, values in summary.summaries.items():
            rows[-1].update({f"{metric}/{name}": v for name, v in values.items()})
        if len(curve) == 0:
            continue
        for metric in summary.config.metrics:
            frame = pd.DataFrame(
                {
                    "iteration": [r.t for r in curve.records],
                    "value": curve.values(metric),
                    "queried_label": [r.oracle_label or "" for r in curve.records],
                }
            )
            path = out / f"{summary.fingerprint}.{_safe_name(metric)}.csv"
            frame.to_csv(path, index=False, lineterminator="\n")
            written.append(path)

    summary_file = out / "summary.csv"
    pd.DataFrame(rows).to_csv(summary_file, index=False, lineterminator="\n")
    written.append(summary_file)
    return written
