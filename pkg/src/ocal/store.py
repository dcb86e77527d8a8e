"""Result store: one JSON-lines curve and one summary document per grid cell."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, List, Tuple

from ocal.metrics import CurveRecord, ProgressCurve
from ocal.signatures import CellSummary, ResultLine, canonical_json

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def curve_path(results_dir: Path, fingerprint: str) -> Path:
    """Return the path of a cell's JSON-lines curve."""
    return results_dir / f"{fingerprint}.jsonl"


def summary_path(results_dir: Path, fingerprint: str) -> Path:
    """Return the path of a cell's summary document."""
    return results_dir / f"{fingerprint}.summary.json"


def write_curve(path: Path, curve: ProgressCurve) -> None:
    """Write one line per record, with sorted keys so replays are byte-identical."""
    lines = []
    for record in curve.records:
        line = ResultLine(
            t=record.t,
            queried_index=record.queried_index,
            oracle_label=record.oracle_label,  # type: ignore[arg-type]
            metrics=record.metrics,
            exploratory=record.exploratory,
        )
        lines.append(canonical_json(line.model_dump(mode="json")))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_curve(path: Path) -> ProgressCurve:
    """Load a curve written by ``write_curve``."""
    curve = ProgressCurve()
    with path.open(encoding="utf-8") as handle:
        for raw in handle:
            if not raw.strip():
                continue
            line = ResultLine.model_validate_json(raw)
            curve.append(
                CurveRecord(
                    t=line.t,
                    queried_index=line.queried_index,
                    oracle_label=line.oracle_label,
                    metrics=line.metrics,
                    exploratory=line.exploratory,
                )
            )
    return curve


def write_summary(path: Path, summary: CellSummary) -> None:
    """Write a cell summary document."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary.model_dump(mode="json"), indent=2, sort_keys=True))


def read_summary(path: Path) -> CellSummary:
    """Load a cell summary document."""
    return CellSummary.model_validate_json(path.read_text(encoding="utf-8"))


def write_manifest(results_dir: Path, name: str, summaries: Iterable[CellSummary]) -> Path:
    """List every cell of a grid run with its status."""
    cells = [
        {"fingerprint": s.fingerprint, "status": s.status, "dataset": s.config.dataset.name}
        for s in summaries
    ]
    path = results_dir / MANIFEST
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"grid": name, "cells": cells}, indent=2, sort_keys=True))
    return path


def load_results(results_dir: Path) -> List[Tuple[CellSummary, ProgressCurve]]:
    """Load every cell in a results directory, skipping unreadable files.

    Cells without a curve (failed or infeasible) come back with an empty curve.
    """
    results: List[Tuple[CellSummary, ProgressCurve]] = []
    for path in sorted(results_dir.glob("*.summary.json")):
        try:
            summary = read_summary(path)
        except (json.JSONDecodeError, ValueError) as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            continue
        curve_file = curve_path(results_dir, summary.fingerprint)
        curve = read_curve(curve_file) if curve_file.exists() else ProgressCurve()
        results.append((summary, curve))
    return results
