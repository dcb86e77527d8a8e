"""Define the process-level settings for experiment runs."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Any

from . import constants

ENV_PREFIX = "OCAL_"


def _coerce(raw: str, default: Any) -> Any:
    """Convert an environment string to the type of the field default."""
    if isinstance(default, bool):
        return raw.strip().lower() in {"1", "true", "yes", "on"}
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


@dataclass(kw_only=True)
class Context:
    """Settings shared by every experiment a process runs."""

    workers: int = field(
        default=1,
        metadata={
            "description": "Number of grid cells executed in parallel. "
            "Parallelism is across cells only; each active-learning loop is sequential."
        },
    )

    results_dir: str = field(
        default="results",
        metadata={"description": "Directory the result store writes cell files into."},
    )

    log_level: str = field(
        default="INFO",
        metadata={"description": "Root logging level used by the command line."},
    )

    kkt_tol: float = field(
        default=constants.KKT_TOL,
        metadata={"description": "KKT tolerance of the dual solver."},
    )

    max_iter: int = field(
        default=constants.MAX_SOLVER_ITER,
        metadata={"description": "Maximum working-set steps per dual solve."},
    )

    audit: bool = field(
        default=False,
        metadata={
            "description": "Persist a model audit record (alphas, signs, R², costs, "
            "KKT residual) for every iteration."
        },
    )

    def __post_init__(self) -> None:
        """Fetch OCAL_* env vars for attributes that were not passed as args."""
        for f in fields(self):
            if not f.init:
                continue

            if getattr(self, f.name) == f.default:
                raw = os.environ.get(ENV_PREFIX + f.name.upper())
                if raw is not None:
                    setattr(self, f.name, _coerce(raw, f.default))
