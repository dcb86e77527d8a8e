"""Define the state structures of the active-learning loop."""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from typing_extensions import Annotated

from ocal.context import Context
from ocal.data import Dataset, SplitAssignment
from ocal.oracle import Oracle
from ocal.signatures import ExperimentConfig, StrategyConfig


@dataclass
class InputState:
    """The pool an active-learning run starts from."""

    status: Optional[np.ndarray] = None
    """
    Label status of every observation (see ``ocal.constants``).

    Each query replaces it with an updated copy, so earlier values stay intact.
    """

    budget: int = 0
    """Number of queries to ask before stopping."""


@dataclass
class LoopState(InputState):
    """Complete state of one run, extending InputState with the loop bookkeeping."""

    t: int = 0
    """Number of queries answered so far."""

    query: Optional[int] = None
    label: Optional[str] = None
    exploratory: bool = False

    decision: Optional[np.ndarray] = None
    """f(x) of the current model for every observation."""

    boundary: float = 0.0
    """Largest f(x) the current model still predicts as an inlier."""

    started: float = 0.0
    stop_reason: Optional[str] = None

    records: Annotated[List[Dict[str, Any]], operator.add] = field(default_factory=list)
    """
    Progress-curve records, one per fit.

    The `operator.add` reducer appends the records each node returns.
    """

    timings: Annotated[List[float], operator.add] = field(default_factory=list)
    warnings: Annotated[List[str], operator.add] = field(default_factory=list)
    audit: Annotated[List[Dict[str, Any]], operator.add] = field(default_factory=list)


@dataclass(kw_only=True)
class RunContext:
    """Read-only resources of one run, handed to every node through the runtime."""

    config: ExperimentConfig
    strategy: StrategyConfig
    dataset: Dataset
    split: SplitAssignment
    gram: np.ndarray
    gamma: float
    oracle: Oracle
    settings: Context = field(default_factory=Context)
