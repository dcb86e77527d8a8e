"""One-class active learning.

This package fits SVDD-family outlier detectors, scores unlabeled observations with
query strategies, and runs reproducible benchmark grids over the resulting loop.
"""

from ocal.graph import graph
from ocal.harness import run_experiment

__all__ = ["graph", "run_experiment"]
