"""Experiment config builder following the Builder design pattern.

Grid expansion assembles one ``ExperimentConfig`` per cell from independent axes;
the builder collects those parts and validates the result in ``build``.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from ocal.signatures import (
    DatasetRef,
    ExperimentConfig,
    LearnerSpec,
    PoolSpec,
    SplitSpec,
    StrategyConfig,
)

REQUIRED_PARTS = ("dataset", "pool", "split", "learner", "strategy")


class ExperimentConfigBuilder:
    """Builder for validated experiment configs.

    Example:
        builder = ExperimentConfigBuilder()
        builder.set_dataset(ref).set_pool(PoolSpec(strategy="Pn", param=25))
        builder.set_split(SplitSpec(strategy="Sf")).set_learner(LearnerSpec(name="SVDDneg"))
        builder.set_strategy(StrategyConfig(name="db")).set_run(budget=50, seed=1)
        config = builder.build()
    """

    def __init__(self) -> None:
        """Start with no parts set."""
        self.reset()

    def reset(self) -> None:
        """Forget every part set so far."""
        self._parts: Dict[str, Any] = {}

    def set_dataset(
        self, ref: DatasetRef, resample_seed: Optional[int] = None
    ) -> "ExperimentConfigBuilder":
        """Set the dataset, optionally pinning its resampled version.

        Args:
            ref: Dataset reference.
            resample_seed: Seed of the resampled version; only used when ``ref`` resamples.

        Returns:
            Self for method chaining
        """
        if resample_seed is not None and ref.outlier_rate is not None:
            ref = ref.model_copy(update={"resample_seed": resample_seed})
        self._parts["dataset"] = ref
        return self

    def set_pool(self, pool: PoolSpec, seed: Optional[int] = None) -> "ExperimentConfigBuilder":
        """Set the initial pool strategy and, optionally, the seed of its draw."""
        if seed is not None:
            pool = pool.model_copy(update={"seed": seed})
        self._parts["pool"] = pool
        return self

    def set_split(self, split: SplitSpec) -> "ExperimentConfigBuilder":
        """Set the split strategy."""
        self._parts["split"] = split
        return self

    def set_learner(
        self, learner: LearnerSpec, kappa: Optional[float] = None
    ) -> "ExperimentConfigBuilder":
        """Set the learner; ``kappa`` overrides κ for SSAD and is ignored otherwise."""
        if kappa is not None and learner.name == "SSAD":
            learner = learner.model_copy(update={"kappa": kappa})
        self._parts["learner"] = learner
        return self

    def set_strategy(self, strategy: StrategyConfig) -> "ExperimentConfigBuilder":
        """Set the query strategy."""
        self._parts["strategy"] = strategy
        return self

    def set_run(
        self,
        budget: Optional[int] = None,
        seed: Optional[int] = None,
        metrics: Optional[List[str]] = None,
        oracle_noise: Optional[float] = None,
    ) -> "ExperimentConfigBuilder":
        """Set run-level fields; ``None`` keeps the schema default."""
        for key, value in (
            ("budget", budget),
            ("seed", seed),
            ("metrics", metrics),
            ("oracle_noise", oracle_noise),
        ):
            if value is not None:
                self._parts[key] = value
        return self

    def build(self) -> ExperimentConfig:
        """Validate and return the config, then reset the builder.

        Raises:
            ValueError: If a required part is missing or a field is invalid.
        """
        missing = [part for part in REQUIRED_PARTS if part not in self._parts]
        if missing:
            raise ValueError(f"Experiment config is missing {missing}")

        config = ExperimentConfig(**self._parts)
        self.reset()

        return config
