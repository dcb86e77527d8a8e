"""Simulated label source answering from ground truth."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ocal import constants
from ocal.errors import OcalError

logger = logging.getLogger(__name__)


@dataclass
class Oracle:
    """Answers queries from ground truth, flipping each answer with probability ``noise_rate``.

    Flips are drawn from a stream seeded with ``seed`` so a run replays exactly.
    """

    truth: np.ndarray
    noise_rate: float = 0.0
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Validate the noise rate and seed the flip stream."""
        if not 0 <= self.noise_rate < 1:
            raise OcalError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")
        self._rng = np.random.default_rng(self.seed)

    def ask(self, index: int) -> str:
        """Return ``inlier`` or ``outlier`` for one observation."""
        outlier = bool(self.truth[index])
        if self.noise_rate > 0 and self._rng.random() < self.noise_rate:
            outlier = not outlier
            logger.debug("oracle flipped the answer for observation %d", index)
        return constants.OUTLIER if outlier else constants.INLIER
