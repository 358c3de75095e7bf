"""Running first and second moments (Welford's recurrence)."""

from __future__ import annotations

import numpy as np


class RunningMoments:
    """Incremental mean and variance over vectors of a fixed dimension.

    Variance uses the n - 1 denominator and is reported as zero until two
    observations have been seen.
    """

    __slots__ = ("count", "mean", "m2")

    def __init__(self, dim: int) -> None:
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)

    def std(self) -> np.ndarray:
        return np.sqrt(self.variance())
