"""Prequential evaluation with fading class statistics.

Every step is scored test-then-train: the prediction is judged against the
true label before the learner may see it. Per-class counts decay by a
fading factor each step so the metrics track recent performance under
drift. The headline metric is the geometric mean of per-class recalls,
which collapses to zero as soon as any class is consistently missed, making
it suitable for heavy class imbalance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass
class MetricsRow:
    """Per-step evaluation record of a run."""

    t: int
    gmean: float
    accuracy: float
    labels_spent: int
    b_hat: float
    theta: float


class PrequentialTracker:
    """Faded per-class recall and accuracy counters."""

    def __init__(self, num_classes: int, fading: float = 0.99):
        if num_classes < 2:
            raise ConfigurationError(f"need at least 2 classes, got {num_classes}")
        if not 0.0 < fading <= 1.0:
            raise ConfigurationError(f"fading factor must lie in (0, 1], got {fading}")
        self.num_classes = num_classes
        self.fading = fading
        self.n = np.zeros(num_classes)
        self.tp = np.zeros(num_classes)
        self.correct = 0.0
        self.total = 0.0

    def update(self, y_true: int, y_pred: int) -> None:
        """Fade all counters, then credit this step to the true class."""
        if not 1 <= y_true <= self.num_classes:
            raise ValueError(f"true class {y_true} out of range 1..{self.num_classes}")
        xi = self.fading
        self.n *= xi
        self.tp *= xi
        self.correct *= xi
        self.total *= xi
        self.n[y_true - 1] += 1.0
        self.total += 1.0
        if y_true == y_pred:
            self.tp[y_true - 1] += 1.0
            self.correct += 1.0

    def recalls(self) -> np.ndarray:
        """Faded recall per class; NaN for classes never observed."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n > 0.0, self.tp / self.n, np.nan)

    def gmean(self) -> float:
        """Geometric mean of per-class recalls.

        Until every class has been observed the mean runs over the observed
        classes only; afterwards it covers all of them.
        """
        observed = self.n > 0.0
        if not observed.any():
            return 0.0
        classes = slice(None) if observed.all() else observed
        r = self.tp[classes] / self.n[classes]
        if np.any(r == 0.0):
            return 0.0
        return float(np.prod(r) ** (1.0 / r.size))

    def accuracy(self) -> float:
        return self.correct / self.total if self.total > 0.0 else 0.0


def aggregate_runs(curves) -> tuple[np.ndarray, np.ndarray]:
    """Per-step mean and standard error of a metric across repeated runs.

    All curves must have the same length. With a single run the standard
    error is reported as zero.
    """
    arrays = [np.asarray(c, dtype=float) for c in curves]
    if not arrays:
        raise ValueError("no curves to aggregate")
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError(f"curves have unequal lengths: {[a.size for a in arrays]}")
    stacked = np.stack(arrays)
    mean = stacked.mean(axis=0)
    if len(arrays) == 1:
        return mean, np.zeros(length)
    stderr = stacked.std(axis=0, ddof=1) / np.sqrt(len(arrays))
    return mean, stderr
