"""Per-class FIFO memory of labelled examples."""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ConfigurationError


class MultiQueue:
    """One bounded FIFO queue of feature vectors per class.

    The queue index is the class label (1-based), so stored entries carry no
    separate label field. Appending to a full queue evicts its oldest
    element. `version` increases on every append, letting callers cache
    derived views such as stacked matrices or embeddings.
    """

    def __init__(self, num_classes: int, capacity: int, seed_data=None):
        if num_classes < 2:
            raise ConfigurationError(f"need at least 2 classes, got {num_classes}")
        if capacity < 1:
            raise ConfigurationError(f"capacity must be positive, got {capacity}")
        self.num_classes = num_classes
        self.capacity = capacity
        self.queues = [deque(maxlen=capacity) for _ in range(num_classes)]
        self.version = 0
        self._stacked = None
        if seed_data is not None:
            counts = [0] * num_classes
            for x, y in seed_data:
                counts[self._index(y)] += 1
            if any(c != capacity for c in counts):
                raise ConfigurationError(
                    f"seed data must hold exactly {capacity} examples per class, got counts {counts}")
            for x, y in seed_data:
                self.append(x, y)

    def _index(self, y: int) -> int:
        if not 1 <= y <= self.num_classes:
            raise ValueError(f"class {y} out of range 1..{self.num_classes}")
        return y - 1

    def append(self, x: np.ndarray, y: int) -> None:
        self.queues[self._index(y)].append(np.asarray(x, dtype=float))
        self.version += 1
        self._stacked = None

    def class_count(self, y: int) -> int:
        return len(self.queues[self._index(y)])

    def counts(self) -> list[int]:
        return [len(q) for q in self.queues]

    def __len__(self) -> int:
        return sum(len(q) for q in self.queues)

    def non_empty_classes(self) -> list[int]:
        return [c + 1 for c, q in enumerate(self.queues) if len(q) > 0]

    def class_matrix(self, y: int) -> np.ndarray:
        """Stored vectors of one class as rows, oldest first."""
        q = self.queues[self._index(y)]
        if not q:
            return np.empty((0, 0))
        return np.stack(list(q))

    def snapshot(self) -> list[tuple[np.ndarray, int]]:
        """All stored (vector, class) pairs, by class then insertion order."""
        out = []
        for c, q in enumerate(self.queues):
            out.extend((x, c + 1) for x in q)
        return out

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All stored vectors as one matrix plus their class labels.

        Cached until the next append; callers must not mutate the arrays.
        """
        if self._stacked is None:
            rows, labels = [], []
            for c, q in enumerate(self.queues):
                rows.extend(q)
                labels.extend([c + 1] * len(q))
            if rows:
                self._stacked = (np.stack(rows), np.asarray(labels, dtype=int))
            else:
                self._stacked = (np.empty((0, 0)), np.empty(0, dtype=int))
        return self._stacked
