"""Bounded store of positive samples appended to every training batch.

Eviction strategies once the buffer is full:

* ``dequeue-max`` drops the entry the model scores highest (most certain),
  keeping hard positives around;
* ``fifo`` drops the oldest entry;
* ``dequeue-min`` drops the entry the model scores lowest.

The incoming sample always takes the freed slot.  Ties on the score key are
broken towards the oldest entry so eviction is deterministic.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, InvalidArgumentError

STRATEGIES = ("dequeue-max", "fifo", "dequeue-min")


@dataclass
class BufferEntry:
    sample_id: int
    features: np.ndarray
    last_score: float
    arrival_index: int


class PositiveBuffer:
    def __init__(self, capacity=32, strategy="dequeue-max"):
        if capacity < 0:
            raise ConfigurationError(f"buffer capacity must be >= 0, got {capacity}")
        if strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown buffer strategy {strategy!r}; expected one of {STRATEGIES}")
        self.capacity = int(capacity)
        self.strategy = strategy
        self.entries = []
        self._arrivals = 0

    def __len__(self):
        return len(self.entries)

    def _victim(self):
        if self.strategy == "fifo":
            keys = [e.arrival_index for e in self.entries]
            return int(np.argmin(keys))
        scores = np.array([e.last_score for e in self.entries])
        # argmax/argmin return the first hit; slots are not age-ordered, so break ties on arrival
        target = scores.max() if self.strategy == "dequeue-max" else scores.min()
        tied = np.flatnonzero(scores == target)
        return int(min(tied, key=lambda i: self.entries[i].arrival_index))

    def push(self, sample_id, features, score, label=1):
        """Insert a positive sample; return the evicted entry, if any."""
        if label != 1:
            raise InvalidArgumentError("only positive samples can be buffered")
        entry = BufferEntry(int(sample_id), np.asarray(features, dtype=float), float(score), self._arrivals)
        self._arrivals += 1
        if self.capacity == 0:
            return entry
        if len(self.entries) < self.capacity:
            self.entries.append(entry)
            return None
        slot = self._victim()
        evicted = self.entries[slot]
        self.entries[slot] = entry
        return evicted

    def refresh_scores(self, scorer):
        """Re-key every entry with ``scorer``, a map from a feature matrix to scores."""
        if not self.entries:
            return
        fresh = np.asarray(scorer(self.features()), dtype=float)
        if fresh.shape != (len(self.entries),):
            raise InvalidArgumentError("scorer returned the wrong number of scores")
        for e, s in zip(self.entries, fresh):
            e.last_score = float(s)

    def features(self):
        if not self.entries:
            return None
        return np.stack([e.features for e in self.entries])

    def scores(self):
        return np.array([e.last_score for e in self.entries])

    def sample_ids(self):
        return [e.sample_id for e in self.entries]


def merged_batch(X, y, buffer):
    """Stack a batch with the whole buffer (batch rows first).

    Returns ``(X, y, from_buffer)`` where ``from_buffer`` flags buffer rows.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if buffer is None or len(buffer) == 0:
        return X, y, np.zeros(len(y), dtype=bool)
    Xb = buffer.features()
    n_buf = len(Xb)
    return (
        np.concatenate([X, Xb]),
        np.concatenate([y, np.ones(n_buf, dtype=y.dtype)]),
        np.concatenate([np.zeros(len(y), dtype=bool), np.ones(n_buf, dtype=bool)]),
    )
