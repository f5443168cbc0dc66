"""Pieces shared by every trained classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np


class Classifier(Protocol):
    def predict(self, X) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantModel:
    """Predicts one label everywhere; used for single-class training sets."""

    label: int

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.full(X.shape[0], self.label, dtype=np.int64)


def derive_seed(seed: int, index: int) -> int:
    """Per-task seed: the global seed xor the task index."""
    return int(seed) ^ int(index)
