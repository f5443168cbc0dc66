"""Single-step multiclass SVMs trained by QUBO sampling with accuracy-weighted averaging."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .kernel import cross_kernel
from .qbsvm import TrainingError
from .qubo import QmsvmQuboParams, build_qmsvm_qubo, decode_taus, prune_qubo
from .sampler import take_best


@dataclass(frozen=True)
class WeightingConfig:
    multiplier: float = 10.0
    min_share: float = 0.2  # thr = min_share * min(acc) + (1 - min_share) * max(acc)

    def __post_init__(self):
        if not np.isfinite(self.multiplier):
            raise ValueError("multiplier must be finite")
        if not 0 <= self.min_share <= 1:
            raise ValueError("min_share must lie in [0, 1]")


def weight_solutions(accuracies, w: WeightingConfig = WeightingConfig()) -> np.ndarray:
    """Softmax of ``multiplier * accuracy`` over the solutions at or above the threshold.

    Solutions below ``0.2 * min + 0.8 * max`` get weight zero; the softmax is
    normalized over the survivors only.
    """
    acc = np.asarray(accuracies, dtype=float).reshape(-1)
    if acc.size < 1:
        raise ValueError("need at least one accuracy")
    lo, hi = acc.min(), acc.max()
    thr = min(w.min_share * lo + (1 - w.min_share) * hi, hi)
    keep = acc >= thr
    z = w.multiplier * acc[keep]
    e = np.exp(z - z.max())
    out = np.zeros_like(acc)
    out[keep] = e / e.sum()
    return out


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    """Per-class kernel expansions; ``class_map[c]`` is the original label of column ``c``."""

    support_points: np.ndarray
    tau_bar: np.ndarray  # (M, C)
    gamma_eff: float
    class_map: tuple

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.support_points.shape[1]:
            raise ValueError(f"expected {self.support_points.shape[1]} features, got {X.shape[1]}")
        return cross_kernel(X, self.support_points, self.gamma_eff) @ self.tau_bar

    def predict_local(self, X) -> np.ndarray:
        # np.argmax returns the first maximum: ties go to the lowest column
        return np.argmax(self.scores(X), axis=1)

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.class_map, dtype=np.int64)[self.predict_local(X)]


def qmsvm_decision(m: MulticlassSvmModel, x) -> int:
    return int(m.predict(np.asarray(x, dtype=float)[None, :])[0])


def solution_accuracies(taus: np.ndarray, X_train, X_val, y_val_local, gamma_eff: float) -> np.ndarray:
    """Validation accuracy of each decoded solution ``taus[s]`` (shape (S, N, C))."""
    Kv = cross_kernel(X_val, X_train, gamma_eff)
    scores = np.einsum("vn,snc->svc", Kv, taus)
    return (np.argmax(scores, axis=2) == np.asarray(y_val_local)[None, :]).mean(axis=1)


def train_qmsvm(
    train: Dataset,
    p: QmsvmQuboParams,
    sampler,
    S: int,
    w: WeightingConfig = WeightingConfig(),
    validation: Dataset | None = None,
    seed: int | None = None,
    max_min_ratio: float | None = None,
) -> MulticlassSvmModel:
    """Train on the classes present in ``train``, relabelled densely to ``0..C-1``.

    Each of the S best reads is scored on ``validation`` (default: the training
    set itself) and the decoded coefficients are averaged with
    :func:`weight_solutions` weights. Validation samples of classes absent from
    the training set count as misclassified.
    """
    present = np.unique(train.labels)
    if present.size < 2:
        raise TrainingError("multiclass training needs at least two classes present")
    class_map = tuple(int(c) for c in present)
    to_local = {c: i for i, c in enumerate(class_map)}
    y = np.array([to_local[int(c)] for c in train.labels])
    C = present.size
    X = train.features

    Q = build_qmsvm_qubo(X, y, C, p)
    if max_min_ratio is not None:
        Q = prune_qubo(Q, max_min_ratio)
    best = take_best(sampler.sample(Q, seed=seed), S)
    taus = np.stack([decode_taus(b, p.K, train.n, C) for b in best.bits])

    val = validation if validation is not None else train
    y_val = np.array([to_local.get(int(c), -1) for c in val.labels])
    acc = solution_accuracies(taus, X, val.features, y_val, p.gamma_eff)
    weights = weight_solutions(acc, w)
    tau_bar = np.einsum("s,snc->nc", weights, taus)
    return MulticlassSvmModel(X.copy(), tau_bar, p.gamma_eff, class_map)


def select_global_subset(train: Dataset, k: int, seed: int) -> Dataset:
    """Stratified subset of ``min(k, N)`` samples with near-equal class counts.

    Classes are shuffled internally and dealt one sample at a time in class
    order; an exhausted class is skipped.
    """
    if k < train.present_classes().size:
        raise ValueError(f"subset size {k} smaller than the number of classes")
    if k >= train.n:
        return train
    rng = np.random.default_rng(seed)
    pools = []
    for c in np.unique(train.labels):
        members = np.flatnonzero(train.labels == c)
        pools.append(list(members[rng.permutation(members.size)]))
    chosen = []
    depth = 0
    while len(chosen) < k:
        for pool in pools:
            if depth < len(pool) and len(chosen) < k:
                chosen.append(pool[depth])
        depth += 1
    return train.subset(np.sort(np.asarray(chosen)))
