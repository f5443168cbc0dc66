"""Binary SVMs trained by QUBO sampling, bias selection and the sliced ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .kernel import cross_kernel, kernel_matrix
from .models import ConstantModel, derive_seed
from .qubo import QbsvmQuboParams, build_qbsvm_qubo, decode_alphas, prune_qubo
from .sampler import take_best

BIAS_GRID = np.arange(-100, 101) / 10.0


class TrainingError(ValueError):
    pass


def _sign(v: np.ndarray) -> np.ndarray:
    # sign(0) = +1 everywhere
    return np.where(v >= 0, 1, -1)


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Kernel expansion ``sum_n alpha_n y_n k(x_n, x) + b`` over the training neighborhood.

    ``class_map`` gives the original labels for the -1 and +1 sides.
    """

    support_points: np.ndarray
    labels: np.ndarray  # +-1
    alphas: np.ndarray
    bias: float
    gamma_eff: float
    A: float
    class_map: tuple = (0, 1)

    def decision_values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.support_points.shape[1]:
            raise ValueError(f"expected {self.support_points.shape[1]} features, got {X.shape[1]}")
        Kx = cross_kernel(X, self.support_points, self.gamma_eff)
        return Kx @ (self.alphas * self.labels) + self.bias

    def predict_signed(self, X) -> np.ndarray:
        return _sign(self.decision_values(X))

    def predict(self, X) -> np.ndarray:
        s = self.predict_signed(X)
        return np.where(s > 0, self.class_map[1], self.class_map[0]).astype(np.int64)


def qbsvm_decision(m: BinarySvmModel, x) -> int:
    return int(m.predict_signed(np.asarray(x, dtype=float)[None, :])[0])


class BiasEstimate(NamedTuple):
    bias: float
    fallback: bool


def compute_bias_eq(alphas, X, y, gamma_eff: float, A: float) -> BiasEstimate:
    """Closed-form bias averaged over the free coefficients (0 < alpha < A)."""
    alphas = np.asarray(alphas, dtype=float)
    y = np.asarray(y, dtype=float)
    K = kernel_matrix(np.asarray(X, dtype=float), gamma_eff)
    w = alphas * (A - alphas)
    den = w.sum()
    if den == 0:
        return BiasEstimate(0.0, True)
    resid = y - K @ (alphas * y)
    return BiasEstimate(float(w @ resid / den), False)


def select_bias(alphas, X, y, gamma_eff: float) -> float:
    """Grid bias in [-10, 10] step 0.1 with the best training accuracy.

    Ties go to the smallest ``|b|``, then to the smaller signed value.
    """
    alphas = np.asarray(alphas, dtype=float)
    y = np.asarray(y, dtype=float)
    f = kernel_matrix(np.asarray(X, dtype=float), gamma_eff) @ (alphas * y)
    acc = (_sign(f[None, :] + BIAS_GRID[:, None]) == y[None, :]).mean(axis=1)
    order = np.lexsort((BIAS_GRID, np.abs(BIAS_GRID)))
    return float(BIAS_GRID[order[np.argmax(acc[order])]])


def training_accuracy(m: BinarySvmModel) -> float:
    return float((m.predict_signed(m.support_points) == m.labels).mean())


def _binary_class_map(labels) -> tuple:
    present = np.unique(labels)
    if present.size != 2:
        raise TrainingError(f"binary training needs exactly two classes, got {present.tolist()}")
    return (int(present[0]), int(present[1]))


def train_qbsvm(
    train: Dataset,
    p: QbsvmQuboParams,
    sampler,
    S: int,
    seed: int | None = None,
    class_map: tuple | None = None,
    max_min_ratio: float | None = None,
    bias_method: str = "grid",
) -> BinarySvmModel:
    """Sample the QUBO, average the decoded coefficients of the S best reads, fit the bias.

    ``class_map`` fixes which original labels become -1 and +1; by default the
    smaller present label is -1.
    """
    class_map = class_map or _binary_class_map(train.labels)
    present = set(np.unique(train.labels).tolist())
    if len(present) != 2 or not present <= set(class_map):
        raise TrainingError(f"binary training needs both classes {class_map}, got {sorted(present)}")
    y = np.where(train.labels == class_map[1], 1.0, -1.0)
    X = train.features
    Q = build_qbsvm_qubo(X, y, p)
    if max_min_ratio is not None:
        Q = prune_qubo(Q, max_min_ratio)
    best = take_best(sampler.sample(Q, seed=seed), S)
    alphas = np.mean([decode_alphas(b, p.B, p.K, train.n) for b in best.bits], axis=0)
    if bias_method == "grid":
        bias = select_bias(alphas, X, y, p.gamma_eff)
    elif bias_method == "formula":
        bias = compute_bias_eq(alphas, X, y, p.gamma_eff, p.A).bias
    else:
        raise ValueError(f"unknown bias method {bias_method!r}")
    return BinarySvmModel(X.copy(), y, alphas, bias, p.gamma_eff, float(p.A), class_map)


# -- sliced ensemble -------------------------------------------------------------


def stratified_slices(labels, slice_size: int, seed: int) -> list[np.ndarray]:
    """Disjoint slices of ``slice_size`` (the last one takes the remainder).

    Indices are ordered so each class is spread evenly through the sequence
    (a class member at within-class position ``r`` of ``n_c`` sits at
    ``(r + 0.5) / n_c``), then cut into consecutive chunks. Every chunk
    therefore keeps roughly the global class proportions.
    """
    labels = np.asarray(labels)
    if slice_size < 1:
        raise ValueError("slice_size must be >= 1")
    rng = np.random.default_rng(seed)
    keys, idx = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        keys.append((np.arange(members.size) + 0.5) / members.size)
        idx.append(members)
    keys = np.concatenate(keys)
    idx = np.concatenate(idx)
    order = idx[np.argsort(keys, kind="stable")]
    return [order[i : i + slice_size] for i in range(0, order.size, slice_size)]


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    """Average of per-slice decision values; single-class slices vote ±1."""

    slices: list
    class_map: tuple = (0, 1)

    @property
    def L(self) -> int:
        return len(self.slices)

    def decision_values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(X.shape[0])
        for m in self.slices:
            if isinstance(m, ConstantModel):
                total += 1.0 if m.label == self.class_map[1] else -1.0
            else:
                total += m.decision_values(X)
        return total / len(self.slices)

    def predict_signed(self, X) -> np.ndarray:
        return _sign(self.decision_values(X))

    def predict(self, X) -> np.ndarray:
        s = self.predict_signed(X)
        return np.where(s > 0, self.class_map[1], self.class_map[0]).astype(np.int64)


def ensemble_decision(m: EnsembleModel, x) -> int:
    return int(m.predict_signed(np.asarray(x, dtype=float)[None, :])[0])


def train_qbsvm_ensemble(
    train: Dataset,
    p: QbsvmQuboParams,
    sampler,
    S: int,
    slice_size: int,
    seed: int = 0,
    max_min_ratio: float | None = None,
) -> EnsembleModel:
    class_map = _binary_class_map(train.labels)
    models = []
    for l, idx in enumerate(stratified_slices(train.labels, slice_size, seed)):
        part = train.subset(idx)
        present = np.unique(part.labels)
        if present.size == 1:
            models.append(ConstantModel(int(present[0])))
            continue
        models.append(
            train_qbsvm(part, p, sampler, S, seed=derive_seed(seed, l), class_map=class_map,
                        max_min_ratio=max_min_ratio)
        )
    return EnsembleModel(models, class_map)
