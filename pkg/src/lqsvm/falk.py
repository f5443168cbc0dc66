"""Fast local kernel SVMs: cover the training set with k-neighborhood models.

Training picks centers until every point sits in the k'-neighborhood of some
center, trains one model per center on its k-neighborhood, and remembers for
each training point the center in whose neighbor list it ranks highest.
Prediction routes a query through its nearest training point to that point's
center model.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, stratified_kfold
from .kernel import KernelConfig, resolve_gamma
from .models import ConstantModel, derive_seed
from .neighbors import build_index, distances_to
from .qbsvm import train_qbsvm
from .qmsvm import WeightingConfig, train_qmsvm
from .qubo import QbsvmQuboParams, QmsvmQuboParams

logger = logging.getLogger(__name__)


class LocalTrainingError(RuntimeError):
    def __init__(self, center: int, cause: BaseException):
        super().__init__(f"local model at center {center} failed: {cause}")
        self.center = center
        self.cause = cause


# -- local trainers --------------------------------------------------------------


@dataclass(frozen=True)
class QbsvmTrainer:
    sampler: object
    kernel: KernelConfig = KernelConfig(1.0)
    B: int = 2
    K: int = 2
    xi: float = 1.0
    S: int = 100
    max_min_ratio: float | None = None
    task = "binary"

    def variables(self, n: int, n_classes: int = 2) -> int:
        return n * self.K

    def with_kernel(self, kernel: KernelConfig) -> "QbsvmTrainer":
        return replace(self, kernel=kernel)

    def fit(self, local: Dataset, seed: int):
        p = QbsvmQuboParams(self.B, self.K, self.xi, resolve_gamma(self.kernel, local))
        return train_qbsvm(local, p, self.sampler, self.S, seed=seed, max_min_ratio=self.max_min_ratio)


@dataclass(frozen=True)
class QmsvmTrainer:
    sampler: object
    kernel: KernelConfig = KernelConfig(1.0)
    K: int = 2
    mu: float = 1.0
    beta: float = 1.0
    S: int = 100
    weighting: WeightingConfig = WeightingConfig()
    max_min_ratio: float | None = None
    task = "multiclass"

    def variables(self, n: int, n_classes: int) -> int:
        return n * n_classes * self.K

    def with_kernel(self, kernel: KernelConfig) -> "QmsvmTrainer":
        return replace(self, kernel=kernel)

    def fit(self, local: Dataset, seed: int):
        p = QmsvmQuboParams(self.K, self.mu, self.beta, resolve_gamma(self.kernel, local))
        return train_qmsvm(local, p, self.sampler, self.S, self.weighting, seed=seed,
                           max_min_ratio=self.max_min_ratio)


@dataclass(frozen=True)
class MajorityTrainer:
    """Predicts the most frequent local label; isolates the locality cost in benchmarks."""

    kernel: KernelConfig = KernelConfig(1.0)
    task = "any"

    def variables(self, n: int, n_classes: int = 2) -> int:
        return 0

    def with_kernel(self, kernel: KernelConfig) -> "MajorityTrainer":
        return replace(self, kernel=kernel)

    def fit(self, local: Dataset, seed: int):
        return ConstantModel(int(np.argmax(np.bincount(local.labels))))


# -- parameters & model ----------------------------------------------------------


@dataclass(frozen=True)
class FalkParams:
    k: int = 80
    k_prime: int = 60
    m: int = 8
    internal_folds: int = 5
    grid: tuple = (KernelConfig(-0.5), KernelConfig(1.0))
    eval_samples: int | None = None  # None: score all k' inner samples
    max_draws: int | None = None  # center candidates tried in selection; default 10*m
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k_prime < self.k:
            raise ValueError(f"need 1 <= k' < k, got k'={self.k_prime}, k={self.k}")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.internal_folds < 2:
            raise ValueError("internal fold count must be >= 2")
        if not self.grid:
            raise ValueError("kernel grid must not be empty")
        if self.eval_samples is not None and not 1 <= self.eval_samples <= self.k_prime:
            raise ValueError("eval_samples must lie in 1..k'")

    def check_size(self, n: int) -> None:
        if self.k > n:
            raise ValueError(f"neighborhood size k={self.k} exceeds training size {n}")


@dataclass(eq=False)
class FalkModel:
    index: object
    train: Dataset
    centers: np.ndarray
    neighborhoods: list
    local_models: list
    assoc: np.ndarray  # training index -> position in `centers`
    kernel: KernelConfig | None = None
    selection: object = None

    def local_model_for(self, x) -> int:
        return int(self.assoc[self.index.nearest(np.asarray(x, dtype=float))])

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.train.d:
            raise ValueError(f"expected {self.train.d} features, got {X.shape[1]}")
        route = np.array([self.assoc[self.index.nearest(x)] for x in X], dtype=np.int64)
        out = np.empty(X.shape[0], dtype=np.int64)
        for pos in np.unique(route):
            rows = np.flatnonzero(route == pos)
            out[rows] = self.local_models[pos].predict(X[rows])
        return out

    def stats(self) -> dict:
        return {
            "centers": int(len(self.centers)),
            "local_size": int(max(len(nb) for nb in self.neighborhoods)),
            "constant_models": int(sum(isinstance(m, ConstantModel) for m in self.local_models)),
        }


def falk_predict(m: FalkModel, x) -> int:
    return int(m.predict(np.asarray(x, dtype=float)[None, :])[0])


# -- construction steps ------------------------------------------------------------


def neighborhood(index, points: np.ndarray, center: int, k: int) -> np.ndarray:
    """The k nearest training points of ``center``, with the center itself at rank 1."""
    idx, _ = index.knn(points[center], k)
    if idx[0] != center:
        rest = idx[idx != center]
        idx = np.concatenate([[center], rest])[:k]
    return idx


def select_centers(train: Dataset, index, k_prime: int, seed: int) -> list[int]:
    """Greedy cover in a seeded random order until every point is in some k'-neighborhood."""
    if not 1 <= k_prime <= train.n:
        raise ValueError(f"k'={k_prime} outside 1..{train.n}")
    order = np.random.default_rng(seed).permutation(train.n)
    covered = np.zeros(train.n, dtype=bool)
    centers = []
    for i in order:
        if covered[i]:
            continue
        centers.append(int(i))
        covered[neighborhood(index, train.features, int(i), k_prime)] = True
    return centers


def associate_points(train: Dataset, centers: Sequence[int], index, k: int,
                     neighborhoods: list | None = None) -> np.ndarray:
    """Map each training point to the center where its neighbor rank is smallest.

    Ties go to the earlier center. Points outside every k-neighborhood fall
    back to the closest center.
    """
    if len(centers) == 0:
        raise ValueError("no centers")
    if neighborhoods is None:
        neighborhoods = [neighborhood(index, train.features, c, k) for c in centers]
    best_rank = np.full(train.n, np.iinfo(np.int64).max)
    assoc = np.full(train.n, -1, dtype=np.int64)
    for pos, nb in enumerate(neighborhoods):
        ranks = np.arange(len(nb))
        better = ranks < best_rank[nb]
        best_rank[nb[better]] = ranks[better]
        assoc[nb[better]] = pos
    orphans = np.flatnonzero(assoc < 0)
    if orphans.size:
        cpts = train.features[np.asarray(centers)]
        for i in orphans:
            assoc[i] = int(np.argmin(distances_to(cpts, train.features[i])))
    return assoc


def _fit_local(trainer, local: Dataset, seed: int):
    present = np.unique(local.labels)
    if present.size == 1:
        return ConstantModel(int(present[0]))
    return trainer.fit(local, seed)


def _fit_all(trainer, jobs, n_jobs: int):
    """Train ``(key, dataset, seed)`` jobs, serially or on a thread pool."""

    def run(job):
        key, local, seed = job
        try:
            return _fit_local(trainer, local, seed)
        except Exception as exc:
            raise LocalTrainingError(key, exc) from exc

    if n_jobs <= 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(run, jobs))


def train_falk(train: Dataset, p: FalkParams, trainer, n_jobs: int = 1,
               index_backend: str = "cover_tree", index=None) -> FalkModel:
    p.check_size(train.n)
    if index is None:
        index = build_index(train.features, index_backend)
    centers = select_centers(train, index, p.k_prime, p.seed)
    nbs = [neighborhood(index, train.features, c, p.k) for c in centers]
    jobs = [(c, train.subset(nb), derive_seed(p.seed, c)) for c, nb in zip(centers, nbs)]
    models = _fit_all(trainer, jobs, n_jobs)
    assoc = associate_points(train, centers, index, p.k, nbs)
    return FalkModel(index, train, np.asarray(centers, dtype=np.int64), nbs, models, assoc,
                     getattr(trainer, "kernel", None))


# -- grid-search local model selection ----------------------------------------------


@dataclass(frozen=True)
class SelectionResult:
    best: KernelConfig
    mean_accuracy: tuple  # one entry per grid config
    centers: tuple
    evaluations: int
    fallback: bool = False


def local_model_selection(train: Dataset, p: FalkParams, trainer_factory: Callable,
                          index=None, n_jobs: int = 1) -> SelectionResult:
    """Pick the kernel config with the best mean accuracy over m sampled neighborhoods.

    For each sampled center only its k' nearest points are split into folds;
    the outer k - k' points join every training side. Held-out points are
    scored if their rank is below ``eval_samples``.
    """
    p.check_size(train.n)
    if index is None:
        index = build_index(train.features)
    rng = np.random.default_rng(p.seed)
    draws = p.max_draws or 10 * p.m
    centers, nbs = [], []
    for c in rng.permutation(train.n)[:draws]:
        nb = neighborhood(index, train.features, int(c), p.k)
        if np.unique(train.labels[nb]).size < 2:
            continue
        centers.append(int(c))
        nbs.append(nb)
        if len(centers) == p.m:
            break
    if not centers:
        logger.warning("every sampled neighborhood is single-class; using the first grid entry")
        return SelectionResult(p.grid[0], tuple(float("nan") for _ in p.grid), (), 0, True)

    n_eval = p.eval_samples or p.k_prime
    folds = max(2, min(p.internal_folds, p.k_prime))
    # fold splits do not depend on the kernel config
    splits = []
    for pos, (c, nb) in enumerate(zip(centers, nbs)):
        inner, outer = nb[: p.k_prime], nb[p.k_prime :]
        inner_ds = train.subset(inner)
        fa = _inner_folds(inner_ds, folds, derive_seed(p.seed, c))
        for f in range(folds):
            held = np.flatnonzero(fa == f)
            scored = held[held < n_eval]
            if scored.size == 0:
                continue
            tr = np.concatenate([inner[fa != f], outer])
            splits.append((pos, f, tr, inner[scored]))

    means = []
    for g, cfg in enumerate(p.grid):
        trainer = trainer_factory(cfg)
        jobs = [((centers[pos], f), train.subset(tr), derive_seed(p.seed, centers[pos] * 1009 + f))
                for pos, f, tr, _ in splits]
        models = _fit_all(trainer, jobs, n_jobs)
        accs = [float((m.predict(train.features[te]) == train.labels[te]).mean())
                for m, (_, _, _, te) in zip(models, splits)]
        means.append(float(np.mean(accs)))
    best = int(np.argmax(means))  # first maximum wins ties
    return SelectionResult(p.grid[best], tuple(means), tuple(centers), len(splits) * len(p.grid))


def _inner_folds(inner: Dataset, folds: int, seed: int) -> np.ndarray:
    # class-stratified round-robin over the k' inner points
    return stratified_kfold(inner, folds, seed).fold_of


def train_falk_selected(train: Dataset, p: FalkParams, trainer, n_jobs: int = 1,
                        index_backend: str = "cover_tree") -> FalkModel:
    """Grid-search the kernel on sampled neighborhoods, then train every local model with it."""
    index = build_index(train.features, index_backend)
    sel = local_model_selection(train, p, trainer.with_kernel, index=index, n_jobs=n_jobs)
    model = train_falk(train, p, trainer.with_kernel(sel.best), n_jobs, index=index)
    model.selection = sel
    return model
