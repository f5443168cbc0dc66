"""Classification metrics, method wiring and the stratified cross-validation driver."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, standardize_apply, standardize_fit, stratified_kfold
from .falk import FalkParams, QbsvmTrainer, QmsvmTrainer, train_falk, train_falk_selected
from .kernel import resolve_gamma
from .models import ConstantModel, derive_seed
from .qbsvm import train_qbsvm_ensemble
from .qmsvm import select_global_subset, train_qmsvm
from .qubo import QbsvmQuboParams, QmsvmQuboParams

logger = logging.getLogger(__name__)


# -- metrics ---------------------------------------------------------------------


def _pair(preds, truth):
    p = np.asarray(preds, dtype=np.int64).reshape(-1)
    t = np.asarray(truth, dtype=np.int64).reshape(-1)
    if p.size != t.size:
        raise ValueError(f"{p.size} predictions for {t.size} labels")
    if p.size == 0:
        raise ValueError("metrics need at least one sample")
    return p, t


def accuracy(preds, truth) -> float:
    p, t = _pair(preds, truth)
    return float(np.mean(p == t))


def confusion_matrix(preds, truth, C: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    p, t = _pair(preds, truth)
    if t.max() >= C or p.max() >= C or min(t.min(), p.min()) < 0:
        raise ValueError(f"labels must lie in 0..{C - 1}")
    cm = np.zeros((C, C), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def balanced_accuracy(preds, truth, C: int) -> float:
    """Mean recall over the classes that occur in ``truth``."""
    cm = confusion_matrix(preds, truth, C)
    support = cm.sum(axis=1)
    seen = support > 0
    return float(np.mean(np.diag(cm)[seen] / support[seen]))


def macro_f1(preds, truth, C: int) -> float:
    """Unweighted mean F1 over classes occurring in ``truth`` or ``preds``."""
    cm = confusion_matrix(preds, truth, C)
    tp = np.diag(cm).astype(float)
    pred_n = cm.sum(axis=0)
    true_n = cm.sum(axis=1)
    scores = []
    for c in range(C):
        if pred_n[c] == 0 and true_n[c] == 0:
            continue
        prec = tp[c] / pred_n[c] if pred_n[c] else 0.0
        rec = tp[c] / true_n[c] if true_n[c] else 0.0
        scores.append(0.0 if prec + rec == 0 else 2 * prec * rec / (prec + rec))
    return float(np.mean(scores))


# -- methods ---------------------------------------------------------------------


@dataclass(frozen=True)
class MethodConfig:
    """What to train on each fold.

    ``kind`` is ``local`` (cover-tree local models), ``global`` (sliced QBSVM
    ensemble or QMSVM on a stratified subset of ``falk.k`` samples) or
    ``majority`` (constant baseline).
    """

    kind: str = "local"
    trainer: object = None
    falk: FalkParams = FalkParams()
    selection: bool = False
    n_jobs: int = 1
    name: str = ""

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "majority":
            return "majority"
        base = "qbsvm" if isinstance(self.trainer, QbsvmTrainer) else "qmsvm"
        return f"{self.kind}-{base}" + ("-selected" if self.selection else "")


@dataclass
class FittedModel:
    model: object
    stats: dict

    def predict(self, X) -> np.ndarray:
        return self.model.predict(X)


def fit_method(cfg: MethodConfig, train: Dataset, seed: int) -> FittedModel:
    if cfg.kind == "majority":
        counts = np.bincount(train.labels, minlength=train.class_count)
        return FittedModel(ConstantModel(int(np.argmax(counts))), {})
    if cfg.kind == "local":
        p = replace(cfg.falk, seed=seed)
        fit = train_falk_selected if cfg.selection else train_falk
        model = fit(train, p, cfg.trainer, n_jobs=cfg.n_jobs)
        stats = model.stats()
        if model.selection is not None:
            stats["selected_gamma"] = model.selection.best.gamma
        return FittedModel(model, stats)
    if cfg.kind == "global":
        return _fit_global(cfg, train, seed)
    raise ValueError(f"unknown method kind {cfg.kind!r}")


def _fit_global(cfg: MethodConfig, train: Dataset, seed: int) -> FittedModel:
    tr = cfg.trainer
    size = cfg.falk.k
    if isinstance(tr, QbsvmTrainer):
        gamma = resolve_gamma(tr.kernel, train)
        p = QbsvmQuboParams(tr.B, tr.K, tr.xi, gamma)
        model = train_qbsvm_ensemble(train, p, tr.sampler, tr.S, size, seed, tr.max_min_ratio)
        return FittedModel(model, {"slices": model.L, "local_size": size})
    if isinstance(tr, QmsvmTrainer):
        subset = select_global_subset(train, size, seed)
        p = QmsvmQuboParams(tr.K, tr.mu, tr.beta, resolve_gamma(tr.kernel, subset))
        # weighting is scored on the whole training fold
        model = train_qmsvm(subset, p, tr.sampler, tr.S, tr.weighting, validation=train,
                            seed=seed, max_min_ratio=tr.max_min_ratio)
        return FittedModel(model, {"local_size": subset.n})
    raise ValueError("global methods need a QBSVM or QMSVM trainer")


# -- cross-validation --------------------------------------------------------------


class CvFailedError(RuntimeError):
    pass


@dataclass
class EvalReport:
    method: str
    folds: int
    seed: int
    fold_of: np.ndarray
    truth: np.ndarray
    predictions: np.ndarray  # -1 where a fold failed
    class_count: int
    fold_accuracy: list
    fold_stats: list
    errors: dict = field(default_factory=dict)
    models: list = field(default_factory=list, repr=False)

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    def _scored(self):
        ok = self.predictions >= 0
        return self.predictions[ok], self.truth[ok]

    @property
    def accuracy(self) -> float:
        return accuracy(*self._scored())

    @property
    def balanced_accuracy(self) -> float:
        return balanced_accuracy(*self._scored(), self.class_count)

    @property
    def macro_f1(self) -> float:
        return macro_f1(*self._scored(), self.class_count)

    @property
    def confusion(self) -> np.ndarray:
        return confusion_matrix(*self._scored(), self.class_count)

    @property
    def mean_fold_accuracy(self) -> float:
        vals = [a for a in self.fold_accuracy if a is not None]
        return float(np.mean(vals))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "folds": self.folds,
            "seed": self.seed,
            "partial": self.partial,
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "macro_f1": self.macro_f1,
            "mean_fold_accuracy": self.mean_fold_accuracy,
            "confusion": self.confusion.tolist(),
            "fold_accuracy": self.fold_accuracy,
            "fold_stats": self.fold_stats,
            "errors": {str(k): v for k, v in sorted(self.errors.items())},
            "fold_of": self.fold_of.tolist(),
            "predictions": self.predictions.tolist(),
            "truth": self.truth.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_text(self) -> str:
        lines = [
            f"method: {self.method}",
            f"folds: {self.folds}",
            f"seed: {self.seed}",
            f"samples: {self.truth.size}",
            f"partial: {str(self.partial).lower()}",
            f"accuracy: {self.accuracy:.6f}",
            f"balanced_accuracy: {self.balanced_accuracy:.6f}",
            f"macro_f1: {self.macro_f1:.6f}",
            f"mean_fold_accuracy: {self.mean_fold_accuracy:.6f}",
        ]
        for f, (acc, st) in enumerate(zip(self.fold_accuracy, self.fold_stats)):
            extra = " ".join(f"{k}={v}" for k, v in sorted(st.items()))
            shown = "failed" if acc is None else f"{acc:.6f}"
            lines.append(f"fold_{f}: accuracy={shown} {extra}".rstrip())
        for f, msg in sorted(self.errors.items()):
            lines.append(f"error_fold_{f}: {msg}")
        lines.append("confusion: " + json.dumps(self.confusion.tolist()))
        return "\n".join(lines) + "\n"


def run_cv(data: Dataset, method: MethodConfig, folds: int, seed: int,
           standardize: bool = True, keep_models: bool = False) -> EvalReport:
    """Stratified k-fold CV; standardization is fit on each training part only."""
    fa = stratified_kfold(data, folds, seed)
    preds = np.full(data.n, -1, dtype=np.int64)
    fold_acc, fold_stats, errors, models = [], [], {}, []
    first_exc = None
    for f in range(folds):
        tr_idx, te_idx = fa.train_indices(f), fa.test_indices(f)
        train, test = data.subset(tr_idx), data.subset(te_idx)
        scaler = None
        if standardize:
            scaler = standardize_fit(train)
            train, test = standardize_apply(scaler, train), standardize_apply(scaler, test)
        try:
            fitted = fit_method(method, train, derive_seed(seed, f))
            p = fitted.predict(test.features)
        except Exception as exc:  # a failed fold must not sink the others
            logger.warning("fold %d failed: %s", f, exc)
            errors[f] = f"{type(exc).__name__}: {exc}"
            first_exc = first_exc or exc
            fold_acc.append(None)
            fold_stats.append({})
            models.append(None)
            continue
        preds[te_idx] = p
        fold_acc.append(accuracy(p, test.labels))
        fold_stats.append(fitted.stats)
        models.append((fitted.model, scaler) if keep_models else None)
    if len(errors) == folds:
        raise CvFailedError(f"every fold failed; first error: {errors[0]}") from first_exc
    return EvalReport(method.label, folds, seed, fa.fold_of, data.labels.copy(), preds,
                      data.class_count, fold_acc, fold_stats, errors, models if keep_models else [])
