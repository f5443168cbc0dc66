"""Versioned JSON persistence for trained models.

A model file holds a header (format version, task, mode), the feature
standardizer, the original label vocabulary and one nested model payload.
Arrays are stored as nested lists; JSON floats round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, Standardizer
from .falk import FalkModel
from .kernel import KernelConfig
from .models import ConstantModel
from .neighbors import build_index
from .qbsvm import BinarySvmModel, EnsembleModel
from .qmsvm import MulticlassSvmModel

FORMAT_VERSION = 1


class PersistError(ValueError):
    pass


class FormatVersionError(PersistError):
    pass


class TaskMismatchError(PersistError):
    pass


class FeatureCountError(PersistError):
    pass


@dataclass(eq=False)
class SavedModel:
    """A trained model plus everything needed to apply it to raw features."""

    task: str
    mode: str
    model: object
    n_features: int
    label_values: tuple
    standardizer: Standardizer | None = None

    def predict(self, X) -> np.ndarray:
        """Predict contiguous class ids for raw (unstandardized) rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise FeatureCountError(f"model expects {self.n_features} features, input has {X.shape[1]}")
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return self.model.predict(X)

    def predict_labels(self, X) -> np.ndarray:
        """Predictions mapped back to the original label values."""
        return np.asarray(self.label_values)[self.predict(X)]


# -- encoding ----------------------------------------------------------------------


def _arr(a) -> list:
    return np.asarray(a).tolist()


def encode_model(m) -> dict:
    if isinstance(m, ConstantModel):
        return {"kind": "constant", "label": int(m.label)}
    if isinstance(m, BinarySvmModel):
        return {
            "kind": "qbsvm",
            "support_points": _arr(m.support_points),
            "labels": _arr(m.labels),
            "alphas": _arr(m.alphas),
            "bias": float(m.bias),
            "gamma_eff": float(m.gamma_eff),
            "A": float(m.A),
            "class_map": list(m.class_map),
        }
    if isinstance(m, MulticlassSvmModel):
        return {
            "kind": "qmsvm",
            "support_points": _arr(m.support_points),
            "tau_bar": _arr(m.tau_bar),
            "gamma_eff": float(m.gamma_eff),
            "class_map": list(m.class_map),
        }
    if isinstance(m, EnsembleModel):
        return {"kind": "ensemble", "class_map": list(m.class_map),
                "slices": [encode_model(s) for s in m.slices]}
    if isinstance(m, FalkModel):
        return {
            "kind": "falk",
            "train_features": _arr(m.train.features),
            "train_labels": _arr(m.train.labels),
            "class_count": int(m.train.class_count),
            "centers": _arr(m.centers),
            "neighborhoods": [_arr(nb) for nb in m.neighborhoods],
            "assoc": _arr(m.assoc),
            "gamma": None if m.kernel is None else float(m.kernel.gamma),
            "local_models": [encode_model(lm) for lm in m.local_models],
        }
    raise PersistError(f"cannot serialize model of type {type(m).__name__}")


def _f(a, ndim=1) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    if out.ndim != ndim:
        raise PersistError(f"expected a {ndim}-D array")
    return out


def decode_model(d: dict):
    try:
        kind = d["kind"]
        if kind == "constant":
            return ConstantModel(int(d["label"]))
        if kind == "qbsvm":
            return BinarySvmModel(_f(d["support_points"], 2), _f(d["labels"]), _f(d["alphas"]),
                                  float(d["bias"]), float(d["gamma_eff"]), float(d["A"]),
                                  tuple(int(c) for c in d["class_map"]))
        if kind == "qmsvm":
            return MulticlassSvmModel(_f(d["support_points"], 2), _f(d["tau_bar"], 2),
                                      float(d["gamma_eff"]), tuple(int(c) for c in d["class_map"]))
        if kind == "ensemble":
            return EnsembleModel([decode_model(s) for s in d["slices"]],
                                 tuple(int(c) for c in d["class_map"]))
        if kind == "falk":
            train = Dataset(_f(d["train_features"], 2), np.asarray(d["train_labels"], dtype=np.int64),
                            int(d["class_count"]))
            # the cover tree is a deterministic function of the training points
            index = build_index(train.features)
            gamma = d.get("gamma")
            return FalkModel(
                index, train, np.asarray(d["centers"], dtype=np.int64),
                [np.asarray(nb, dtype=np.int64) for nb in d["neighborhoods"]],
                [decode_model(lm) for lm in d["local_models"]],
                np.asarray(d["assoc"], dtype=np.int64),
                None if gamma is None else KernelConfig(float(gamma)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PersistError):
            raise
        raise PersistError(f"malformed {d.get('kind', 'model')!r} payload: {exc}") from None
    raise PersistError(f"unknown model kind {kind!r}")


# -- documents -----------------------------------------------------------------------


def dumps_model(saved: SavedModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "task": saved.task,
        "mode": saved.mode,
        "n_features": int(saved.n_features),
        "label_values": [v if isinstance(v, str) else int(v) for v in saved.label_values],
        "standardizer": None if saved.standardizer is None else {
            "means": _arr(saved.standardizer.means), "stds": _arr(saved.standardizer.stds)},
        "model": encode_model(saved.model),
    }
    return json.dumps(doc, sort_keys=True) + "\n"


def loads_model(text: str, expect_task: str | None = None) -> SavedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise PersistError("model file lacks a format_version header")
    if doc["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(
            f"model format version {doc['format_version']} is not supported (expected {FORMAT_VERSION})")
    task = doc.get("task")
    if expect_task is not None and task != expect_task:
        raise TaskMismatchError(f"model was trained for task {task!r}, expected {expect_task!r}")
    st = doc.get("standardizer")
    try:
        scaler = None if st is None else Standardizer(np.asarray(st["means"]), np.asarray(st["stds"]))
        return SavedModel(task, doc["mode"], decode_model(doc["model"]), int(doc["n_features"]),
                          tuple(doc["label_values"]), scaler)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PersistError):
            raise
        raise PersistError(f"malformed model file: {exc}") from None


def save_model(saved: SavedModel, path) -> None:
    Path(path).write_text(dumps_model(saved))


def load_model(path, expect_task: str | None = None) -> SavedModel:
    return loads_model(Path(path).read_text(), expect_task)
