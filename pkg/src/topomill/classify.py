"""Supervised learners and the repeated split/train/test protocol.

Four classifiers are supported: RBF-kernel SVM, L2 logistic regression,
random forest (100 trees of depth 2) and gradient boosting.  Features are
standardized with training-split statistics for the kernel/linear models;
tree ensembles see raw features.  Everything is deterministic given seeds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.multiclass import OneVsRestClassifier
from sklearn.svm import SVC

ALGORITHMS = ("svm", "logistic", "random_forest", "gradient_boost")


class TrainingError(RuntimeError):
    """Raised when model fitting fails or does not converge."""


@dataclass
class Dataset:
    """Feature matrix with labels and the grid row each sample came from."""

    X: np.ndarray
    y: np.ndarray
    grid_index: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        self.grid_index = np.asarray(self.grid_index, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d feature matrix")
        if self.y.shape[0] != self.X.shape[0] or self.grid_index.shape[0] != self.X.shape[0]:
            raise ValueError("row counts of X, y and grid_index must match")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("features must be finite")
        if np.unique(self.y).size < 1:
            raise ValueError("labels must be non-empty")

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(X=self.X[idx], y=self.y[idx], grid_index=self.grid_index[idx])


@dataclass
class EvalResult:
    mean_accuracy: float
    std_accuracy: float
    per_split_accuracies: np.ndarray
    per_point_misclassification_counts: np.ndarray
    per_point_test_counts: np.ndarray

    def __post_init__(self):
        self.per_split_accuracies = np.asarray(self.per_split_accuracies, dtype=np.float64)
        acc = self.per_split_accuracies
        if abs(self.mean_accuracy - float(np.mean(acc))) > 1e-12:
            raise ValueError("mean_accuracy inconsistent with per-split list")
        if abs(self.std_accuracy - float(np.std(acc, ddof=1))) > 1e-12:
            raise ValueError("std_accuracy inconsistent with per-split list")


def split(ds: Dataset, train_fraction: float, seed: int):
    """Uniform random partition into (train, test), deterministic per seed.

    No stratification.  Raises when the training side misses a class entirely,
    since such a model could never predict it.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(ds)
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise ValueError(f"fraction {train_fraction} leaves an empty side for {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    if np.unique(train.y).size != np.unique(ds.y).size:
        raise ValueError("split leaves an empty class in training; reseed or resize")
    return train, test


def default_hyperparams(algo: str) -> dict:
    """Per-algorithm hyperparameters (standard toolkit defaults, RF depth 2)."""
    if algo == "svm":
        return {"C": 1.0, "kernel": "rbf", "gamma": "scale", "max_iter": 5_000_000}
    if algo == "logistic":
        return {"C": 1.0, "max_iter": 2000}
    if algo == "random_forest":
        return {"n_estimators": 100, "max_depth": 2}
    if algo == "gradient_boost":
        return {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1}
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")


@dataclass
class Model:
    algo: str
    estimator: object
    scaler_mean: Optional[np.ndarray]
    scaler_scale: Optional[np.ndarray]
    n_features: int

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.scaler_mean is None:
            return X
        return (X - self.scaler_mean) / self.scaler_scale


def _build_estimator(algo: str, hp: dict, seed: int, n_classes: int):
    if algo == "svm":
        base = SVC(C=hp["C"], kernel=hp["kernel"], gamma=hp["gamma"],
                   max_iter=hp["max_iter"], random_state=seed)
        return OneVsRestClassifier(base) if n_classes > 2 else base
    if algo == "logistic":
        base = LogisticRegression(C=hp["C"], max_iter=hp["max_iter"],
                                  random_state=seed)
        return OneVsRestClassifier(base) if n_classes > 2 else base
    if algo == "random_forest":
        return RandomForestClassifier(n_estimators=hp["n_estimators"],
                                      max_depth=hp["max_depth"],
                                      random_state=seed)
    if algo == "gradient_boost":
        return GradientBoostingClassifier(n_estimators=hp["n_estimators"],
                                          max_depth=hp["max_depth"],
                                          learning_rate=hp["learning_rate"],
                                          random_state=seed)
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")


def train(train_ds: Dataset, algo: str, hp: Optional[dict] = None,
          seed: int = 0) -> Model:
    """Fit one classifier; non-convergence inside the iteration cap raises."""
    if np.unique(train_ds.y).size < 2:
        raise TrainingError("training data holds a single class")
    params = default_hyperparams(algo)
    if hp:
        params.update(hp)
    scaler_mean = scaler_scale = None
    X = train_ds.X
    if algo in ("svm", "logistic"):
        scaler_mean = X.mean(axis=0)
        scaler_scale = X.std(axis=0)
        scaler_scale = np.where(scaler_scale == 0, 1.0, scaler_scale)
        X = (X - scaler_mean) / scaler_scale
    estimator = _build_estimator(algo, params, seed, np.unique(train_ds.y).size)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        try:
            estimator.fit(X, train_ds.y)
        except ConvergenceWarning as exc:
            raise TrainingError(f"{algo} did not converge within its iteration cap: {exc}") from exc
        except ValueError as exc:
            raise TrainingError(f"{algo} failed to fit: {exc}") from exc
    return Model(algo=algo, estimator=estimator, scaler_mean=scaler_mean,
                 scaler_scale=scaler_scale, n_features=train_ds.X.shape[1])


def predict(model: Model, X: np.ndarray) -> np.ndarray:
    """One label per row; feature width must match training."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"feature width {X.shape[1] if X.ndim == 2 else 'n/a'} "
            f"does not match training width {model.n_features}")
    return model.estimator.predict(model.transform(X))


def evaluate(ds: Dataset, algo: str, hp: Optional[dict] = None,
             repeats: int = 10, seeds: Optional[Sequence[int]] = None,
             train_fraction: float = 0.67, trainer=None) -> EvalResult:
    """Repeated random split / train / test with per-grid-point error tallies.

    ``seeds`` must hold one seed per repeat (defaults to 0..repeats-1); each
    seed drives both the split and the model fit.  ``trainer`` exists for
    protocol tests and defaults to :func:`train`.
    """
    if seeds is None:
        seeds = list(range(repeats))
    if len(seeds) != repeats:
        raise ValueError("need exactly one seed per repeat")
    fit = train if trainer is None else trainer
    n_points = int(ds.grid_index.max()) + 1 if len(ds) else 0
    miscls = np.zeros(n_points, dtype=np.int64)
    tested = np.zeros(n_points, dtype=np.int64)
    accuracies = np.empty(repeats, dtype=np.float64)
    for r, seed in enumerate(seeds):
        try:
            train_ds, test_ds = split(ds, train_fraction, seed)
            model = fit(train_ds, algo, hp, seed=seed)
            predicted = predict(model, test_ds.X)
        except (ValueError, TrainingError) as exc:
            raise TrainingError(f"repeat {r} (seed {seed}) failed: {exc}") from exc
        correct = predicted == test_ds.y
        accuracies[r] = float(np.mean(correct))
        np.add.at(tested, test_ds.grid_index, 1)
        np.add.at(miscls, test_ds.grid_index[~correct], 1)
    return EvalResult(
        mean_accuracy=float(np.mean(accuracies)),
        std_accuracy=float(np.std(accuracies, ddof=1)),
        per_split_accuracies=accuracies,
        per_point_misclassification_counts=miscls,
        per_point_test_counts=tested,
    )
