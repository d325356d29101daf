"""Max-Min feature scaling and a one-vs-rest L2-regularised L2-loss linear SVM.

The SVM is solved in the dual by coordinate descent (Hsieh et al., 2008), the
solver behind LibLinear's default ``LinearSVC``. A constant bias feature is
appended to every example, so the bias is regularised like LibLinear's.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .blob import read_blob, write_blob

DEFAULT_C_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


class NotFittedError(RuntimeError):
    pass


class MaxMinScaler:
    """Per-dimension affine map of the training range onto [0, 1].

    Constant training dimensions map to ``x - min`` (0 on training data).
    Test values outside the training range are not clamped.
    """

    def __init__(self):
        self.min_ = None
        self.max_ = None

    def fit(self, features) -> "MaxMinScaler":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or not len(features):
            raise ValueError('fit needs a non-empty 2-D feature matrix')
        self.min_ = features.min(axis=0)
        self.max_ = features.max(axis=0)
        return self

    def transform(self, features) -> np.ndarray:
        if self.min_ is None:
            raise NotFittedError('MaxMinScaler.transform called before fit')
        features = np.asarray(features, dtype=np.float64)
        span = self.max_ - self.min_
        span = np.where(span > 0, span, 1.0)
        return (features - self.min_) / span


def fit_scaler(features) -> MaxMinScaler:
    return MaxMinScaler().fit(features)


def transform(scaler: MaxMinScaler, features) -> np.ndarray:
    return scaler.transform(features)


@dataclass(frozen=True)
class SvmConfig:
    c_value: float = 1.0
    tolerance: float = 1e-4
    max_iterations: int = 10000
    seed: int = 0
    bias: float = 1.0

    def __post_init__(self):
        if not self.c_value > 0:
            raise ValueError(f'c_value must be positive, got {self.c_value}')


@dataclass
class LinearModel:
    weights: np.ndarray
    biases: np.ndarray
    classes: list
    config: SvmConfig = field(default_factory=SvmConfig)
    history: list = field(default_factory=list, repr=False)

    def decision_function(self, features) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights.T + self.biases

    def predict(self, features) -> list:
        scores = self.decision_function(features)
        # argmax returns the first maximum, so ties go to the earliest class.
        return [self.classes[i] for i in np.argmax(scores, axis=1)]


def _augment(features: np.ndarray, bias: float) -> np.ndarray:
    return np.hstack([features, np.full((len(features), 1), bias)])


def dual_objective(alpha: np.ndarray, w: np.ndarray, c_value: float) -> float:
    """``0.5 * |w|^2 + sum(alpha^2) / (4C) - sum(alpha)`` with ``w = sum alpha_i y_i x_i``."""
    return 0.5 * float(w @ w) + float(alpha @ alpha) / (4.0 * c_value) - float(alpha.sum())


def primal_objective(w: np.ndarray, x_aug: np.ndarray, y: np.ndarray, c_value: float) -> float:
    """``0.5 * |w|^2 + C * sum(max(0, 1 - y w.x)^2)`` on bias-augmented features."""
    margins = np.maximum(0.0, 1.0 - y * (x_aug @ w))
    return 0.5 * float(w @ w) + c_value * float(margins @ margins)


def _binary_dual_cd(x: np.ndarray, y: np.ndarray, config: SvmConfig,
                    rng: np.random.Generator) -> tuple[np.ndarray, list[float]]:
    n, d = x.shape
    diag = 1.0 / (2.0 * config.c_value)
    q_diag = np.einsum('ij,ij->i', x, x) + diag
    alpha = np.zeros(n)
    w = np.zeros(d)
    history = []
    for _ in range(config.max_iterations):
        max_pg, min_pg = -np.inf, np.inf
        for i in rng.permutation(n):
            gradient = y[i] * (w @ x[i]) - 1.0 + diag * alpha[i]
            projected = gradient if alpha[i] > 0 else min(gradient, 0.0)
            max_pg = max(max_pg, projected)
            min_pg = min(min_pg, projected)
            if projected != 0.0:
                old = alpha[i]
                alpha[i] = max(old - gradient / q_diag[i], 0.0)
                w += (alpha[i] - old) * y[i] * x[i]
        history.append(dual_objective(alpha, w, config.c_value))
        if max_pg - min_pg <= config.tolerance:
            break
    return w, history


def train_svm(features, labels: Sequence, config: SvmConfig = SvmConfig()) -> LinearModel:
    """Train one binary SVM per class (one-vs-rest).

    ``model.history[k]`` holds the dual objective after each epoch for class
    ``k``; it never increases.

    :raises ValueError: on fewer than two classes or non-finite features.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = list(labels)
    if features.ndim != 2 or len(features) != len(labels):
        raise ValueError('features must be an n x d matrix with one label per row')
    if not np.all(np.isfinite(features)):
        raise ValueError('features contain NaN or infinite values')
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f'need at least two classes, got {classes}')
    x = _augment(features, config.bias)
    weights, history = [], []
    rng = np.random.default_rng(config.seed)
    for cls in classes:
        y = np.array([1.0 if label == cls else -1.0 for label in labels])
        w, objective = _binary_dual_cd(x, y, config, rng)
        weights.append(w)
        history.append(objective)
    stacked = np.array(weights)
    return LinearModel(stacked[:, :-1].copy(), stacked[:, -1] * config.bias,
                       classes, config, history)


def stratified_folds(labels: Sequence, k: int, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays of ``k`` stratified folds.

    Each class is shuffled and dealt round-robin, so class counts per fold
    differ by at most one.
    """
    if k < 2:
        raise ValueError('k must be at least 2')
    by_class: dict = {}
    for index, label in enumerate(labels):
        by_class.setdefault(label, []).append(index)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    dealt = 0
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < k:
            raise ValueError(f'class {label!r} has {len(members)} instances, fewer than {k} folds')
        for position, i in enumerate(rng.permutation(len(members))):
            folds[(dealt + position) % k].append(members[i])
        dealt += len(members)
    return [np.array(sorted(fold)) for fold in folds]


def cv_select_c(features, labels: Sequence, grid: Sequence[float] = DEFAULT_C_GRID,
                k: int = 5, seed: int = 0, scale: bool = True,
                config: SvmConfig = SvmConfig()) -> tuple[float, dict]:
    """Pick C by stratified k-fold mean accuracy; ties go to the smaller C.

    When ``scale`` is set the scaler is refitted on each fold's training part.
    Returns ``(best_c, {c: mean_accuracy})``.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = list(labels)
    folds = stratified_folds(labels, k, seed)
    scores = {}
    for c_value in sorted(grid):
        accuracies = []
        for test_index in folds:
            train_mask = np.ones(len(labels), dtype=bool)
            train_mask[test_index] = False
            x_train, x_test = features[train_mask], features[test_index]
            if scale:
                scaler = fit_scaler(x_train)
                x_train, x_test = scaler.transform(x_train), scaler.transform(x_test)
            y_train = [labels[i] for i in np.flatnonzero(train_mask)]
            model = train_svm(x_train, y_train,
                              SvmConfig(c_value, config.tolerance, config.max_iterations,
                                        config.seed, config.bias))
            predicted = model.predict(x_test)
            accuracies.append(np.mean([p == labels[i] for p, i in zip(predicted, test_index)]))
        scores[c_value] = float(np.mean(accuracies))
    best = max(scores, key=lambda c: (scores[c], -c))
    return best, scores


def save_model(model: LinearModel, path: Union[str, Path]) -> None:
    header = {'kind': 'linear-svm', 'classes': [str(getattr(c, 'word', c)) for c in model.classes],
              'dims': int(model.weights.shape[1]), 'config': model.config.__dict__}
    write_blob(path, header, {'weights': model.weights, 'biases': model.biases})


def load_model(path: Union[str, Path], label_type=None) -> LinearModel:
    header, arrays = read_blob(path)
    if header.get('kind') != 'linear-svm':
        raise ValueError(f'{path}: not a linear SVM model')
    classes = header['classes']
    if label_type is not None:
        classes = [label_type.parse(c) if hasattr(label_type, 'parse') else label_type(c)
                   for c in classes]
    return LinearModel(arrays['weights'], arrays['biases'], classes, SvmConfig(**header['config']))
