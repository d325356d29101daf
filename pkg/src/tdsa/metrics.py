"""Accuracy and macro-F1 over the three sentiment classes."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .corpus import Label

CLASSES = (Label.NEG, Label.NEU, Label.POS)


def _check(predictions: Sequence, gold: Sequence) -> None:
    if len(predictions) != len(gold):
        raise ValueError(f'{len(predictions)} predictions for {len(gold)} gold labels')
    if not len(gold):
        raise ValueError('metrics need at least one prediction')


def accuracy(predictions: Sequence, gold: Sequence) -> float:
    _check(predictions, gold)
    return sum(p == g for p, g in zip(predictions, gold)) / len(gold)


def confusion_matrix(predictions: Sequence, gold: Sequence, classes: Sequence = CLASSES) -> np.ndarray:
    """Counts with gold classes on rows and predicted classes on columns."""
    index = {c: i for i, c in enumerate(classes)}
    matrix = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, g in zip(predictions, gold):
        matrix[index[g], index[p]] += 1
    return matrix


def per_class_scores(predictions: Sequence, gold: Sequence, classes: Sequence = CLASSES) -> dict:
    """Precision, recall and F1 per class; an undefined ratio counts as 0."""
    _check(predictions, gold)
    matrix = confusion_matrix(predictions, gold, classes)
    scores = {}
    for i, cls in enumerate(classes):
        true_positive = matrix[i, i]
        predicted, actual = matrix[:, i].sum(), matrix[i, :].sum()
        precision = true_positive / predicted if predicted else 0.0
        recall = true_positive / actual if actual else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores[cls] = {'precision': float(precision), 'recall': float(recall), 'f1': float(f1)}
    return scores


def macro_f1(predictions: Sequence, gold: Sequence, classes: Sequence = CLASSES) -> float:
    """Unweighted mean of per-class F1 over *all* ``classes``.

    A class absent from both gold and predictions contributes an F1 of 0, so
    a perfect prediction of a single-class test set scores 1/3.
    """
    scores = per_class_scores(predictions, gold, classes)
    return math.fsum(scores[c]['f1'] for c in classes) / len(classes)
