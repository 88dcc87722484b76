"""Classification metrics used in the evaluation reports."""

import numpy as np
from scipy.stats import rankdata


def _check(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.shape[0] == 0:
        raise ValueError("metrics need at least one prediction")
    if probs.shape[0] != labels.shape[0]:
        raise ValueError(f"{probs.shape[0]} predictions for {labels.shape[0]} labels")
    return probs, labels


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores share their average rank, which gives half credit to
    positive/negative ties.
    """
    scores, labels = _check(scores, labels)
    labels = labels.astype(int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos + n_neg != labels.size:
        raise ValueError("auc labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc is undefined with a single class")
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def brier(probs, labels) -> float:
    r"""Brier score :math:`\frac{1}{N}\sum_i (p_i - y_i)^2`."""
    probs, labels = _check(probs, labels)
    d = probs - labels
    return float(np.mean(d * d))


def mse(pred, target) -> float:
    pred, target = _check(pred, target)
    d = pred - target
    return float(np.mean(d * d))


def mae(probs, labels) -> float:
    probs, labels = _check(probs, labels)
    return float(np.mean(np.abs(probs - labels)))


def binary_accuracy(probs, labels, threshold: float = 0.5) -> float:
    """Fraction of cases where ``p >= threshold`` agrees with the label."""
    probs, labels = _check(probs, labels)
    return float(np.mean((probs >= threshold).astype(int) == labels.astype(int)))


def categorical_accuracy(prob_rows, labels) -> float:
    # np.argmax returns the lowest index on ties
    prob_rows, labels = _check(prob_rows, labels)
    return float(np.mean(np.argmax(prob_rows, axis=1) == labels.astype(int)))


def confusion_matrix(prob_rows, labels, n_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    prob_rows, labels = _check(prob_rows, labels)
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (labels.astype(int), np.argmax(prob_rows, axis=1)), 1)
    return cm
