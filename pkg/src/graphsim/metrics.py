"""Pair AUC and triplet accuracy."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata


def pair_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve via the Mann-Whitney U statistic.

    Equals P(score_pos > score_neg) + 0.5 * P(tie) over all positive/negative
    combinations.  Labels are +1 (similar) and -1 (dissimilar).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = int((labels == -1).sum())
    if n_pos + n_neg != labels.size:
        raise ValueError("labels must be -1 or +1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("pair_auc needs at least one positive and one negative example")
    ranks = rankdata(scores)  # ties get their average rank
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def triplet_accuracy(pos_scores: Sequence[float], neg_scores: Sequence[float]) -> float:
    """Fraction of triplets where the positive pair scores strictly higher."""
    pos_scores = np.asarray(pos_scores, dtype=np.float64)
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    if pos_scores.size == 0:
        raise ValueError("triplet_accuracy needs at least one triplet")
    if pos_scores.shape != neg_scores.shape:
        raise ValueError("positive and negative score lists differ in length")
    return float(np.mean(pos_scores > neg_scores))


def read_score_csv(path: str | os.PathLike) -> tuple[list[float], list[int]]:
    """Read ``score,label`` rows; a non-numeric first row is taken as a header."""
    scores, labels = [], []
    with open(path, newline="") as f:
        for k, row in enumerate(csv.reader(f)):
            if not row:
                continue
            try:
                s, lab = float(row[0]), int(row[1])
            except (ValueError, IndexError):
                if k == 0:
                    continue
                raise ValueError(f"{path}: line {k + 1}: expected 'score,label', got {row!r}") from None
            scores.append(s)
            labels.append(lab)
    return scores, labels


def write_score_csv(path: str | os.PathLike, rows: Iterable[tuple[float, int]]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["score", "label"])
        for s, lab in rows:
            w.writerow([repr(float(s)), int(lab)])
