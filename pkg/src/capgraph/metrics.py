"""Ranking metrics for imbalanced binary classification.

Both metrics depend only on the score ordering: auc_roc is the
Mann-Whitney statistic (ties count one half), auc_pr is step-wise
average precision with tie groups collapsed to the precision at the
end of each group.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError


def _validate(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(f"scores/labels shape mismatch: {s.shape} vs {y.shape}")
    npos = int(np.count_nonzero(y == 1))
    if npos == 0 or npos == y.size:
        raise DataError("single-class input: both classes required")
    return s, y


def auc_roc(scores, labels) -> float:
    """(#concordant pairs + 0.5 * ties) / (#pos * #neg) via average ranks."""
    s, y = _validate(scores, labels)
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j < s.size and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + 1 + j)  # average 1-based rank of the tie group
        i = j
    npos = int(np.count_nonzero(y == 1))
    nneg = y.size - npos
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - npos * (npos + 1) / 2.0) / (npos * nneg)


def auc_pr(scores, labels) -> float:
    """Average precision over positives in score-descending order.

    Ties keep stable input order; every positive in a tie group contributes
    the precision at the end of its group, so constant scores yield the
    positive prevalence.
    """
    s, y = _validate(scores, labels)
    order = np.argsort(-s, kind="stable")
    sorted_scores = s[order]
    sorted_labels = y[order]
    cum_tp = np.cumsum(sorted_labels)
    npos = int(cum_tp[-1])
    total = 0.0
    i = 0
    while i < s.size:
        j = i
        while j < s.size and sorted_scores[j] == sorted_scores[i]:
            j += 1
        group_pos = int(cum_tp[j - 1] - (cum_tp[i - 1] if i else 0))
        if group_pos:
            total += group_pos * (float(cum_tp[j - 1]) / j)  # precision at group end
        i = j
    return total / npos
