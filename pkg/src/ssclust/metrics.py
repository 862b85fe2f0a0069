"""Clustering evaluation: adjusted Rand index, Hellinger line test, answering time."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTestError


def _comb2(v):
    v = np.asarray(v, dtype=float)
    return v * (v - 1.0) / 2.0


def contingency(labels_a, labels_b) -> np.ndarray:
    _, ia = np.unique(np.asarray(labels_a), return_inverse=True)
    _, ib = np.unique(np.asarray(labels_b), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index between two partitions."""
    a = np.asarray(labels_a).reshape(-1)
    b = np.asarray(labels_b).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("ARI needs at least two observations")
    table = contingency(a, b)
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        # both partitions trivial (all singletons or one block): identical iff indices agree
        return 1.0 if sum_a == sum_b else 0.0
    return float((sum_ij - expected) / denom)


def hellinger(p, q) -> float:
    """``sqrt(1 - sum_k sqrt(p_k q_k))``, bounded in [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have the same support size")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("distributions must sum to 1")
    bc = float(np.sum(np.sqrt(p * q)))
    return math.sqrt(max(0.0, 1.0 - bc))


@dataclass
class TestOutcome:
    statistic: float
    null_samples: np.ndarray
    p_value: float

    __test__ = False  # not a pytest class

    @property
    def B(self) -> int:
        return len(self.null_samples)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "B": self.B,
            "null_samples": [float(h) for h in self.null_samples],
        }


def membership_distributions(assignments, lines):
    """Empirical cluster-membership distribution of each of the two lines.

    Returns ``(p, q, line_values)`` with ``p`` and ``q`` over the sorted
    distinct cluster ids.
    """
    assignments = np.asarray(assignments).reshape(-1)
    lines = np.asarray(lines).reshape(-1)
    if assignments.shape != lines.shape:
        raise ValueError("assignments and lines differ in length")
    values = np.unique(lines)
    if values.size != 2:
        raise DegenerateTestError(f"expected exactly two lines, found {values.size}")
    _, cl = np.unique(assignments, return_inverse=True)
    K = cl.max() + 1
    is_first = lines == values[0]
    p = np.bincount(cl[is_first], minlength=K) / is_first.sum()
    q = np.bincount(cl[~is_first], minlength=K) / (~is_first).sum()
    return p, q, values


def _hellinger_from_mask(cl, K, mask):
    n1 = mask.sum()
    p = np.bincount(cl[mask], minlength=K) / n1
    q = np.bincount(cl[~mask], minlength=K) / (cl.size - n1)
    return math.sqrt(max(0.0, 1.0 - float(np.sum(np.sqrt(p * q)))))


def line_difference_test(assignments, lines, B: int = 999, seed=None) -> TestOutcome:
    """Permutation test of whether two lines share a cluster-membership distribution.

    The statistic is the Hellinger distance between the lines' empirical
    membership distributions.  Its null distribution is simulated by
    permuting the line ids ``B`` times with the cluster assignments held
    fixed; the p-value is ``(1 + #{H_i >= H}) / (1 + B)``.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    membership_distributions(assignments, lines)  # validates both lines are present
    assignments = np.asarray(assignments).reshape(-1)
    lines = np.asarray(lines).reshape(-1)
    _, cl = np.unique(assignments, return_inverse=True)
    K = cl.max() + 1
    mask = lines == np.unique(lines)[0]

    observed = _hellinger_from_mask(cl, K, mask)
    rng = np.random.default_rng(seed)
    null = np.empty(B)
    for i in range(B):
        null[i] = _hellinger_from_mask(cl, K, rng.permutation(mask))
    # guard against rounding making equal statistics compare unequal
    exceed = np.count_nonzero(null >= observed - 1e-12)
    return TestOutcome(observed, null, (1 + exceed) / (1 + B))


def answering_time(p_values, alpha: float, start: int = 2, stop: int = 30):
    """Smallest ``q0`` in ``[start, stop]`` with ``p(q) <= alpha`` for every ``q >= q0``.

    ``p_values`` maps each unsupervised sample size ``q`` to its p-value.
    Returns the string ``"never"`` when ``p(stop) > alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    missing = [q for q in range(start, stop + 1) if q not in p_values]
    if missing:
        raise KeyError(f"p-values missing for sample sizes {missing}")
    tau = "never"
    for q in range(stop, start - 1, -1):
        if p_values[q] <= alpha:
            tau = q
        else:
            break
    return tau
