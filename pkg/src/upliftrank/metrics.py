"""Learning-to-rank metrics and their swap costs.

Positions are 0-based throughout; ``k`` counts how many top positions a
truncated metric scores. ``pcg`` weights the grade at position ``i`` by
``n - i`` (so the top position is worth the full query length), which makes
its total over a ranked uplift dataset coincide with the exact sum of the
joint relative uplift curve when the relative relevance scheme is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import round_half_up
from .errors import MetricDomainError


class MetricKind(Enum):
    PRECISION_AT_K = "precision"
    MAP = "map"
    CG = "cg"
    DCG1 = "dcg1"
    DCG2 = "dcg2"
    NDCG = "ndcg"
    PCG = "pcg"


@dataclass
class Query:
    """Ranked-list unit: items with relevance grades and a scoring cutoff."""

    qid: str
    features: np.ndarray
    relevance: np.ndarray
    cutoff: int
    indices: np.ndarray | None = None  # rows in the source dataset

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.relevance = np.asarray(self.relevance, dtype=np.float64)
        n = len(self.relevance)
        if self.features.shape[0] != n:
            raise ValueError("features and relevance lengths differ")
        if not np.isfinite(self.relevance).all():
            raise ValueError("relevance grades must be finite")
        if not 0 <= self.cutoff <= n:
            raise ValueError(f"cutoff {self.cutoff} out of range for "
                             f"query of size {n}")

    def __len__(self):
        return len(self.relevance)


def _as_rel(rels) -> np.ndarray:
    return np.asarray(rels, dtype=np.float64)


def _check_binary(rels: np.ndarray, metric: str) -> None:
    if rels.size and not np.isin(rels, (0.0, 1.0)).all():
        raise MetricDomainError(f"{metric} requires binary relevance")


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for list of length {n}")


def precision_at_k(rels, k: int) -> float:
    """Share of relevant items among the top k (binary relevance)."""
    rels = _as_rel(rels)
    _check_binary(rels, "precision")
    _check_k(k, rels.size)
    return float(rels[:k].sum() / k)


def average_precision(rels, k: int | None = None) -> float:
    """Mean of precision values taken at each relevant position.

    A query without relevant items scores 0. With ``k`` the precision
    terms are truncated at the cutoff while the normalisation keeps the
    full relevant count (so the untruncated value is recovered at k = n).
    """
    rels = _as_rel(rels)
    _check_binary(rels, "average precision")
    total = rels.sum()
    if total == 0:
        return 0.0
    if k is None:
        k = rels.size
    hits = np.cumsum(rels)
    ranks = np.arange(1, rels.size + 1, dtype=np.float64)
    at = (rels[:k] == 1.0)
    return float((hits[:k][at] / ranks[:k][at]).sum() / total)


def mean_average_precision(queries) -> float:
    """Mean of per-list average precision over a collection of ranked
    relevance lists."""
    queries = list(queries)
    if not queries:
        raise ValueError("need at least one query")
    return float(np.mean([average_precision(q) for q in queries]))


def cumulative_gain(rels, k: int) -> float:
    rels = _as_rel(rels)
    _check_k(k, rels.size)
    return float(rels[:k].sum())


def _dcg_gains(rels: np.ndarray, form: int) -> np.ndarray:
    if form == 1:
        return rels
    if form == 2:
        return np.exp2(rels) - 1.0
    raise ValueError(f"dcg form must be 1 or 2, got {form}")


def dcg(rels, k: int, form: int = 1) -> float:
    """Discounted cumulative gain; form 2 exponentiates the grades."""
    rels = _as_rel(rels)
    _check_k(k, rels.size)
    discounts = 1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))
    return float((_dcg_gains(rels[:k], form) * discounts).sum())


def ideal_dcg(rels, k: int, form: int = 1) -> float:
    rels = np.sort(_as_rel(rels))[::-1]
    return dcg(rels, k, form)


def ndcg(rels, k: int, form: int = 1) -> float:
    """DCG normalised by the best achievable ordering of the same grades.

    Returns 0 when the ideal DCG is not positive (possible with negative
    grades), keeping the value defined everywhere.
    """
    rels = _as_rel(rels)
    ideal = ideal_dcg(rels, k, form)
    if ideal <= 0.0:
        return 0.0
    return dcg(rels, k, form) / ideal


def pcg_weights(n: int, k: int) -> np.ndarray:
    """Positional promotion weights: n - i at position i, zero past k."""
    w = np.arange(n, 0, -1, dtype=np.float64)
    w[k:] = 0.0
    return w


def pcg(rels, k: int, n: int | None = None) -> float:
    """Promoted cumulative gain: grades weighted linearly by position."""
    rels = _as_rel(rels)
    if n is None:
        n = rels.size
    _check_k(k, n)
    return float((rels * pcg_weights(n, k)[:rels.size]).sum())


def pcg_separate(rels_treated, rels_control, p: float) -> float:
    """Promoted gain over two independently ranked groups at depth ``p``.

    Each group is scored at its own rounded cutoff and the two values are
    summed; an empty group contributes zero.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    total = 0.0
    for rels in (rels_treated, rels_control):
        rels = _as_rel(rels)
        if rels.size == 0:
            continue
        k = round_half_up(p * rels.size)
        if k >= 1:
            total += pcg(rels, k)
    return total


def evaluate(kind: MetricKind, rels, k: int, n: int | None = None,
             form: int = 1) -> float:
    """Evaluate one metric on a ranked relevance list (used as the
    recompute-from-scratch reference for swap costs)."""
    if kind is MetricKind.PRECISION_AT_K:
        return precision_at_k(rels, k)
    if kind is MetricKind.MAP:
        return average_precision(rels, k)
    if kind is MetricKind.CG:
        return cumulative_gain(rels, k)
    if kind is MetricKind.DCG1:
        return dcg(rels, k, form=1)
    if kind is MetricKind.DCG2:
        return dcg(rels, k, form=2)
    if kind is MetricKind.NDCG:
        return ndcg(rels, k, form)
    if kind is MetricKind.PCG:
        return pcg(rels, k, n)
    raise ValueError(f"unknown metric kind {kind}")


def positional_weights(kind: MetricKind, rels, k: int, n: int | None = None,
                       form: int = 1) -> np.ndarray | None:
    """Per-position weight vector for metrics of the form
    sum_i gain(rel_i) * w_i, already truncated at the cutoff.
    Returns None for metrics that are not positional (MAP)."""
    rels = _as_rel(rels)
    size = rels.size
    if n is None:
        n = size
    if kind is MetricKind.PCG:
        return pcg_weights(n, k)[:size]
    w = np.zeros(size, dtype=np.float64)
    if kind is MetricKind.CG:
        w[:k] = 1.0
    elif kind is MetricKind.PRECISION_AT_K:
        w[:k] = 1.0 / k
    elif kind in (MetricKind.DCG1, MetricKind.DCG2):
        w[:k] = 1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))
    elif kind is MetricKind.NDCG:
        ideal = ideal_dcg(rels, k, form)
        if ideal > 0.0:
            w[:k] = (1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))
                     / ideal)
    else:
        return None
    return w


def gain_values(kind: MetricKind, rels, form: int = 1) -> np.ndarray:
    """Per-item gain under a positional metric."""
    rels = _as_rel(rels)
    if kind is MetricKind.DCG2 or (kind is MetricKind.NDCG and form == 2):
        return np.exp2(rels) - 1.0
    return rels


def _map_swap_delta(rels: np.ndarray, i: int, j: int, k: int) -> float:
    _check_binary(rels, "MAP swap cost")
    total = rels.sum()
    if total == 0 or rels[i] == rels[j]:
        return 0.0
    if rels[i] < rels[j]:
        i, j = j, i  # make i the relevant position
    counts = np.cumsum(rels)
    prefix = np.concatenate(([0.0], np.cumsum(
        rels / np.arange(1, rels.size + 1, dtype=np.float64))))
    if i < j:  # relevant item moves down
        t_i = counts[i] / (i + 1) if i < k else 0.0
        t_j = counts[j] / (j + 1) if j < k else 0.0
        mid = prefix[min(j, k)] - prefix[min(i, k - 1) + 1]
        delta = -t_i + t_j - mid
    else:      # relevant item moves up past a non-relevant one
        a, b = i, j
        t_b = (counts[b] + 1.0) / (b + 1) if b < k else 0.0
        t_a = counts[a] / (a + 1) if a < k else 0.0
        mid = prefix[min(a, k)] - prefix[min(b, k - 1) + 1]
        delta = t_b - t_a + mid
    return abs(delta) / total


def swap_delta(kind: MetricKind, rels, i: int, j: int, k: int,
               n: int | None = None, form: int = 1) -> float:
    """Absolute metric change from swapping the items at positions i and j.

    Computed in closed form; equals recomputing the metric on the swapped
    list. Positions are 0-based into the ranked relevance list.
    """
    rels = _as_rel(rels)
    if i == j:
        raise ValueError("swap positions must differ")
    if not (0 <= i < rels.size and 0 <= j < rels.size):
        raise ValueError(f"swap positions ({i}, {j}) out of range")
    _check_k(k, rels.size if n is None else n)
    if kind is MetricKind.MAP:
        return _map_swap_delta(rels, i, j, k)
    w = positional_weights(kind, rels, k, n, form)
    g = gain_values(kind, rels, form)
    return float(abs((g[i] - g[j]) * (w[i] - w[j])))


# --- ranking file format ---------------------------------------------------
#
# One item per line: "<relevance> qid:<id> 1:<v1> 2:<v2> ...", feature
# indices 1-based and ascending. Floats are written with repr() so finite
# values round-trip bit-exactly.

def write_ranking_file(queries, path) -> None:
    with open(path, "w") as fh:
        for q in queries:
            for rel, row in zip(q.relevance, q.features):
                feats = " ".join(f"{j + 1}:{repr(float(v))}"
                                 for j, v in enumerate(row))
                line = f"{repr(float(rel))} qid:{q.qid}"
                fh.write(f"{line} {feats}\n" if feats else f"{line}\n")


def read_ranking_file(path) -> list[Query]:
    order: list[str] = []
    rels: dict[str, list[float]] = {}
    rows: dict[str, list[list[float]]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split()
            if len(parts) < 2 or not parts[1].startswith("qid:"):
                raise ValueError(f"{path}: malformed line {lineno}")
            rel = float(parts[0])
            qid = parts[1][4:]
            values = []
            for expected, token in enumerate(parts[2:], start=1):
                idx_s, _, val_s = token.partition(":")
                if int(idx_s) != expected:
                    raise ValueError(
                        f"{path}: line {lineno}: feature indices must be "
                        "1-based and ascending")
                values.append(float(val_s))
            if qid not in rels:
                order.append(qid)
                rels[qid] = []
                rows[qid] = []
            rels[qid].append(rel)
            rows[qid].append(values)
    queries = []
    for qid in order:
        feats = np.asarray(rows[qid], dtype=np.float64)
        if feats.size == 0:
            feats = feats.reshape(len(rows[qid]), 0)
        queries.append(Query(qid, feats, np.asarray(rels[qid]),
                             cutoff=len(rels[qid])))
    return queries
