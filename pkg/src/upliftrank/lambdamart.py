"""Listwise boosted-tree ranker driven by metric swap costs.

Each boosting round turns the current scores into per-item pseudo-gradients:
for every item pair with unequal relevance (and at least one side inside
the cutoff window), a sigmoid pairwise gradient is weighted by the metric's
swap cost at the pair's current positions. The shared tree engine then fits
those gradients with Newton steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .data import Partition, UpliftDataset, round_half_up
from .errors import ConfigError, MetricDomainError
from .gbrt import BoostedEnsemble, GbrtConfig, Loss, fit, predict
from .metrics import (MetricKind, Query, gain_values, positional_weights)
from .relevance import RelevanceScheme, assign_relevance


@dataclass
class LambdaConfig:
    metric: MetricKind = MetricKind.PCG
    cutoff_fraction: float = 1.0
    sigma: float = 1.0
    dcg_form: int = 1
    # enumerate every pair instead of only those touching the cutoff
    # window; identical output for the supported metrics, slower
    full_pairs: bool = False
    gbrt: GbrtConfig = field(default_factory=lambda: GbrtConfig(
        loss=Loss.EXTERNAL_GRADIENTS))

    def validate(self) -> None:
        if not 0.0 < self.cutoff_fraction <= 1.0:
            raise ConfigError("cutoff_fraction must be in (0, 1], got "
                              f"{self.cutoff_fraction}")
        if self.sigma <= 0.0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.gbrt.loss is not Loss.EXTERNAL_GRADIENTS:
            raise ConfigError("listwise training needs the external-"
                              "gradient loss")
        self.gbrt.validate()


@dataclass
class LambdaBatch:
    """Per-query pseudo-gradients (lambdas) and curvature weights, aligned
    with each query's item order."""

    lambdas: list[np.ndarray]
    weights: list[np.ndarray]


def _query_lambdas(query: Query, scores: np.ndarray,
                   config: LambdaConfig) -> tuple[np.ndarray, np.ndarray]:
    n = len(query)
    lam = np.zeros(n)
    wgt = np.zeros(n)
    if n < 2:
        return lam, wgt
    order = np.argsort(-scores, kind="stable")
    ranked_rel = query.relevance[order]
    ranked_scores = np.ascontiguousarray(scores[order])
    k = min(max(query.cutoff, 1), n)

    lam_r = np.zeros(n)
    wgt_r = np.zeros(n)
    restrict = not config.full_pairs

    if config.metric is MetricKind.MAP:
        if not np.isin(ranked_rel, (0.0, 1.0)).all():
            raise MetricDomainError("MAP training requires binary relevance")
        rel_ranks = np.nonzero(ranked_rel == 1.0)[0].astype(np.int64)
        non_ranks = np.nonzero(ranked_rel == 0.0)[0].astype(np.int64)
        counts = np.cumsum(ranked_rel).astype(np.int64)
        prefix = np.concatenate(([0.0], np.cumsum(
            ranked_rel / np.arange(1, n + 1, dtype=np.float64))))
        _kernels.lambda_map_block(rel_ranks, non_ranks, ranked_scores, k,
                                  config.sigma, counts, prefix,
                                  float(ranked_rel.sum()), restrict,
                                  lam_r, wgt_r)
    else:
        gains = np.ascontiguousarray(
            gain_values(config.metric, ranked_rel, config.dcg_form))
        weights = positional_weights(config.metric, ranked_rel, k, n,
                                     config.dcg_form)
        weights = np.ascontiguousarray(weights)
        # pair enumeration by distinct-grade blocks; relevance schemes
        # produce at most four grades, so the block count stays tiny
        distinct = np.unique(gains)[::-1]
        blocks = [np.nonzero(gains == v)[0].astype(np.int64)
                  for v in distinct]
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                _kernels.lambda_block(blocks[a], blocks[b], gains, weights,
                                      ranked_scores, k, config.sigma,
                                      restrict, lam_r, wgt_r)

    lam[order] = lam_r
    wgt[order] = wgt_r
    return lam, wgt


def compute_lambdas(queries, scores, config: LambdaConfig) -> LambdaBatch:
    """Pseudo-gradients for a batch of queries at the given scores.

    ``scores`` holds one score vector per query. Each qualifying pair
    (higher relevance ``i``, lower ``j``) contributes
    ``sigma * rho * delta`` to ``lambda_i`` and its negative to
    ``lambda_j`` with ``rho = 1 / (1 + exp(sigma * (s_i - s_j)))`` and
    ``delta`` the metric swap cost, plus ``sigma^2 * rho * (1 - rho) *
    delta`` to both curvature weights.
    """
    config.validate()
    lambdas, weights = [], []
    for query, s in zip(queries, scores):
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (len(query),):
            raise ValueError(f"scores for query {query.qid} have wrong "
                             "length")
        if not np.isfinite(s).all():
            raise ValueError("scores must be finite")
        lam, wgt = _query_lambdas(query, s, config)
        lambdas.append(lam)
        weights.append(wgt)
    return LambdaBatch(lambdas, weights)


def _apply_cutoffs(queries, fraction: float) -> None:
    for q in queries:
        q.cutoff = max(1, round_half_up(fraction * len(q)))


def train(dataset: UpliftDataset, scheme: RelevanceScheme,
          partition: Partition, config: LambdaConfig,
          trace_callback=None) -> BoostedEnsemble:
    """Boosted listwise training over relevance queries built from a
    dataset.

    Under the SEPARATE partition the treated and control queries each get
    their own cutoff (the shared fraction applied to their own size).
    ``trace_callback(round, metric_value)`` reports the optimised metric
    on the training queries after each round (PCG is summed over queries,
    other metrics averaged).
    """
    config.validate()
    built = assign_relevance(dataset, scheme, partition)
    queries = list(built) if isinstance(built, tuple) else [built]
    _apply_cutoffs(queries, config.cutoff_fraction)

    def provider(scores):
        per_query = [scores[q.indices] for q in queries]
        batch = compute_lambdas(queries, per_query, config)
        grad = np.zeros(len(dataset))
        hess = np.zeros(len(dataset))
        for q, lam, wgt in zip(queries, batch.lambdas, batch.weights):
            grad[q.indices] = -lam
            hess[q.indices] = wgt
        return grad, hess

    callback = None
    if trace_callback is not None:
        from .metrics import evaluate

        def callback(round_idx, scores):
            values = []
            for q in queries:
                ranked = q.relevance[np.argsort(-scores[q.indices],
                                                kind="stable")]
                values.append(evaluate(config.metric, ranked, q.cutoff,
                                       n=len(q), form=config.dcg_form))
            agg = (float(np.sum(values))
                   if config.metric is MetricKind.PCG
                   else float(np.mean(values)))
            trace_callback(round_idx, agg)

    return fit(dataset.features, provider, config.gbrt,
               round_callback=callback)


def predict_scores(ensemble: BoostedEnsemble,
                   dataset: UpliftDataset) -> np.ndarray:
    """Ranking scores for a dataset (raw ensemble output)."""
    return predict(ensemble, dataset.features)
