"""Gradient-boosted regression trees.

Shared base learner for the pointwise scorers (squared / logistic loss)
and the listwise trainer (externally supplied gradients). Trees are grown
best-first with exact split enumeration and Newton leaf values; there is
no subsampling, so fitting is fully deterministic.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, ShapeError


class Loss(Enum):
    SQUARED_ERROR = "squared_error"
    LOGISTIC = "logistic"
    EXTERNAL_GRADIENTS = "external"


@dataclass(frozen=True)
class GbrtConfig:
    n_trees: int = 500
    learning_rate: float = 0.01
    max_leaves: int = 16
    # None derives max(5, 1% of the training rows) at fit time
    min_instances_per_leaf: int | None = None
    loss: Loss = Loss.SQUARED_ERROR
    reg_lambda: float = 1.0
    min_split_gain: float = 1e-12

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0, 1], got "
                              f"{self.learning_rate}")
        if self.max_leaves < 2:
            raise ConfigError("max_leaves must be >= 2, got "
                              f"{self.max_leaves}")
        if self.reg_lambda < 0.0:
            raise ConfigError("reg_lambda must be >= 0")

    def resolved_min_leaf(self, n_rows: int) -> int:
        if self.min_instances_per_leaf is not None:
            if self.min_instances_per_leaf < 1:
                raise ConfigError("min_instances_per_leaf must be >= 1")
            return self.min_instances_per_leaf
        return max(5, int(round(0.01 * n_rows)))


_HESSIAN_FLOOR = 1e-9


class Tree:
    """A fitted regression tree in flat-array form.

    ``feature[i] < 0`` marks node i as a leaf with output ``value[i]``;
    internal nodes route rows with ``x[feature] <= threshold`` left.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, features: np.ndarray) -> np.ndarray:
        node = np.zeros(features.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                return self.value[node]
            cur = node[active]
            go_left = (features[active, feat[active]]
                       <= self.threshold[cur])
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def to_node_dict(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"value": float(self.value[i])}
        return {"feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": self.to_node_dict(int(self.left[i])),
                "right": self.to_node_dict(int(self.right[i]))}

    @classmethod
    def from_node_dict(cls, node: dict) -> "Tree":
        feature, threshold, left, right, value = [], [], [], [], []

        def add(nd: dict) -> int:
            i = len(feature)
            if "value" in nd:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(nd["value"]))
            else:
                feature.append(int(nd["feature"]))
                threshold.append(float(nd["threshold"]))
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                li = add(nd["left"])
                ri = add(nd["right"])
                left[i] = li
                right[i] = ri
            return i

        add(node)
        return cls(feature, threshold, left, right, value)


@dataclass
class BoostedEnsemble:
    """base_score + learning_rate * sum of tree outputs."""

    trees: list[Tree] = field(default_factory=list)
    learning_rate: float = 0.01
    base_score: float = 0.0
    loss: Loss = Loss.SQUARED_ERROR
    n_features: int = 0

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate,
                "base_score": self.base_score,
                "loss": self.loss.value,
                "n_features": self.n_features,
                "trees": [t.to_node_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, payload: dict) -> "BoostedEnsemble":
        return cls(trees=[Tree.from_node_dict(t) for t in payload["trees"]],
                   learning_rate=float(payload["learning_rate"]),
                   base_score=float(payload["base_score"]),
                   loss=Loss(payload["loss"]),
                   n_features=int(payload["n_features"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "BoostedEnsemble":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class _TreeBuilder:
    """Best-first growth to a leaf budget; deterministic tie-breaking by
    insertion order, feature index and split position."""

    def __init__(self, features, grads, hess, config: GbrtConfig,
                 min_leaf: int, feature_orders=None):
        self.X = features
        self.g = grads
        self.h = hess
        self.cfg = config
        self.min_leaf = min_leaf
        # global per-feature sort orders, shared across boosting rounds
        self.feature_orders = feature_orders
        self.feature = [-1]
        self.threshold = [0.0]
        self.left = [-1]
        self.right = [-1]
        self.value = [0.0]
        self.leaf_rows: dict[int, np.ndarray] = {}
        self._counter = 0

    def _leaf_value(self, rows: np.ndarray) -> float:
        denom = self.h[rows].sum() + self.cfg.reg_lambda
        if denom < _HESSIAN_FLOOR:
            denom = _HESSIAN_FLOOR
        return float(-self.g[rows].sum() / denom)

    def _node_order(self, rows: np.ndarray, f: int) -> np.ndarray:
        """Node rows sorted by one feature, ties by original index.

        Large nodes filter the precomputed global order (O(n) but no
        sort); small ones sort locally. Both give the identical sequence
        because ``rows`` is kept index-sorted.
        """
        n_total = self.X.shape[0]
        if self.feature_orders is not None and rows.size * 12 >= n_total:
            order_f = self.feature_orders[f]
            in_node = np.zeros(n_total, dtype=bool)
            in_node[rows] = True
            return order_f[in_node[order_f]]
        return rows[np.argsort(self.X[rows, f], kind="stable")]

    def _best_split(self, rows: np.ndarray):
        """Scan all features; (gain, feature, sorted order, position)."""
        best = None
        if rows.size < 2 * self.min_leaf:
            return None
        for f in range(self.X.shape[1]):
            node_sorted = self._node_order(rows, f)
            sv = np.ascontiguousarray(self.X[node_sorted, f])
            sg = np.ascontiguousarray(self.g[node_sorted])
            sh = np.ascontiguousarray(self.h[node_sorted])
            gain, pos = _kernels.best_split(sv, sg, sh, self.min_leaf,
                                            self.cfg.reg_lambda)
            if pos < 0 or gain <= self.cfg.min_split_gain:
                continue
            if best is None or gain > best[0]:
                thr = 0.5 * (sv[pos] + sv[pos + 1])
                best = (gain, f, node_sorted, pos, thr)
        return best

    def build(self, rows: np.ndarray) -> None:
        self.value[0] = self._leaf_value(rows)
        self.leaf_rows[0] = rows
        heap: list = []
        cand = self._best_split(rows)
        if cand is not None:
            self._counter += 1
            heapq.heappush(heap, (-cand[0], self._counter, 0, cand))
        n_leaves = 1
        while heap and n_leaves < self.cfg.max_leaves:
            _, _, node, (gain, f, ordered, pos, thr) = heapq.heappop(heap)
            # children stay index-sorted so every sort path breaks ties
            # identically
            left_rows = np.sort(ordered[:pos + 1])
            right_rows = np.sort(ordered[pos + 1:])
            li = self._add_leaf(left_rows)
            ri = self._add_leaf(right_rows)
            self.feature[node] = f
            self.threshold[node] = thr
            self.left[node] = li
            self.right[node] = ri
            del self.leaf_rows[node]
            n_leaves += 1
            for child, child_rows in ((li, left_rows), (ri, right_rows)):
                cand = self._best_split(child_rows)
                if cand is not None:
                    self._counter += 1
                    heapq.heappush(heap, (-cand[0], self._counter,
                                          child, cand))

    def _add_leaf(self, rows: np.ndarray) -> int:
        i = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(self._leaf_value(rows))
        self.leaf_rows[i] = rows
        return i

    def finish(self) -> tuple[Tree, np.ndarray]:
        tree = Tree(self.feature, self.threshold, self.left, self.right,
                    self.value)
        assign = np.empty(self.X.shape[0], dtype=np.int64)
        for leaf, rows in self.leaf_rows.items():
            assign[rows] = leaf
        return tree, assign


def _fit_tree(features, grads, hess, config: GbrtConfig, min_leaf: int,
              feature_orders=None) -> tuple[Tree, np.ndarray]:
    builder = _TreeBuilder(features, grads, hess, config, min_leaf,
                           feature_orders)
    builder.build(np.arange(features.shape[0], dtype=np.int64))
    return builder.finish()


def _presort_features(features: np.ndarray) -> list[np.ndarray]:
    return [np.argsort(features[:, f], kind="stable").astype(np.int64)
            for f in range(features.shape[1])]


def fit_tree(features, gradients, hessians, config: GbrtConfig) -> Tree:
    """Fit a single regression tree on gradient/hessian targets.

    All-zero hessians fall back to counting weights so the Newton leaf
    stays defined.
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    g = np.asarray(gradients, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("features must be a non-empty 2-d array")
    if g.shape != (features.shape[0],) or h.shape != g.shape:
        raise ShapeError("gradients/hessians must match the feature rows")
    if (h < 0).any():
        raise ValueError("hessians must be non-negative")
    if h.sum() == 0.0:
        h = np.ones_like(h)
    config.validate()
    tree, _ = _fit_tree(features, g, h, config,
                        config.resolved_min_leaf(features.shape[0]))
    return tree


def fit(features, target, config: GbrtConfig,
        round_callback=None) -> BoostedEnsemble:
    """Train a boosted ensemble.

    ``target`` is a response vector for the squared / logistic losses, or
    a callable ``provider(scores) -> (gradients, hessians)`` when the
    config selects external gradients. ``round_callback(round, scores)``
    is invoked after each boosting round with the updated raw scores.
    """
    config.validate()
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DataError("features must be a non-empty 2-d array")
    if not np.isfinite(features).all():
        raise DataError("features contain non-finite values")
    n = features.shape[0]
    min_leaf = config.resolved_min_leaf(n)

    if config.loss is Loss.EXTERNAL_GRADIENTS:
        if not callable(target):
            raise ConfigError("external-gradient fitting needs a callable "
                              "gradient provider")
        provider = target
        base = 0.0
    else:
        y = np.asarray(target, dtype=np.float64)
        if y.shape != (n,):
            raise ShapeError("targets must match the feature rows")
        if not np.isfinite(y).all():
            raise DataError("targets contain non-finite values")
        if config.loss is Loss.SQUARED_ERROR:
            base = float(y.mean())

            def provider(scores):
                return scores - y, np.ones(n)
        else:
            mean = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
            base = float(np.log(mean / (1.0 - mean)))

            def provider(scores):
                p = _sigmoid(scores)
                return p - y, p * (1.0 - p)

    scores = np.full(n, base, dtype=np.float64)
    trees: list[Tree] = []
    feature_orders = _presort_features(features)
    for round_idx in range(config.n_trees):
        g, h = provider(scores)
        g = np.asarray(g, dtype=np.float64)
        h = np.asarray(h, dtype=np.float64)
        if not (np.isfinite(g).all() and np.isfinite(h).all()):
            raise DataError("gradient provider returned non-finite values")
        if h.sum() == 0.0:
            h = np.ones(n)
        tree, assign = _fit_tree(features, g, h, config, min_leaf,
                                 feature_orders)
        scores += config.learning_rate * tree.value[assign]
        trees.append(tree)
        if round_callback is not None:
            round_callback(round_idx, scores)

    return BoostedEnsemble(trees=trees, learning_rate=config.learning_rate,
                           base_score=base, loss=config.loss,
                           n_features=features.shape[1])


def predict(ensemble: BoostedEnsemble, features) -> np.ndarray:
    """Raw ensemble scores (log-odds under the logistic loss)."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != ensemble.n_features:
        raise ShapeError(
            f"expected {ensemble.n_features} feature columns, got shape "
            f"{features.shape}")
    out = np.full(features.shape[0], ensemble.base_score, dtype=np.float64)
    if not ensemble.trees:
        return out
    total = np.zeros(features.shape[0], dtype=np.float64)
    for tree in ensemble.trees:
        total += tree.predict(features)
    return out + ensemble.learning_rate * total


def predict_proba(ensemble: BoostedEnsemble, features) -> np.ndarray:
    """Sigmoid response probabilities for a logistic-loss ensemble."""
    if ensemble.loss is not Loss.LOGISTIC:
        raise ConfigError("probabilities are only defined for the "
                          "logistic loss")
    return _sigmoid(predict(ensemble, features))
