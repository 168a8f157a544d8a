"""Pointwise uplift scorers built on the boosted-tree engine.

Three classic constructions: label flipping (one classifier on a
transformed target), two separate group response models, and a single
model over treatment-dummy-augmented features.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import UpliftDataset
from .errors import (ConfigError, DegenerateGroupError, DegenerateLabelError,
                     ShapeError)
from .gbrt import BoostedEnsemble, GbrtConfig, Loss, predict_proba
from .gbrt import fit as fit_ensemble
from .relevance import flipped_label


class ScorerKind(Enum):
    FLIPPED_LABEL = "flipped"
    TWO_MODEL = "two-model"
    DUMMY_TREATMENT = "dummy"


@dataclass
class UpliftScorer:
    """A fitted pointwise model mapping features to an uplift score
    (higher = more persuadable)."""

    kind: ScorerKind
    ensembles: dict[str, BoostedEnsemble]
    n_features: int

    def to_dict(self) -> dict:
        return {"kind": self.kind.value,
                "n_features": self.n_features,
                "ensembles": {name: e.to_dict()
                              for name, e in self.ensembles.items()}}

    @classmethod
    def from_dict(cls, payload: dict) -> "UpliftScorer":
        return cls(kind=ScorerKind(payload["kind"]),
                   ensembles={name: BoostedEnsemble.from_dict(e)
                              for name, e in payload["ensembles"].items()},
                   n_features=int(payload["n_features"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "UpliftScorer":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _logistic_config(config: GbrtConfig) -> GbrtConfig:
    if config.loss is Loss.EXTERNAL_GRADIENTS:
        raise ConfigError("pointwise scorers need a probabilistic loss")
    return GbrtConfig(n_trees=config.n_trees,
                      learning_rate=config.learning_rate,
                      max_leaves=config.max_leaves,
                      min_instances_per_leaf=config.min_instances_per_leaf,
                      loss=Loss.LOGISTIC,
                      reg_lambda=config.reg_lambda,
                      min_split_gain=config.min_split_gain)


def fit_flipped_label(dataset: UpliftDataset,
                      config: GbrtConfig) -> UpliftScorer:
    """Classifier on the flipped target; the score is the predicted
    probability of the transformed positive class.

    The transformation is exact only under a balanced treatment split;
    it is nevertheless commonly applied to imbalanced data, so group
    shares are not reweighted here.
    """
    z = flipped_label(dataset)
    if len(np.unique(z)) < 2:
        raise DegenerateLabelError(
            "flipped label collapsed to a single class")
    ensemble = fit_ensemble(dataset.features, z.astype(np.float64),
                            _logistic_config(config))
    return UpliftScorer(ScorerKind.FLIPPED_LABEL, {"main": ensemble},
                        dataset.n_features)


def fit_two_model(dataset: UpliftDataset,
                  config: GbrtConfig) -> UpliftScorer:
    """Separate response models per group; score is the probability gap."""
    if dataset.n_treated == 0 or dataset.n_control == 0:
        raise DegenerateGroupError(
            "two-model fitting needs both treated and control instances")
    cfg = _logistic_config(config)
    treated = np.nonzero(dataset.t == 1)[0]
    control = np.nonzero(dataset.t == 0)[0]
    e_t = fit_ensemble(dataset.features[treated],
                       dataset.y[treated].astype(np.float64), cfg)
    e_c = fit_ensemble(dataset.features[control],
                       dataset.y[control].astype(np.float64), cfg)
    return UpliftScorer(ScorerKind.TWO_MODEL,
                        {"treated": e_t, "control": e_c},
                        dataset.n_features)


def _expand_dummy(features: np.ndarray, dummy: np.ndarray) -> np.ndarray:
    # layout: original features, the dummy, then dummy-feature products
    return np.hstack([features, dummy[:, None], features * dummy[:, None]])


def fit_dummy_treatment(dataset: UpliftDataset,
                        config: GbrtConfig) -> UpliftScorer:
    """One response model over features augmented with a treatment dummy
    and dense dummy-feature interactions; scoring contrasts the dummy at
    1 (interactions active) against 0 (interactions zeroed)."""
    if dataset.n_treated == 0 or dataset.n_control == 0:
        raise DegenerateGroupError(
            "dummy-treatment fitting needs both treated and control "
            "instances")
    augmented = _expand_dummy(dataset.features,
                              dataset.t.astype(np.float64))
    ensemble = fit_ensemble(augmented, dataset.y.astype(np.float64),
                            _logistic_config(config))
    return UpliftScorer(ScorerKind.DUMMY_TREATMENT, {"main": ensemble},
                        dataset.n_features)


def score(scorer: UpliftScorer, dataset: UpliftDataset) -> np.ndarray:
    """Uplift scores for every instance of a dataset."""
    features = dataset.features
    if features.shape[1] != scorer.n_features:
        raise ShapeError(
            f"scorer expects {scorer.n_features} features, dataset has "
            f"{features.shape[1]}")
    if scorer.kind is ScorerKind.FLIPPED_LABEL:
        return predict_proba(scorer.ensembles["main"], features)
    if scorer.kind is ScorerKind.TWO_MODEL:
        return (predict_proba(scorer.ensembles["treated"], features)
                - predict_proba(scorer.ensembles["control"], features))
    ones = np.ones(features.shape[0])
    zeros = np.zeros(features.shape[0])
    as_treated = _expand_dummy(features, ones)
    as_control = _expand_dummy(features, zeros)
    main = scorer.ensembles["main"]
    return predict_proba(main, as_treated) - predict_proba(main, as_control)
