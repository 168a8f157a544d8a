"""Graded relevance assignment for ranking instances by treatment value.

Each (treatment, response) category maps to a relevance grade. Three
absolute schemes use fixed grades; the relative scheme scales responder
grades by the group sizes so that position-weighted gains reproduce the
relative uplift curve exactly.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .data import Category, Partition, UpliftDataset
from .errors import DegenerateGroupError
from .metrics import Query


class RelevanceScheme(Enum):
    ABS1 = "abs1"  # responders-and-control-non-responders positive, binary
    ABS2 = "abs2"  # signed: treated responder +1, control responder -1
    ABS3 = "abs3"  # ordinal 3/2/1/0 preference over the four categories
    REL = "rel"    # +1/|T| and -1/|C| responder grades

    @classmethod
    def from_label(cls, label: str) -> "RelevanceScheme":
        return cls(label.lower())


_ABSOLUTE_VALUES = {
    RelevanceScheme.ABS1: {Category.TR: 1.0, Category.TNR: 0.0,
                           Category.CR: 0.0, Category.CNR: 1.0},
    RelevanceScheme.ABS2: {Category.TR: 1.0, Category.TNR: 0.0,
                           Category.CR: -1.0, Category.CNR: 0.0},
    RelevanceScheme.ABS3: {Category.TR: 3.0, Category.TNR: 1.0,
                           Category.CR: 0.0, Category.CNR: 2.0},
}


def scheme_values(scheme: RelevanceScheme, n_treated: int | None = None,
                  n_control: int | None = None) -> dict[Category, float]:
    """Relevance grade per category under a scheme."""
    if scheme is not RelevanceScheme.REL:
        return dict(_ABSOLUTE_VALUES[scheme])
    if not n_treated or not n_control:
        raise DegenerateGroupError(
            "relative relevance needs non-empty treatment and control "
            "groups")
    return {Category.TR: 1.0 / n_treated, Category.TNR: 0.0,
            Category.CR: -1.0 / n_control, Category.CNR: 0.0}


def qini_scaled_values(n_treated: int, n_control: int) -> dict[Category, float]:
    """Relative grades rescaled by |T| (TR -> 1, CR -> -|T|/|C|).

    An alias of the relative scheme up to a positive factor; rankings
    optimised under either coincide.
    """
    base = scheme_values(RelevanceScheme.REL, n_treated, n_control)
    return {cat: v * n_treated for cat, v in base.items()}


def relevance_of(dataset: UpliftDataset,
                 scheme: RelevanceScheme) -> np.ndarray:
    """Relevance grade per instance."""
    values = scheme_values(scheme, dataset.n_treated, dataset.n_control)
    table = np.array([values[Category(c)] for c in range(4)])
    return table[dataset.categories()]


def assign_relevance(dataset: UpliftDataset, scheme: RelevanceScheme,
                     partition: Partition):
    """Build ranking queries carrying per-instance relevance grades.

    SEPARATE returns a (treated, control) query pair, each over its own
    instances; JOINT returns a single query over the whole dataset.
    Cutoffs default to the full query length.
    """
    rel = relevance_of(dataset, scheme)
    if partition is Partition.JOINT:
        idx = np.arange(len(dataset), dtype=np.int64)
        return Query("all", dataset.features, rel, cutoff=len(dataset),
                     indices=idx)
    treated = np.nonzero(dataset.t == 1)[0]
    control = np.nonzero(dataset.t == 0)[0]
    q_t = Query("T", dataset.features[treated], rel[treated],
                cutoff=treated.size, indices=treated)
    q_c = Query("C", dataset.features[control], rel[control],
                cutoff=control.size, indices=control)
    return q_t, q_c


def flipped_label(dataset: UpliftDataset) -> np.ndarray:
    """Class-transformation target: 1 for treated responders and control
    non-responders, 0 otherwise."""
    cats = dataset.categories()
    return ((cats == Category.TR) | (cats == Category.CNR)).astype(np.int64)
