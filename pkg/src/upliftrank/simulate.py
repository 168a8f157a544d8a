"""Synthetic treatment/control populations with a known uplift structure.

Responses are drawn per group at fixed rates; an uplift score is then
drawn uniformly from a range determined by the instance category.
Treated responders and control non-responders draw from the high range,
the other two categories from the low range, so the "right" instances
tend to rank first. Three standard scenarios vary only the group-size
imbalance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Partition, RankedDataset, UpliftDataset, rank_by_scores


@dataclass(frozen=True)
class ScenarioSpec:
    n_treated: int
    n_control: int
    p_response_treated: float = 0.07
    p_response_control: float = 0.05
    high_range: tuple[float, float] = (0.2, 1.0)  # TR and CNR
    low_range: tuple[float, float] = (0.0, 0.8)   # TNR and CR
    seed: int = 0

    def __post_init__(self):
        if self.n_treated < 1 or self.n_control < 1:
            raise ValueError("group sizes must be >= 1")
        for p in (self.p_response_treated, self.p_response_control):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"response rate {p} outside [0, 1]")
        for lo, hi in (self.high_range, self.low_range):
            if lo > hi:
                raise ValueError("score range bounds must be ordered")


def _group_draws(seed: int, stream: int, size: int, p_response: float,
                 responder_range, nonresponder_range):
    # one uniform pair per instance, row-major, so instance i draws the
    # same numbers in every scenario that includes it
    rng = np.random.default_rng([seed, stream])
    u = rng.random((size, 2))
    y = (u[:, 0] < p_response).astype(np.int64)
    lo_r, hi_r = responder_range
    lo_n, hi_n = nonresponder_range
    lo = np.where(y == 1, lo_r, lo_n)
    hi = np.where(y == 1, hi_r, hi_n)
    scores = lo + u[:, 1] * (hi - lo)
    return y, scores


def simulate(spec: ScenarioSpec,
             partition: Partition = Partition.JOINT) -> RankedDataset:
    """Draw a population and rank it by its synthetic uplift score.

    The score doubles as the single feature column so simulated data can
    flow through the same training/evaluation pipeline as real data.
    Group draws use split substreams and instances are stored in a
    seed-determined shuffled order.
    """
    y_t, s_t = _group_draws(spec.seed, 1, spec.n_treated,
                            spec.p_response_treated,
                            spec.high_range, spec.low_range)
    y_c, s_c = _group_draws(spec.seed, 0, spec.n_control,
                            spec.p_response_control,
                            spec.low_range, spec.high_range)
    y = np.concatenate([y_t, y_c])
    t = np.concatenate([np.ones(spec.n_treated, dtype=np.int64),
                        np.zeros(spec.n_control, dtype=np.int64)])
    scores = np.concatenate([s_t, s_c])

    shuffle = np.random.default_rng([spec.seed, 2]).permutation(y.size)
    y, t, scores = y[shuffle], t[shuffle], scores[shuffle]
    dataset = UpliftDataset(scores[:, None], y, t, feature_names=["score"])
    return rank_by_scores(dataset, scores, partition)


def standard_scenarios(base_n: int, seed: int) -> tuple[ScenarioSpec, ...]:
    """Balanced, treated-heavy (9:1) and control-heavy (1:9) scenarios
    with roughly equal totals."""
    if base_n < 10:
        raise ValueError("base_n must be >= 10")
    minority = round(2 * base_n / 10)
    return (
        ScenarioSpec(base_n, base_n, seed=seed),
        ScenarioSpec(9 * minority, minority, seed=seed),
        ScenarioSpec(minority, 9 * minority, seed=seed),
    )


SCENARIO_NAMES = ("balanced", "treated-heavy", "control-heavy")


def scenario_by_name(name: str, base_n: int, seed: int) -> ScenarioSpec:
    try:
        return standard_scenarios(base_n, seed)[SCENARIO_NAMES.index(name)]
    except ValueError:
        raise ValueError(f"unknown scenario {name!r}; choose from "
                         f"{', '.join(SCENARIO_NAMES)}") from None


def write_csv(ranked: RankedDataset, path) -> None:
    """Emit a simulated population as a loadable CSV with a score column."""
    path = Path(path)
    ds = ranked.dataset
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "t", "score"])
        for i in range(len(ds)):
            writer.writerow([int(ds.y[i]), int(ds.t[i]),
                             repr(float(ranked.scores[i]))])
