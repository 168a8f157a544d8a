"""Incremental-gain curves (Qini / uplift families), AUUC and model comparison.

Six curve variants exist, indexed by (curve family, rank mode, count mode).
The separate/relative Qini cell does not exist; the joint/relative cell is
shared by both families. Depths are a percentage ``p`` of each group under
SEPARATE ranking and an instance count ``k`` under JOINT ranking.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .data import Partition, RankedDataset, round_half_up
from .errors import DegenerateGroupError, UnsupportedSpecError


class CurveKind(Enum):
    QINI = "qini"
    UPLIFT = "uplift"


class CountMode(Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


@dataclass(frozen=True)
class ValueFunctionSpec:
    """One cell of the curve-variant table."""

    curve: CurveKind
    rank_mode: Partition
    count_mode: CountMode

    def __post_init__(self):
        if (self.curve is CurveKind.QINI
                and self.rank_mode is Partition.SEPARATE
                and self.count_mode is CountMode.RELATIVE):
            raise UnsupportedSpecError(
                "the qini curve has no separate/relative variant")

    @property
    def label(self) -> str:
        if (self.rank_mode is Partition.JOINT
                and self.count_mode is CountMode.RELATIVE):
            return "joint-rel"  # shared by both curve families
        rank = "sep" if self.rank_mode is Partition.SEPARATE else "joint"
        count = "abs" if self.count_mode is CountMode.ABSOLUTE else "rel"
        return f"{self.curve.value}-{rank}-{count}"


_SPEC_LABELS = {
    "qini-sep-abs": (CurveKind.QINI, Partition.SEPARATE, CountMode.ABSOLUTE),
    "uplift-sep-abs": (CurveKind.UPLIFT, Partition.SEPARATE,
                       CountMode.ABSOLUTE),
    "uplift-sep-rel": (CurveKind.UPLIFT, Partition.SEPARATE,
                       CountMode.RELATIVE),
    "qini-joint-abs": (CurveKind.QINI, Partition.JOINT, CountMode.ABSOLUTE),
    "uplift-joint-abs": (CurveKind.UPLIFT, Partition.JOINT,
                         CountMode.ABSOLUTE),
    "joint-rel": (CurveKind.UPLIFT, Partition.JOINT, CountMode.RELATIVE),
}


def spec_from_label(label: str) -> ValueFunctionSpec:
    try:
        return ValueFunctionSpec(*_SPEC_LABELS[label])
    except KeyError:
        raise UnsupportedSpecError(
            f"unknown curve spec {label!r}; choose from "
            f"{', '.join(sorted(_SPEC_LABELS))}") from None


@dataclass(frozen=True)
class CurvePoint:
    x: float      # targeted fraction in (0, 1]
    value: float  # incremental gain at that depth


class Curve:
    """Sequence of curve points backed by arrays."""

    def __init__(self, x, values):
        self.x = np.asarray(x, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)

    def __len__(self):
        return len(self.x)

    def __iter__(self):
        return (CurvePoint(float(a), float(b))
                for a, b in zip(self.x, self.values))

    def __getitem__(self, i) -> CurvePoint:
        return CurvePoint(float(self.x[i]), float(self.values[i]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for xi, vi in zip(self.x, self.values):
                writer.writerow([repr(float(xi)), repr(float(vi))])

    def to_json(self) -> dict:
        return {"x": [float(v) for v in self.x],
                "value": [float(v) for v in self.values]}


@dataclass(frozen=True)
class AUUCResult:
    auuc: float       # per-fraction area (raw sum / number of points)
    auuc_raw: float   # plain sum of curve values
    spec: ValueFunctionSpec
    n_points: int


def _group_sizes(ranked: RankedDataset) -> tuple[int, int]:
    return ranked.dataset.n_treated, ranked.dataset.n_control


def _joint_curve_values(ranked: RankedDataset,
                        spec: ValueFunctionSpec) -> np.ndarray:
    """Curve values at k = 1..n for a JOINT-mode spec."""
    y = ranked.dataset.y[ranked.order]
    t = ranked.dataset.t[ranked.order]
    cum_nt = np.cumsum(t)
    cum_nc = np.cumsum(1 - t)
    cum_rt = np.cumsum(y * t).astype(np.float64)
    cum_rc = np.cumsum(y * (1 - t)).astype(np.float64)

    if spec.count_mode is CountMode.RELATIVE:
        n_t, n_c = _group_sizes(ranked)
        if n_t == 0 or n_c == 0:
            raise DegenerateGroupError(
                "joint relative curves need a non-empty treatment and "
                "control group")
        return cum_rt / n_t - cum_rc / n_c
    # absolute counts rebalance by the within-top-k group sizes; any term
    # with an empty group so far contributes zero
    if spec.curve is CurveKind.QINI:
        with np.errstate(divide="ignore", invalid="ignore"):
            adj = np.where(cum_nc > 0, cum_rc * cum_nt / cum_nc, 0.0)
        return cum_rt - adj
    with np.errstate(divide="ignore", invalid="ignore"):
        rate_t = np.where(cum_nt > 0, cum_rt / cum_nt, 0.0)
        rate_c = np.where(cum_nc > 0, cum_rc / cum_nc, 0.0)
    k = np.arange(1, len(ranked) + 1, dtype=np.float64)
    return (rate_t - rate_c) * k


def _separate_curve_values(ranked: RankedDataset, spec: ValueFunctionSpec,
                           intervals: int) -> np.ndarray:
    """Curve values at p = 1/intervals .. 1 for a SEPARATE-mode spec."""
    n_t, n_c = _group_sizes(ranked)
    needs_c = not (spec.curve is CurveKind.UPLIFT
                   and spec.count_mode is CountMode.ABSOLUTE)
    if needs_c and n_c == 0:
        raise DegenerateGroupError("spec divides by an empty control group")
    if spec.count_mode is CountMode.RELATIVE and n_t == 0:
        raise DegenerateGroupError("spec divides by an empty treatment group")

    resp_t = ranked.dataset.y[ranked.order_treated]
    resp_c = ranked.dataset.y[ranked.order_control]
    cum_t = np.concatenate(([0.0], np.cumsum(resp_t)))  # R(T, k), k = 0..|T|
    cum_c = np.concatenate(([0.0], np.cumsum(resp_c)))

    p = np.arange(1, intervals + 1, dtype=np.float64) / intervals
    k_t = np.floor(p * n_t + 0.5).astype(np.int64)
    k_c = np.floor(p * n_c + 0.5).astype(np.int64)
    r_t = cum_t[k_t]
    r_c = cum_c[k_c]

    if spec.count_mode is CountMode.RELATIVE:
        return r_t / n_t - r_c / n_c
    if spec.curve is CurveKind.QINI:
        return r_t - r_c * (n_t / n_c)
    return r_t - r_c


def build_curve(ranked: RankedDataset, spec: ValueFunctionSpec,
                intervals: int = 100) -> Curve:
    """Cumulative incremental gains as a function of targeting depth.

    JOINT mode produces one point per instance (x = k/n); SEPARATE mode
    produces ``intervals`` evenly spaced percentage points.
    """
    if ranked.partition is not spec.rank_mode:
        raise ValueError(
            f"ranking partition {ranked.partition.value} does not match "
            f"spec rank mode {spec.rank_mode.value}")
    if spec.rank_mode is Partition.JOINT:
        n = len(ranked)
        if n == 0:
            return Curve([], [])
        values = _joint_curve_values(ranked, spec)
        x = np.arange(1, n + 1, dtype=np.float64) / n
    else:
        values = _separate_curve_values(ranked, spec, intervals)
        x = np.arange(1, intervals + 1, dtype=np.float64) / intervals
    return Curve(x, values)


def value_at(ranked: RankedDataset, spec: ValueFunctionSpec, depth) -> float:
    """Value function at one depth: integer k (JOINT) or fraction p (SEPARATE).

    Group sizes ``p*|T|`` and ``p*|C|`` are rounded half-up; absolute joint
    variants define zero-denominator terms as zero.
    """
    if ranked.partition is not spec.rank_mode:
        raise ValueError(
            f"ranking partition {ranked.partition.value} does not match "
            f"spec rank mode {spec.rank_mode.value}")
    if spec.rank_mode is Partition.JOINT:
        k = int(depth)
        if not 1 <= k <= len(ranked):
            raise ValueError(f"k={k} out of range")
        return float(_joint_curve_values(ranked, spec)[k - 1])
    p = float(depth)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"depth p={p} must be in (0, 1]")
    n_t, n_c = _group_sizes(ranked)
    needs_c = not (spec.curve is CurveKind.UPLIFT
                   and spec.count_mode is CountMode.ABSOLUTE)
    if needs_c and n_c == 0:
        raise DegenerateGroupError("spec divides by an empty control group")
    if spec.count_mode is CountMode.RELATIVE and n_t == 0:
        raise DegenerateGroupError("spec divides by an empty treatment group")
    k_t = round_half_up(p * n_t)
    k_c = round_half_up(p * n_c)
    r_t = float(ranked.dataset.y[ranked.order_treated[:k_t]].sum())
    r_c = float(ranked.dataset.y[ranked.order_control[:k_c]].sum())
    if spec.count_mode is CountMode.RELATIVE:
        return r_t / n_t - r_c / n_c
    if spec.curve is CurveKind.QINI:
        return r_t - r_c * (n_t / n_c)
    return r_t - r_c


def auuc(ranked: RankedDataset, spec: ValueFunctionSpec,
         intervals: int = 100) -> AUUCResult:
    """Area under the curve: exact sum over k (JOINT) or the interval
    approximation (SEPARATE), reported both raw and as a per-fraction area.
    """
    curve = build_curve(ranked, spec, intervals)
    raw = float(curve.values.sum())
    n_points = len(curve)
    return AUUCResult(auuc=raw / n_points if n_points else 0.0,
                      auuc_raw=raw, spec=spec, n_points=n_points)


def auuc_at_cutoff(ranked: RankedDataset, spec: ValueFunctionSpec,
                   fraction: float, intervals: int = 100) -> float:
    """Partial per-fraction area up to a targeting depth.

    The truncated sum is normalised by the full point count, so values at
    different cutoffs share a scale and grow toward the full AUUC.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    curve = build_curve(ranked, spec, intervals)
    n_points = len(curve)
    if n_points == 0:
        return 0.0
    k = min(max(round_half_up(fraction * n_points), 1), n_points)
    return float(curve.values[:k].sum()) / n_points


def random_baseline(ranked: RankedDataset, spec: ValueFunctionSpec,
                    intervals: int = 100) -> Curve:
    """Expected gains under random targeting: the chord from the origin to
    the full-depth value, sampled on the curve's own grid."""
    curve = build_curve(ranked, spec, intervals)
    if len(curve) == 0:
        return curve
    full = curve.values[-1]
    return Curve(curve.x, curve.x * full)


@dataclass(frozen=True)
class TTestResult:
    significant: bool
    p_value: float
    statistic: float


def paired_t_test(samples_a, samples_b, alpha: float = 0.05) -> TTestResult:
    """Two-sided paired Student's t-test.

    Zero-variance differences are handled explicitly: identical samples
    give p = 1.0, a constant non-zero shift gives p = 0.0.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("samples must be 1-d arrays of equal length")
    if a.size < 2:
        raise ValueError("need at least 2 paired samples")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        mean = float(d.mean())
        if mean == 0.0:
            return TTestResult(False, 1.0, 0.0)
        return TTestResult(True, 0.0, np.inf if mean > 0 else -np.inf)
    t = float(d.mean() / (sd / np.sqrt(d.size)))
    p = float(2.0 * stats.t.sf(abs(t), d.size - 1))
    return TTestResult(p < alpha, p, t)


def equivalence_check_qini_uplift_separate(ranked: RankedDataset,
                                           intervals: int = 100) -> float:
    """Max gap between the scaled separate Qini curve and the separate
    relative uplift curve; identical up to a constant factor, so the gap
    should vanish (<= 1e-9)."""
    n_t, n_c = _group_sizes(ranked)
    if n_t == 0 or n_c == 0:
        raise DegenerateGroupError("equivalence check needs both groups")
    qini = build_curve(ranked, ValueFunctionSpec(
        CurveKind.QINI, Partition.SEPARATE, CountMode.ABSOLUTE), intervals)
    rel = build_curve(ranked, ValueFunctionSpec(
        CurveKind.UPLIFT, Partition.SEPARATE, CountMode.RELATIVE), intervals)
    return float(np.max(np.abs(qini.values / n_t - rel.values)))


def auuc_record(dataset: str, model: str, spec: ValueFunctionSpec,
                samples) -> dict:
    """JSON-ready AUUC table record aggregating repeated runs."""
    samples = np.asarray(samples, dtype=np.float64)
    return {
        "dataset": dataset,
        "model": model,
        "spec": spec.label,
        "auuc": float(samples.mean()),
        "runs": int(samples.size),
        "std": float(samples.std(ddof=1)) if samples.size > 1 else 0.0,
    }


def write_auuc_records(records, path) -> None:
    with open(path, "w") as fh:
        json.dump(list(records), fh, indent=2, sort_keys=True)
