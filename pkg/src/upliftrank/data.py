"""Dataset containers, category labeling, counting primitives and ingestion.

Everything here is a pure function over immutable inputs; datasets are
shareable read-only values.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

import numpy as np

from .errors import DataError, IngestionError, ShapeError


class Category(IntEnum):
    """Joint (treatment, response) cell of an instance."""

    TR = 0   # treated responder        (t=1, y=1)
    TNR = 1  # treated non-responder    (t=1, y=0)
    CR = 2   # control responder        (t=0, y=1)
    CNR = 3  # control non-responder    (t=0, y=0)


class Partition(Enum):
    """Whether treated and control are ranked as one list or two."""

    JOINT = "joint"
    SEPARATE = "separate"


@dataclass(frozen=True)
class UpliftInstance:
    """One observation: feature vector, binary response, binary treatment."""

    features: np.ndarray
    y: int
    t: int


class UpliftDataset:
    """Feature matrix plus binary response and treatment flags.

    Parameters
    ----------
    features : array of shape (n, d)
    y : binary response vector, values in {0, 1}
    t : binary treatment flags, values in {0, 1}
    feature_names : optional column names, length d
    """

    def __init__(self, features, y, t, feature_names=None):
        features = np.ascontiguousarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ShapeError("features must be a 2-d array")
        y = np.asarray(y, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        n = features.shape[0]
        if y.shape != (n,) or t.shape != (n,):
            raise ShapeError(
                f"features ({n} rows), y ({y.shape}) and t ({t.shape}) "
                "must have matching lengths")
        for name, arr in (("y", y), ("t", t)):
            bad = ~np.isin(arr, (0, 1))
            if bad.any():
                raise DataError(
                    f"{name} must be binary; found {arr[bad][0]} at "
                    f"index {int(np.argmax(bad))}")
        if not np.isfinite(features).all():
            raise DataError("features contain non-finite values")
        self.features = features
        self.y = y
        self.t = t
        self.feature_names = (list(feature_names) if feature_names is not None
                              else [f"x{i}" for i in range(features.shape[1])])

    def __len__(self):
        return self.features.shape[0]

    def __getitem__(self, i) -> UpliftInstance:
        return UpliftInstance(self.features[i], int(self.y[i]), int(self.t[i]))

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.t.sum())

    @property
    def n_control(self) -> int:
        return len(self) - self.n_treated

    @property
    def instances(self) -> list[UpliftInstance]:
        return [self[i] for i in range(len(self))]

    def categories(self) -> np.ndarray:
        """Category code per instance (vectorised ``categorize``)."""
        return categorize_array(self.y, self.t)

    def subset(self, indices) -> "UpliftDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return UpliftDataset(self.features[indices], self.y[indices],
                             self.t[indices], self.feature_names)


def categorize(instance: UpliftInstance) -> Category:
    """Map an instance to its (treatment, response) category."""
    if instance.t == 1:
        return Category.TR if instance.y == 1 else Category.TNR
    return Category.CR if instance.y == 1 else Category.CNR


def categorize_array(y, t) -> np.ndarray:
    y = np.asarray(y)
    t = np.asarray(t)
    out = np.where(t == 1,
                   np.where(y == 1, Category.TR, Category.TNR),
                   np.where(y == 1, Category.CR, Category.CNR))
    return out.astype(np.int64)


class RankedDataset:
    """A dataset together with a strict score ordering.

    The joint ordering sorts all instances by score descending, ties broken
    by original index ascending. Under the SEPARATE partition the treated
    and control sub-orderings are stored as well (each is the restriction
    of the joint ordering to its group).
    """

    def __init__(self, dataset: UpliftDataset, scores, partition: Partition):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != (len(dataset),):
            raise ShapeError(
                f"scores length {scores.shape} does not match dataset "
                f"size {len(dataset)}")
        if scores.size and not np.isfinite(scores).all():
            raise DataError("scores contain non-finite values")
        self.dataset = dataset
        self.scores = scores
        self.partition = Partition(partition)
        self.order = np.argsort(-scores, kind="stable")
        in_treated = dataset.t[self.order] == 1
        self.order_treated = self.order[in_treated]
        self.order_control = self.order[~in_treated]

    def __len__(self):
        return len(self.dataset)

    def group_order(self, group: str) -> np.ndarray:
        if group == "T":
            return self.order_treated
        if group == "C":
            return self.order_control
        raise ValueError(f"group must be 'T' or 'C', got {group!r}")


def rank_by_scores(dataset: UpliftDataset, scores,
                   partition: Partition = Partition.JOINT) -> RankedDataset:
    """Order a dataset by model score, descending, with deterministic ties."""
    return RankedDataset(dataset, scores, partition)


def _check_k(k: int, n: int, what: str = "dataset") -> None:
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {what} of size {n}")


def count_treated(ranked: RankedDataset, k: int) -> int:
    """Number of treated instances among the top-k of the joint ordering."""
    _check_k(k, len(ranked))
    return int(ranked.dataset.t[ranked.order[:k]].sum())


def count_control(ranked: RankedDataset, k: int) -> int:
    """Number of control instances among the top-k of the joint ordering."""
    _check_k(k, len(ranked))
    return k - count_treated(ranked, k)


def count_responders_joint(ranked: RankedDataset, k: int, group: str) -> int:
    """Responders of one group among the top-k of the joint ordering."""
    if ranked.partition is not Partition.JOINT:
        raise ValueError("joint responder counts need a JOINT ranking")
    _check_k(k, len(ranked))
    top = ranked.order[:k]
    y = ranked.dataset.y[top]
    t = ranked.dataset.t[top]
    if group == "T":
        return int(((y == 1) & (t == 1)).sum())
    if group == "C":
        return int(((y == 1) & (t == 0)).sum())
    raise ValueError(f"group must be 'T' or 'C', got {group!r}")


def count_responders_separate(ranked: RankedDataset, k: int,
                              group: str) -> int:
    """Responders among the top-k of one group's own ordering."""
    if ranked.partition is not Partition.SEPARATE:
        raise ValueError("separate responder counts need a SEPARATE ranking")
    order = ranked.group_order(group)
    _check_k(k, len(order), what=f"group {group}")
    return int(ranked.dataset.y[order[:k]].sum())


def round_half_up(x: float) -> int:
    """Deterministic round-half-up used for fractional group sizes."""
    return int(np.floor(x + 0.5))


def split_train_test(dataset: UpliftDataset, fraction: float,
                     seed: int) -> tuple[UpliftDataset, UpliftDataset]:
    """Random split, stratified jointly on (y, t).

    Each of the four categories keeps its proportion within one instance
    (largest-remainder allocation against a fixed train-size target).
    Categories with fewer than two members fall back to a pooled,
    non-stratified allocation with a warning. Deterministic given seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(dataset)
    if n < 2:
        raise DataError("cannot split a dataset with fewer than 2 instances")
    target_train = min(max(round_half_up(fraction * n), 1), n - 1)

    cats = dataset.categories()
    strata: list[np.ndarray] = []
    pooled: list[np.ndarray] = []
    for c in range(4):
        idx = np.nonzero(cats == c)[0]
        if idx.size == 0:
            continue
        if idx.size < 2:
            pooled.append(idx)
        else:
            strata.append(idx)
    if pooled:
        warnings.warn("categories with fewer than 2 members are split "
                      "without stratification", stacklevel=2)
        strata.append(np.concatenate(pooled))

    sizes = np.array([s.size for s in strata], dtype=np.float64)
    quotas = fraction * sizes
    take = np.floor(quotas).astype(np.int64)
    remainder = quotas - take
    extra = target_train - int(take.sum())
    if extra > 0:
        # assign leftovers by largest remainder, ties to earlier strata
        order = np.argsort(-remainder, kind="stable")
        take[order[:extra]] += 1

    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for stratum, n_take in zip(strata, take):
        perm = rng.permutation(stratum)
        train_idx.append(perm[:n_take])
        test_idx.append(perm[n_take:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return dataset.subset(train), dataset.subset(test)


def _parse_binary(raw: str, column: str, row: int) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise IngestionError(
            f"row {row}: cannot parse {column}={raw!r} as a number") from None
    if value not in (0.0, 1.0):
        raise IngestionError(
            f"row {row}: {column} must be 0 or 1, got {raw!r}")
    return int(value)


def load_csv(path, treatment_column: str, response_column: str,
             feature_columns="auto", encoding_map_path=None) -> UpliftDataset:
    """Load a dataset from a headered CSV file.

    ``feature_columns`` is either a list of column names or ``"auto"``,
    which selects every remaining column whose values all parse as
    numbers. Explicitly listed non-numeric columns are one-hot encoded
    (categories sorted); the resulting column layout is written to a JSON
    sidecar (``<input>.encoding.json`` unless overridden) so encodings are
    auditable and reusable.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    col_of = {name: i for i, name in enumerate(header)}
    for required in (treatment_column, response_column):
        if required not in col_of:
            raise IngestionError(
                f"{path}: missing column {required!r} "
                f"(available: {', '.join(header)})")

    auto = feature_columns == "auto"
    if auto:
        candidates = [h for h in header
                      if h not in (treatment_column, response_column)]
    else:
        candidates = list(feature_columns)
        for name in candidates:
            if name not in col_of:
                raise IngestionError(f"{path}: missing feature column "
                                     f"{name!r}")

    # a column is numeric when every cell parses, categorical when none
    # does; a mix of the two is treated as corruption, not a category
    numeric: dict[str, bool] = {}
    for name in candidates:
        j = col_of[name]
        parsed = 0
        first_bad = None
        for i, row in enumerate(rows, start=1):
            try:
                float(row[j])
                parsed += 1
            except (ValueError, IndexError):
                if first_bad is None:
                    first_bad = i
        if first_bad is None:
            numeric[name] = True
        elif parsed == 0:
            numeric[name] = False
        elif auto:
            numeric[name] = None  # mixed; skipped under auto selection
        else:
            raise IngestionError(
                f"row {first_bad}: cannot parse {name}="
                f"{rows[first_bad - 1][j]!r} as a number")

    if auto:
        used = [c for c in candidates if numeric[c] is True]
    else:
        used = candidates

    one_hot: dict[str, list[str]] = {}
    feature_names: list[str] = []
    for name in used:
        if numeric[name]:
            feature_names.append(name)
        else:
            levels = sorted({row[col_of[name]] for row in rows})
            one_hot[name] = levels
            feature_names.extend(f"{name}={lv}" for lv in levels)

    n, d = len(rows), len(feature_names)
    features = np.zeros((n, d), dtype=np.float64)
    y = np.zeros(n, dtype=np.int64)
    t = np.zeros(n, dtype=np.int64)
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise IngestionError(
                f"row {i}: expected {len(header)} fields, got {len(row)}")
        t[i - 1] = _parse_binary(row[col_of[treatment_column]],
                                 treatment_column, i)
        y[i - 1] = _parse_binary(row[col_of[response_column]],
                                 response_column, i)
        j_out = 0
        for name in used:
            raw = row[col_of[name]]
            if numeric[name]:
                try:
                    features[i - 1, j_out] = float(raw)
                except ValueError:
                    raise IngestionError(
                        f"row {i}: cannot parse {name}={raw!r} "
                        "as a number") from None
                j_out += 1
            else:
                levels = one_hot[name]
                features[i - 1, j_out + levels.index(raw)] = 1.0
                j_out += len(levels)

    if n == 0:
        warnings.warn(f"{path}: no data rows, returning an empty dataset",
                      stacklevel=2)

    sidecar = (Path(encoding_map_path) if encoding_map_path is not None
               else path.with_suffix(path.suffix + ".encoding.json"))
    with open(sidecar, "w") as fh:
        json.dump({"source": path.name,
                   "treatment_column": treatment_column,
                   "response_column": response_column,
                   "features": feature_names,
                   "one_hot": one_hot}, fh, indent=2, sort_keys=True)

    return UpliftDataset(features, y, t, feature_names)
