"""Batch experiment protocol: repeated splits, training, evaluation and
aggregation into a deterministic report.

Each repeat draws a fresh stratified split (seed + repeat index), trains
every configured model on the train side and evaluates every curve spec
on the test side. Models share splits within a repeat, so significance
tests against the reference model are paired over repeats. A failing
model marks its rows as failed without aborting the sweep.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import UpliftScorer, fit_dummy_treatment, \
    fit_flipped_label, fit_two_model, score as baseline_score
from .data import Partition, UpliftDataset, load_csv, rank_by_scores, \
    split_train_test
from .errors import ConfigError, DataError, UnsupportedSpecError
from .evaluation import auuc, auuc_at_cutoff, build_curve, \
    paired_t_test, spec_from_label
from .gbrt import BoostedEnsemble, GbrtConfig, Loss
from .lambdamart import LambdaConfig, predict_scores, train as train_ranker
from .metrics import MetricKind
from .relevance import RelevanceScheme

_METRIC_LABELS = {"map": MetricKind.MAP, "dcg": MetricKind.DCG1,
                  "ndcg": MetricKind.NDCG, "pcg": MetricKind.PCG}
_BASELINE_KINDS = {"flipped", "two-model", "dummy"}


def metric_from_label(label: str) -> MetricKind:
    try:
        return _METRIC_LABELS[label.lower()]
    except KeyError:
        raise ConfigError(f"unknown metric {label!r}; choose from "
                          f"{', '.join(sorted(_METRIC_LABELS))}") from None


@dataclass
class ModelSpec:
    """One model entry of an experiment."""

    name: str
    kind: str                      # flipped | two-model | dummy | lambdamart
    metric: str = "pcg"            # lambdamart only
    relevance: str = "rel"         # lambdamart only
    setting: str = "separate"      # lambdamart only
    cutoff: float = 1.0            # lambdamart only
    trees: int = 500
    learning_rate: float = 0.01
    max_leaves: int = 16
    min_instances_per_leaf: int | None = None
    sigma: float = 1.0

    def validate(self) -> None:
        if self.kind not in _BASELINE_KINDS | {"lambdamart"}:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.kind == "lambdamart":
            metric_from_label(self.metric)
            RelevanceScheme.from_label(self.relevance)
            Partition(self.setting)
            if not 0.0 < self.cutoff <= 1.0:
                raise ConfigError("cutoff must be in (0, 1]")

    def gbrt_config(self, loss: Loss) -> GbrtConfig:
        return GbrtConfig(n_trees=self.trees,
                          learning_rate=self.learning_rate,
                          max_leaves=self.max_leaves,
                          min_instances_per_leaf=self.min_instances_per_leaf,
                          loss=loss)


@dataclass
class ExperimentConfig:
    data_path: str
    models: list[ModelSpec]
    treatment_col: str = "t"
    response_col: str = "y"
    feature_cols: object = "auto"   # "auto" or list of column names
    reference: str | None = None    # defaults to the first model
    repeats: int = 10
    seed: int = 0
    train_fraction: float = 0.5
    eval_specs: list[str] = field(
        default_factory=lambda: ["uplift-sep-rel", "joint-rel"])
    cutoffs: list[float] = field(
        default_factory=lambda: [0.1, 0.3, 0.5, 1.0])
    intervals: int = 100
    alpha: float = 0.05
    out_dir: str = "results"

    def validate(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.models:
            raise ConfigError("at least one model is required")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigError("model names must be unique")
        for m in self.models:
            m.validate()
        if self.reference is not None and self.reference not in names:
            raise ConfigError(f"reference model {self.reference!r} is not "
                              "in the model list")
        for label in self.eval_specs:
            try:
                spec_from_label(label)
            except UnsupportedSpecError as exc:
                raise ConfigError(str(exc)) from None
        for c in self.cutoffs:
            if not 0.0 < c <= 1.0:
                raise ConfigError("cutoff fractions must be in (0, 1]")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")

    @property
    def reference_name(self) -> str:
        return self.reference or self.models[0].name

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["models"] = [asdict(m) for m in self.models]
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        models = [ModelSpec(**m) for m in payload.pop("models")]
        return cls(models=models, **payload)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            return cls.from_dict(payload)
        except TypeError as exc:
            raise ConfigError(f"bad config {path}: {exc}") from None


class FittedModel:
    """Uniform scoring wrapper over the two model families."""

    def __init__(self, kind: str, payload):
        self.kind = kind
        self.payload = payload  # UpliftScorer or BoostedEnsemble

    def score(self, dataset: UpliftDataset) -> np.ndarray:
        if self.kind == "lambdamart":
            return predict_scores(self.payload, dataset)
        return baseline_score(self.payload, dataset)

    def to_dict(self) -> dict:
        if self.kind == "lambdamart":
            return {"kind": "lambdamart",
                    "ensemble": self.payload.to_dict()}
        return self.payload.to_dict()

    @classmethod
    def from_dict(cls, payload: dict) -> "FittedModel":
        if payload["kind"] == "lambdamart":
            return cls("lambdamart",
                       BoostedEnsemble.from_dict(payload["ensemble"]))
        scorer = UpliftScorer.from_dict(payload)
        return cls(scorer.kind.value, scorer)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "FittedModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_model(spec: ModelSpec, train: UpliftDataset,
              trace_callback=None) -> FittedModel:
    if spec.kind == "lambdamart":
        config = LambdaConfig(
            metric=metric_from_label(spec.metric),
            cutoff_fraction=spec.cutoff,
            sigma=spec.sigma,
            gbrt=spec.gbrt_config(Loss.EXTERNAL_GRADIENTS))
        ensemble = train_ranker(train,
                                RelevanceScheme.from_label(spec.relevance),
                                Partition(spec.setting), config,
                                trace_callback=trace_callback)
        return FittedModel("lambdamart", ensemble)
    gcfg = spec.gbrt_config(Loss.LOGISTIC)
    if spec.kind == "flipped":
        return FittedModel("flipped", fit_flipped_label(train, gcfg))
    if spec.kind == "two-model":
        return FittedModel("two-model", fit_two_model(train, gcfg))
    return FittedModel("dummy", fit_dummy_treatment(train, gcfg))


@dataclass
class ReportRow:
    model: str
    spec: str
    failed: bool
    error: str | None
    samples: list[float]
    auuc_mean: float | None
    auuc_std: float | None
    auuc_min: float | None
    auuc_max: float | None
    auuc_at_cutoff: dict[str, float]
    p_value_vs_reference: float | None
    significant: bool | None


@dataclass
class CurveBand:
    x: list[float]
    mean: list[float]
    min: list[float]
    max: list[float]
    baseline: list[float]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    dataset_name: str
    n_instances: int
    rows: list[ReportRow]
    curves: dict[str, dict[str, CurveBand]]  # model -> spec label -> band

    def to_dict(self) -> dict:
        config = self.config.to_dict()
        config.pop("out_dir")  # output location is not part of the result
        return {
            "config": config,
            "dataset": self.dataset_name,
            "n_instances": self.n_instances,
            "rows": [asdict(r) for r in self.rows],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.rows)


def _evaluate_scores(dataset, scores, specs, cutoffs, intervals):
    """Per spec: full AUUC, cutoff AUUCs and the curve values."""
    ranked = {}
    out = {}
    for label in specs:
        spec = spec_from_label(label)
        if spec.rank_mode not in ranked:
            ranked[spec.rank_mode] = rank_by_scores(dataset, scores,
                                                    spec.rank_mode)
        r = ranked[spec.rank_mode]
        curve = build_curve(r, spec, intervals)
        result = auuc(r, spec, intervals)
        at = {f"{c:g}": auuc_at_cutoff(r, spec, c, intervals)
              for c in cutoffs}
        out[label] = (result.auuc, at, curve)
    return out


def run_experiment(config: ExperimentConfig,
                   dataset: UpliftDataset | None = None,
                   save_models_to=None) -> ExperimentReport:
    """Execute the full repeated protocol and aggregate the results."""
    config.validate()
    if dataset is None:
        dataset = load_csv(config.data_path, config.treatment_col,
                           config.response_col, config.feature_cols)
    if len(dataset) < 4:
        raise DataError("experiment needs at least 4 instances")

    names = [m.name for m in config.models]
    samples: dict = {(m, s): [] for m in names for s in config.eval_specs}
    cut_samples: dict = {(m, s): [] for m in names for s in config.eval_specs}
    curve_stacks: dict = {(m, s): [] for m in names
                          for s in config.eval_specs}
    errors: dict = {m: None for m in names}
    saved = {}

    for repeat in range(config.repeats):
        train, test = split_train_test(dataset, config.train_fraction,
                                       seed=config.seed + repeat)
        for mspec in config.models:
            try:
                model = fit_model(mspec, train)
                scores = model.score(test)
                evaluated = _evaluate_scores(test, scores,
                                             config.eval_specs,
                                             config.cutoffs,
                                             config.intervals)
            except Exception as exc:  # record and move on
                if errors[mspec.name] is None:
                    errors[mspec.name] = f"repeat {repeat}: {exc}"
                continue
            if repeat == 0:
                saved[mspec.name] = model
            for label, (value, at, curve) in evaluated.items():
                samples[(mspec.name, label)].append(value)
                cut_samples[(mspec.name, label)].append(at)
                curve_stacks[(mspec.name, label)].append(curve)

    if save_models_to is not None:
        out = Path(save_models_to)
        out.mkdir(parents=True, exist_ok=True)
        for name, model in saved.items():
            model.save(out / f"{name}.json")

    ref = config.reference_name
    rows = []
    curves: dict[str, dict[str, CurveBand]] = {}
    for mspec in config.models:
        name = mspec.name
        curves[name] = {}
        for label in config.eval_specs:
            vals = samples[(name, label)]
            if not vals:
                rows.append(ReportRow(
                    model=name, spec=label, failed=True,
                    error=errors[name] or "no successful repeats",
                    samples=[], auuc_mean=None, auuc_std=None,
                    auuc_min=None, auuc_max=None, auuc_at_cutoff={},
                    p_value_vs_reference=None, significant=None))
                continue
            arr = np.asarray(vals)
            at_mean = {}
            for key in cut_samples[(name, label)][0]:
                at_mean[key] = float(np.mean(
                    [d[key] for d in cut_samples[(name, label)]]))
            ref_vals = samples[(ref, label)]
            p_value = significant = None
            if len(ref_vals) == len(vals) and len(vals) >= 2:
                t_res = paired_t_test(arr, np.asarray(ref_vals),
                                      config.alpha)
                p_value, significant = t_res.p_value, t_res.significant
            rows.append(ReportRow(
                model=name, spec=label, failed=False, error=None,
                samples=[float(v) for v in vals],
                auuc_mean=float(arr.mean()),
                auuc_std=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                auuc_min=float(arr.min()), auuc_max=float(arr.max()),
                auuc_at_cutoff=at_mean,
                p_value_vs_reference=p_value, significant=significant))
            stack = curve_stacks[(name, label)]
            xs = stack[0].x
            values = np.vstack([c.values for c in stack])
            mean = values.mean(axis=0)
            full = mean[-1] if mean.size else 0.0
            curves[name][label] = CurveBand(
                x=[float(v) for v in xs],
                mean=[float(v) for v in mean],
                min=[float(v) for v in values.min(axis=0)],
                max=[float(v) for v in values.max(axis=0)],
                baseline=[float(v) for v in xs * full])

    return ExperimentReport(config=config,
                            dataset_name=Path(config.data_path).name,
                            n_instances=len(dataset),
                            rows=rows, curves=curves)


def emit_curves(report: ExperimentReport, out_dir) -> list[Path]:
    """Write one CSV per model with the mean curve and its min/max band."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for model, per_spec in report.curves.items():
        path = out / f"{model}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["spec", "x", "mean", "min", "max", "baseline"])
            for label, band in per_spec.items():
                for i in range(len(band.x)):
                    writer.writerow([label, repr(band.x[i]),
                                     repr(band.mean[i]), repr(band.min[i]),
                                     repr(band.max[i]),
                                     repr(band.baseline[i])])
        written.append(path)
    return written


def write_auuc_table(report: ExperimentReport, path) -> None:
    cutoff_keys = [f"{c:g}" for c in report.config.cutoffs]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "spec", "auuc_mean", "auuc_std",
                         "auuc_min", "auuc_max", "runs",
                         *(f"auuc@{k}" for k in cutoff_keys),
                         "p_value_vs_reference", "significant", "failed"])
        for row in report.rows:
            writer.writerow([
                row.model, row.spec,
                "" if row.auuc_mean is None else repr(row.auuc_mean),
                "" if row.auuc_std is None else repr(row.auuc_std),
                "" if row.auuc_min is None else repr(row.auuc_min),
                "" if row.auuc_max is None else repr(row.auuc_max),
                len(row.samples),
                *("" if k not in row.auuc_at_cutoff
                  else repr(row.auuc_at_cutoff[k]) for k in cutoff_keys),
                "" if row.p_value_vs_reference is None
                else repr(row.p_value_vs_reference),
                "" if row.significant is None else row.significant,
                row.failed])


def read_score_column(path, column: str) -> np.ndarray:
    """Read one numeric column from a headered CSV (for evaluating
    precomputed scores)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        header = [h.strip() for h in header]
        if column not in header:
            raise DataError(f"{path}: no column {column!r}")
        j = header.index(column)
        values = []
        for i, row in enumerate(reader, start=1):
            try:
                values.append(float(row[j]))
            except (ValueError, IndexError):
                raise DataError(
                    f"{path}: row {i}: cannot parse {column!r}") from None
    return np.asarray(values, dtype=np.float64)
