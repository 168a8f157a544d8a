"""Batch command line: simulate, train, train-baseline, eval, experiment,
compare.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 partial
failure (an experiment finished but some model rows failed).
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data import load_csv, rank_by_scores
from .errors import ConfigError, DataError, UpliftRankError
from .evaluation import auuc, auuc_record, build_curve, paired_t_test, \
    random_baseline, spec_from_label, write_auuc_records
from .experiment import ExperimentConfig, FittedModel, ModelSpec, \
    emit_curves, fit_model, metric_from_label, read_score_column, \
    run_experiment, write_auuc_table
from .simulate import SCENARIO_NAMES, scenario_by_name, simulate, write_csv

_SPEC_CHOICES = ["qini-sep-abs", "uplift-sep-abs", "uplift-sep-rel",
                 "qini-joint-abs", "uplift-joint-abs", "joint-rel"]


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain errors onto the documented exit codes."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(2, str(exc))
        except (DataError, FileNotFoundError) as exc:
            _fail(3, str(exc))
        except UpliftRankError as exc:
            _fail(2, str(exc))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main():
    """Treatment-effect ranking toolkit."""


@main.command("simulate")
@click.option("--scenario", type=click.Choice(SCENARIO_NAMES),
              default="balanced", show_default=True)
@click.option("--n", "base_n", type=int, default=5000, show_default=True,
              help="Base group size before imbalance is applied.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_guarded
def simulate_cmd(scenario, base_n, seed, out):
    """Draw a synthetic ranked population and write it as CSV."""
    ranked = simulate(scenario_by_name(scenario, base_n, seed))
    write_csv(ranked, out)
    click.echo(f"wrote {len(ranked)} instances to {out}")


def _data_options(fn):
    fn = click.option("--feature-cols", default="auto", show_default=True,
                      help="Comma-separated feature columns, or 'auto' for "
                           "all remaining numeric columns.")(fn)
    fn = click.option("--response-col", default="y", show_default=True)(fn)
    fn = click.option("--treatment-col", default="t", show_default=True)(fn)
    fn = click.option("--data", type=click.Path(exists=True, dir_okay=False),
                      required=True)(fn)
    return fn


def _parse_feature_cols(raw: str):
    return "auto" if raw == "auto" else [c.strip() for c in raw.split(",")]


@main.command()
@_data_options
@click.option("--metric", type=click.Choice(["map", "dcg", "ndcg", "pcg"]),
              default="pcg", show_default=True)
@click.option("--relevance", type=click.Choice(["abs1", "abs2", "abs3",
                                                "rel"]),
              default="rel", show_default=True)
@click.option("--setting", type=click.Choice(["separate", "joint"]),
              default="separate", show_default=True)
@click.option("--cutoff", type=float, default=1.0, show_default=True,
              help="Fraction of each query the metric is optimised at.")
@click.option("--trees", type=int, default=500, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Recorded with the model; training itself is "
                   "deterministic.")
@click.option("--out-model", type=click.Path(dir_okay=False), required=True)
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV of (round, train metric value).")
@_guarded
def train(data, treatment_col, response_col, feature_cols, metric,
          relevance, setting, cutoff, trees, lr, sigma, seed, out_model,
          trace):
    """Train a listwise ranking model and write it as JSON."""
    if metric == "map" and relevance != "abs1":
        raise ConfigError("MAP needs binary relevance; use --relevance abs1")
    dataset = load_csv(data, treatment_col, response_col,
                       _parse_feature_cols(feature_cols))
    spec = ModelSpec(name=Path(out_model).stem, kind="lambdamart",
                     metric=metric, relevance=relevance, setting=setting,
                     cutoff=cutoff, trees=trees, learning_rate=lr,
                     sigma=sigma)
    rows = []
    model = fit_model(spec, dataset,
                      trace_callback=lambda r, v: rows.append((r, v)))
    payload = model.to_dict()
    payload["train_settings"] = {"metric": metric, "relevance": relevance,
                                 "setting": setting, "cutoff": cutoff,
                                 "seed": seed}
    with open(out_model, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    if trace:
        with open(trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "train_metric"])
            for r, v in rows:
                writer.writerow([r, repr(v)])
    click.echo(f"trained {metric} ranker on {len(dataset)} instances "
               f"-> {out_model}")


@main.command("train-baseline")
@_data_options
@click.option("--kind", type=click.Choice(["flipped", "two-model", "dummy"]),
              required=True)
@click.option("--trees", type=int, default=500, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-model", type=click.Path(dir_okay=False), required=True)
@_guarded
def train_baseline(data, treatment_col, response_col, feature_cols, kind,
                   trees, lr, seed, out_model):
    """Train a pointwise uplift baseline and write it as JSON."""
    dataset = load_csv(data, treatment_col, response_col,
                       _parse_feature_cols(feature_cols))
    spec = ModelSpec(name=Path(out_model).stem, kind=kind, trees=trees,
                     learning_rate=lr)
    model = fit_model(spec, dataset)
    model.save(out_model)
    click.echo(f"trained {kind} baseline on {len(dataset)} instances "
               f"-> {out_model}")


@main.command("eval")
@_data_options
@click.option("--model", "model_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Model JSON produced by train / train-baseline.")
@click.option("--score-col", default=None,
              help="Evaluate a precomputed score column instead of a model.")
@click.option("--spec", "spec_labels", multiple=True,
              type=click.Choice(_SPEC_CHOICES),
              default=("uplift-sep-rel", "joint-rel"), show_default=True)
@click.option("--intervals", type=int, default=100, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@_guarded
def eval_cmd(data, treatment_col, response_col, feature_cols, model_path,
             score_col, spec_labels, intervals, out_dir):
    """Score a dataset and emit curves plus an AUUC table."""
    if (model_path is None) == (score_col is None):
        raise ConfigError("provide exactly one of --model and --score-col")
    dataset = load_csv(data, treatment_col, response_col,
                       _parse_feature_cols(feature_cols))
    if model_path is not None:
        model = FittedModel.load(model_path)
        scores = model.score(dataset)
        model_name = Path(model_path).stem
    else:
        scores = read_score_column(data, score_col)
        if scores.shape != (len(dataset),):
            raise DataError("score column length mismatch")
        model_name = f"scores:{score_col}"

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for label in spec_labels:
        spec = spec_from_label(label)
        ranked = rank_by_scores(dataset, scores, spec.rank_mode)
        curve = build_curve(ranked, spec, intervals)
        baseline = random_baseline(ranked, spec, intervals)
        curve.write_csv(out / f"curve_{label}.csv")
        with open(out / f"curve_{label}.json", "w") as fh:
            json.dump({"curve": curve.to_json(),
                       "baseline": baseline.to_json()}, fh, sort_keys=True)
        result = auuc(ranked, spec, intervals)
        record = auuc_record(Path(data).name, model_name, spec,
                             [result.auuc])
        record.update(auuc_raw=result.auuc_raw, n_points=result.n_points)
        records.append(record)
    write_auuc_records(records, out / "auuc.json")
    for rec in records:
        click.echo(f"{rec['spec']}: auuc={rec['auuc']:.6f}")


@main.command()
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON file mirroring the experiment config.")
@click.option("--data", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Override the dataset path from the config.")
@click.option("--repeats", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None, help="Override the output directory.")
@_guarded
def experiment(config_path, data, repeats, seed, out_dir):
    """Run the repeated train/evaluate protocol from a config file."""
    config = ExperimentConfig.from_json_file(config_path)
    if data is not None:
        config.data_path = data
    if repeats is not None:
        config.repeats = repeats
    if seed is not None:
        config.seed = seed
    if out_dir is not None:
        config.out_dir = out_dir
    config.validate()

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(config, save_models_to=out / "models")
    report.write_json(out / "report.json")
    write_auuc_table(report, out / "auuc_table.csv")
    emit_curves(report, out / "curves")

    for row in report.rows:
        status = "FAILED" if row.failed else f"auuc={row.auuc_mean:.6f}"
        click.echo(f"{row.model} [{row.spec}]: {status}")
    if report.any_failed:
        click.echo("some model rows failed", err=True)
        sys.exit(4)


@main.command()
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--reference", default=None,
              help="Model to test against (default: the report's own "
                   "reference).")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@_guarded
def compare(report_path, reference, alpha):
    """Pairwise significance tests between models of a finished report."""
    with open(report_path) as fh:
        payload = json.load(fh)
    rows = payload["rows"]
    ref = reference or payload["config"].get("reference") \
        or payload["config"]["models"][0]["name"]
    by_spec: dict[str, list[dict]] = {}
    for row in rows:
        by_spec.setdefault(row["spec"], []).append(row)
    for spec_label, spec_rows in by_spec.items():
        ref_row = next((r for r in spec_rows if r["model"] == ref), None)
        if ref_row is None or ref_row["failed"]:
            raise ConfigError(f"reference model {ref!r} has no results "
                              f"for {spec_label}")
        click.echo(f"[{spec_label}] reference: {ref}")
        for row in spec_rows:
            if row["failed"]:
                click.echo(f"  {row['model']}: FAILED")
                continue
            if len(row["samples"]) < 2:
                click.echo(f"  {row['model']}: too few runs")
                continue
            res = paired_t_test(np.asarray(row["samples"]),
                                np.asarray(ref_row["samples"]), alpha)
            mark = "*" if res.significant else " "
            click.echo(f"  {row['model']}: mean={np.mean(row['samples']):.6f}"
                       f" p={res.p_value:.4f}{mark}")


if __name__ == "__main__":
    main()
