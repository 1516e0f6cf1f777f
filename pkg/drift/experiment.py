"""Experiment harness over (time horizon, held-out object, model) cells.

Layout of a run directory::

    data/<object>.csv                   simulated series (simulate source)
    snapshots/th<t_h>/<object>/<model>.json
    cells/th<t_h>/<object>/<model>.csv  truth vs forecast per test window
    metrics.csv, metrics_onestep.csv
    manifest.json
    plots/<object>_th<t_h>.csv (.svg)   written by ``emit_plots``
"""
import hashlib
import json
import logging
import platform
from dataclasses import dataclass, field, replace
from pathlib import Path

import django
import numpy as np
import pandas as pd
import scipy

from drift.catalog import load_catalog, select_objects
from drift.dataset import (
    build_object_examples,
    dataset_fingerprint,
    downsample,
    holdout_split,
)
from drift.models import ExperimentRun, MetricRecord
from drift.runners import Cell, ObjectData, get_runner
from drift.simulator import (
    ScenarioConfig,
    default_current,
    default_wind,
    export_series,
    import_series,
    simulate_campaign,
)
from drift.text_encoder import get_encoder
from forecast.metrics import evaluate
from forecast.snapshots import config_hash

logger = logging.getLogger(__name__)

STAGES = ("train", "evaluate", "all")
METRIC_COLUMNS = ("object", "model", "t_h", "RMSE", "MAE", "MAPE")
METRICS_FILE = "metrics.csv"
ONESTEP_METRICS_FILE = "metrics_onestep.csv"
MANIFEST_FILE = "manifest.json"
RUN_FORMAT = "driftcast-run"
CELL_ERRORS = (ValueError, RuntimeError, ArithmeticError, OSError, KeyError)


def cell_seed(base_seed, *labels):
    """Seed of one cell, stable across processes and independent of run order."""
    entropy = [int(base_seed)]
    for label in labels:
        digest = hashlib.blake2b(str(label).encode(), digest_size=4).digest()
        entropy.append(int.from_bytes(digest, "big"))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def versions():
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "django": django.get_version(),
    }


def scenario_config(config):
    scenario = config["scenario"]
    seed = config["seed"]
    return ScenarioConfig(
        duration=scenario["duration"],
        timestep=scenario["timestep"],
        substeps=scenario["substeps"],
        wind=replace(default_wind(seed), mean_speed=scenario["wind_mean"]),
        current=replace(default_current(seed), mean_speed=scenario["current_mean"]),
        anemometer_height=scenario["anemometer_height"],
        shear_exponent=scenario["shear_exponent"],
    )


def load_campaign(config):
    """Selected objects and their full-rate drift series."""
    objects = select_objects(load_catalog(config["catalog"]), config["objects"])
    if config["data_source"] == "simulate":
        trajectories = simulate_campaign(objects, scenario_config(config))
        series = {object_id: trajectory.series() for object_id, trajectory in trajectories.items()}
    else:
        directory = Path(config["csv_dir"])
        series = {
            obj.id: import_series(
                directory / f"{obj.id}.csv",
                obj.id,
                wind_height=config["wind_height"],
                shear_exponent=config["scenario"]["shear_exponent"],
            )
            for obj in objects
        }
    return objects, series


def object_embeddings(config, objects):
    encoder = get_encoder(config["text_backend"], config["embedding_file"])
    return {obj.id: encoder.encode(obj.description, obj.id) for obj in objects}


def build_object_data(config, objects, series, embeddings, t_h):
    return {
        obj.id: ObjectData(
            spec=obj,
            series=downsample(series[obj.id], t_h),
            examples=build_object_examples(
                series[obj.id],
                obj,
                t_h,
                config["encoder_length"],
                config["decoder_length"],
                embedding=embeddings[obj.id],
            ),
        )
        for obj in objects
    }


def build_cell(config, object_data, t_h, test_object):
    train, test = holdout_split(
        {object_id: data.examples for object_id, data in object_data.items()},
        test_object,
        train_fraction=config["train_fraction"],
        purge_overlap=config["purge_overlap"],
    )
    return Cell(
        t_h=t_h,
        test_object=test_object,
        objects=object_data,
        train=train,
        test=test,
        encoder_length=config["encoder_length"],
        decoder_length=config["decoder_length"],
        relative=config["relative_targets"],
        augment=config["augment"],
        augment_factor=config["augment_factor"],
        seed=cell_seed(config["seed"], t_h, test_object, "augment"),
    )


def cell_path(root, kind, t_h, object_id, model, suffix):
    return Path(root) / kind / f"th{t_h}" / object_id / f"{model}{suffix}"


def trajectory_frame(cell, predictions):
    truth = cell.truth()
    times = cell.objects[cell.test_object].series.t
    windows, steps = truth.shape[:2]
    return pd.DataFrame(
        {
            "window": np.repeat(np.arange(windows), steps),
            "step": np.tile(np.arange(1, steps + 1), windows),
            "t": np.concatenate([times[list(example.target_rows)] for example in cell.test]),
            "truth_x": truth[..., 0].ravel(),
            "truth_y": truth[..., 1].ravel(),
            "pred_x": predictions[..., 0].ravel(),
            "pred_y": predictions[..., 1].ravel(),
        }
    )


@dataclass
class CellOutcome:
    t_h: int
    object_id: str
    model: str
    seed: int
    status: str = "pending"
    error: str = ""
    multistep: dict = None
    onestep: dict = None
    training: dict = field(default_factory=dict)

    def as_dict(self):
        payload = {
            "t_h": self.t_h,
            "object": self.object_id,
            "model": self.model,
            "seed": self.seed,
            "status": self.status,
        }
        if self.error:
            payload["error"] = self.error
        if self.training:
            payload["training"] = self.training
        if self.multistep is not None:
            payload["metrics"] = {"multistep": self.multistep, "onestep": self.onestep}
        return payload


@dataclass
class ExperimentResult:
    output_dir: Path
    config: dict
    stage: str = "all"
    cells: list = field(default_factory=list)
    datasets: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [cell for cell in self.cells if cell.status == "failed"]

    @property
    def status(self):
        if not self.failures:
            return "completed"
        if len(self.failures) == len(self.cells):
            return "failed"
        return "partial"

    def metrics_frame(self, protocol="multistep"):
        rows = [
            {
                "object": cell.object_id,
                "model": cell.model,
                "t_h": cell.t_h,
                "RMSE": getattr(cell, protocol)["rmse"],
                "MAE": getattr(cell, protocol)["mae"],
                "MAPE": getattr(cell, protocol)["mape"],
            }
            for cell in self.cells
            if cell.multistep is not None
        ]
        return pd.DataFrame(rows, columns=METRIC_COLUMNS)

    def manifest(self):
        return {
            "format": RUN_FORMAT,
            "stage": self.stage,
            "status": self.status,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "seed": self.config["seed"],
            "versions": versions(),
            "datasets": self.datasets,
            "cells": [cell.as_dict() for cell in self.cells],
        }


def run_cell(cell, runner, outcome, output_dir, stage):
    """Train and/or evaluate one model on one cell, filling in ``outcome``."""
    snapshot = cell_path(output_dir, "snapshots", cell.t_h, cell.test_object, runner.name, ".json")
    if stage == "evaluate" and runner.trainable:
        fitted = runner.load(snapshot)
    else:
        fitted = runner.train(cell, outcome.seed)
        if runner.trainable:
            runner.save(fitted, snapshot)
        history = fitted.extras.get("history")
        if history:
            outcome.training = {
                "epochs": len(history["train_loss"]),
                "best_epoch": history["best_epoch"],
                "stop_reason": history["stop_reason"],
            }
    if stage == "train":
        outcome.status = "trained"
        return
    predictions = runner.predict(cell, fitted)
    truth = cell.truth()
    outcome.multistep = evaluate(predictions, truth).as_dict()
    outcome.onestep = evaluate(predictions[:, 0], truth[:, 0]).as_dict()
    path = cell_path(output_dir, "cells", cell.t_h, cell.test_object, runner.name, ".csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(cell, predictions).to_csv(path, index=False, float_format="%.17g")
    outcome.status = "completed"


def _fail(outcome, error, fail_fast):
    if fail_fast:
        raise error
    outcome.status = "failed"
    outcome.error = f"{type(error).__name__}: {error}"
    logger.error(
        "cell t_h=%s %s %s failed: %s", outcome.t_h, outcome.object_id, outcome.model, error
    )


def run_experiment(config, stage="all", fail_fast=False):
    """Run every cell of ``config``; failures are recorded unless ``fail_fast``."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}, expected one of {STAGES}")
    output_dir = Path(config["output_dir"])
    output_dir.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(output_dir, config, stage)

    objects, series = load_campaign(config)
    if config["data_source"] == "simulate":
        for object_id, drift in series.items():
            path = output_dir / "data" / f"{object_id}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            export_series(drift, path)
    embeddings = object_embeddings(config, objects)

    for t_h in config["time_horizons"]:
        setup_error = None
        try:
            object_data = build_object_data(config, objects, series, embeddings, t_h)
        except CELL_ERRORS as error:
            object_data, setup_error = None, error
        for obj in objects:
            outcomes = [
                CellOutcome(t_h, obj.id, model, cell_seed(config["seed"], t_h, obj.id, model))
                for model in config["models"]
            ]
            result.cells.extend(outcomes)
            try:
                if object_data is None:
                    raise setup_error
                cell = build_cell(config, object_data, t_h, obj.id)
            except CELL_ERRORS as error:
                for outcome in outcomes:
                    _fail(outcome, error, fail_fast)
                continue
            result.datasets[f"th{t_h}/{obj.id}"] = {
                "train": dataset_fingerprint(cell.train),
                "test": dataset_fingerprint(cell.test),
                "train_windows": len(cell.train),
                "test_windows": len(cell.test),
            }
            for outcome in outcomes:
                runner = get_runner(outcome.model, config["hyperparameters"])
                logger.info("cell t_h=%s %s %s: %s", t_h, obj.id, outcome.model, stage)
                try:
                    run_cell(cell, runner, outcome, output_dir, stage)
                except CELL_ERRORS as error:
                    _fail(outcome, error, fail_fast)

    write_outputs(result)
    logger.info(
        "experiment %s: %d cells, %d failed", result.status, len(result.cells), len(result.failures)
    )
    return result


def write_outputs(result):
    output_dir = result.output_dir
    if result.stage != "train":
        for name, protocol in ((METRICS_FILE, "multistep"), (ONESTEP_METRICS_FILE, "onestep")):
            result.metrics_frame(protocol).to_csv(
                output_dir / name, index=False, float_format="%.10g"
            )
    manifest = json.dumps(result.manifest(), indent=2, sort_keys=True)
    (output_dir / MANIFEST_FILE).write_text(manifest + "\n")


def read_manifest(run_dir):
    path = Path(run_dir) / MANIFEST_FILE
    payload = json.loads(path.read_text())
    if payload.get("format") != RUN_FORMAT:
        raise ValueError(f"{path} is not a run manifest")
    return payload


def summary_table(metrics, value="RMSE"):
    """Mean over held-out objects, one row per model and one column per t_h."""
    if metrics.empty:
        return metrics
    return metrics.pivot_table(index="model", columns="t_h", values=value, aggfunc="mean")


def record_run(result):
    """Store a finished run and its metric rows in the database."""
    run = ExperimentRun.objects.create(
        config_hash=config_hash(result.config),
        seed=result.config["seed"],
        output_dir=str(result.output_dir),
        status=result.status,
        config=result.config,
    )
    for cell in result.cells:
        if cell.multistep is None:
            continue
        for protocol in ("multistep", "onestep"):
            report = getattr(cell, protocol)
            MetricRecord.objects.create(
                run=run,
                leeway_object=cell.object_id,
                model=cell.model,
                t_h=cell.t_h,
                protocol=protocol,
                rmse=report["rmse"],
                mae=report["mae"],
                mape=None if np.isnan(report["mape"]) else report["mape"],
                mape_excluded=report["mape_excluded"],
                count=report["count"],
            )
    return run


def plot_series(run_dir, t_h, object_id):
    """First forecast step of every test window, truth and one column pair per model."""
    directory = Path(run_dir) / "cells" / f"th{t_h}" / object_id
    frame = None
    for path in sorted(directory.glob("*.csv")):
        cell = pd.read_csv(path, float_precision="round_trip")
        first = cell[cell["step"] == 1].reset_index(drop=True)
        if frame is None:
            frame = first[["t", "truth_x", "truth_y"]].copy()
        frame[f"{path.stem}_x"] = first["pred_x"]
        frame[f"{path.stem}_y"] = first["pred_y"]
    return frame


def _svg(frame, path, title):
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib import pyplot

    figure, axes = pyplot.subplots(figsize=(6, 6))
    axes.plot(frame["truth_x"], frame["truth_y"], color="black", linewidth=2, label="truth")
    for column in frame.columns[3::2]:
        model = column[:-2]
        axes.plot(frame[column], frame[f"{model}_y"], linewidth=1, label=model)
    axes.set_xlabel("east drift (m)")
    axes.set_ylabel("north drift (m)")
    axes.set_title(title)
    axes.legend()
    figure.savefig(path, format="svg")
    pyplot.close(figure)


def emit_plots(run_dir, svg=False):
    """Per object and time horizon plot series from a finished run."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    pairs = sorted(
        {
            (cell["t_h"], cell["object"])
            for cell in manifest["cells"]
            if cell["status"] == "completed"
        }
    )
    written = []
    plots = run_dir / "plots"
    plots.mkdir(exist_ok=True)
    for t_h, object_id in pairs:
        frame = plot_series(run_dir, t_h, object_id)
        if frame is None:
            continue
        path = plots / f"{object_id}_th{t_h}.csv"
        frame.to_csv(path, index=False, float_format="%.17g")
        written.append(path)
        if svg:
            svg_path = path.with_suffix(".svg")
            _svg(frame, svg_path, f"{object_id}, t_h = {t_h} s")
            written.append(svg_path)
    logger.info("wrote %d plot files to %s", len(written), plots)
    return written
