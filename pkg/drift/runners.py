"""Training and forecasting of every model for one experiment cell.

A cell is one (time horizon, held-out object) pair. Each runner turns the
cell's training windows into a fitted model and its test windows into
absolute drift positions in meters, shaped (windows, decoder_length, 2).
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from drift.dataset import (
    FUSED_WIDTH,
    Standardizer,
    augment_noise,
    stack_examples,
    standardize_arrays,
    to_relative,
)
from drift.physics import NUMERIC_WIDTH, feature_matrix
from forecast.baselines import (
    RNNBaseline,
    RnnConfig,
    TCNBaseline,
    TcnConfig,
    persistence_forecast,
    roll_forward,
    train_one_step,
)
from forecast.curvefit import CurveFitCoeffs, curvefit_fit, curvefit_predict
from forecast.lstm import LstmConfig, Seq2SeqLSTM, train_seq2seq
from forecast.snapshots import load_snapshot, save_snapshot
from forecast.training import SequenceArrays, TrainingConfig
from forecast.transformer import Seq2SeqTransformer, TransformerConfig, transformer_train

logger = logging.getLogger(__name__)


@dataclass
class ObjectData:
    """One object's down-sampled series and its (absolute) windows."""

    spec: object
    series: object
    examples: list


@dataclass
class Cell:
    t_h: int
    test_object: str
    objects: dict
    train: list
    test: list
    encoder_length: int
    decoder_length: int
    relative: bool = True
    augment: bool = True
    augment_factor: float = 0.05
    seed: int = 0
    x_scaler: Standardizer = field(init=False)

    def __post_init__(self):
        if not self.train or not self.test:
            raise ValueError(
                f"cell t_h={self.t_h} / {self.test_object} has "
                f"{len(self.train)} training and {len(self.test)} test windows"
            )
        inputs = np.stack([example.X_e for example in self.train])
        self.x_scaler = Standardizer(columns=NUMERIC_WIDTH).fit(inputs)

    def training_examples(self):
        examples = to_relative(self.train) if self.relative else list(self.train)
        if self.augment:
            examples = augment_noise(examples, self.augment_factor, seed=self.seed)
        return examples

    def inputs(self, examples, width):
        return self.x_scaler.apply(np.stack([example.X_e[:, :width] for example in examples]))

    def truth(self):
        return np.stack([example.Y_out for example in self.test])

    def anchors(self):
        return np.stack([example.anchor for example in self.test])

    def to_positions(self, outputs):
        outputs = np.asarray(outputs, dtype=float)
        if self.relative:
            return outputs + self.anchors()[:, None, :]
        return outputs

    def last_observed_row(self, example):
        return example.start + self.encoder_length - 1

    def training_cutoff(self):
        """First row of the held-out object whose targets are kept for testing."""
        return self.test[0].target_rows.start


@dataclass
class FittedModel:
    model: object = None
    extras: dict = field(default_factory=dict)


def training_config(params, seed):
    return TrainingConfig(
        max_epochs=params["max_epochs"],
        batch_size=params["batch_size"],
        learning_rate=params["learning_rate"],
        patience=params["patience"],
        validation_fraction=params["validation_fraction"],
        seed=seed,
        time_budget_s=params["time_budget_s"],
    )


def next_feature_row(data, row, position, previous):
    """Numeric features of ``row`` when the object is believed to be at ``position``."""
    series = data.series
    velocity = (position - previous) / (series.t[row] - series.t[row - 1])
    rows = slice(row, row + 1)
    return feature_matrix(
        series.t[rows], series.v_a[rows], series.v_w[rows], data.spec, velocity[None]
    )[0]


class Runner:
    name = ""
    trainable = True

    def __init__(self, params=None):
        self.params = params or {}

    def train(self, cell, seed):
        raise NotImplementedError

    def predict(self, cell, fitted):
        raise NotImplementedError

    def save(self, fitted, path):
        raise NotImplementedError

    def load(self, path):
        raise NotImplementedError


class CurveFitRunner(Runner):
    name = "curvefit"

    def train(self, cell, seed):
        segments = []
        for object_id, data in cell.objects.items():
            series = data.series
            stop = len(series)
            if object_id == cell.test_object:
                stop = cell.training_cutoff()
            if stop < 3:
                continue
            rows = slice(0, stop)
            segments.append((series.t[rows], series.v_w[rows], series.v_a[rows], series.d[rows]))
        return FittedModel(curvefit_fit(segments))

    def predict(self, cell, fitted):
        positions = []
        for example in cell.test:
            series = cell.objects[example.object_id].series
            first = cell.last_observed_row(example)
            rows = slice(first, first + cell.decoder_length + 1)
            drift = curvefit_predict(
                fitted.model, series.t[rows], series.v_w[rows], series.v_a[rows]
            )
            positions.append(example.anchor + drift[1:])
        return np.stack(positions)

    def save(self, fitted, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"model": self.name, "coefficients": fitted.model.as_dict()}
        path.write_text(json.dumps(payload, indent=2))
        return path

    def load(self, path):
        payload = json.loads(Path(path).read_text())
        if payload.get("model") != self.name:
            raise ValueError(f"{path} does not hold curve fit coefficients")
        return FittedModel(CurveFitCoeffs(**payload["coefficients"]))


class PersistenceRunner(Runner):
    name = "persistence"
    trainable = False

    def train(self, cell, seed):
        return FittedModel()

    def predict(self, cell, fitted):
        positions = []
        for example in cell.test:
            d = cell.objects[example.object_id].series.d
            last = cell.last_observed_row(example)
            history = d[max(last - 1, 0):last + 1]
            if len(history) < 2:
                history = np.vstack([history, history])
            positions.append(persistence_forecast(history, cell.decoder_length))
        return np.stack(positions)


class SnapshotRunner(Runner):
    """Networks stored as snapshots with their target scaler."""

    def save(self, fitted, path):
        return save_snapshot(fitted.model, path, extras=fitted.extras)

    def load(self, path):
        model, extras = load_snapshot(path)
        return FittedModel(model, extras)

    @staticmethod
    def target_scaler(fitted):
        return Standardizer.from_dict(fitted.extras["y_scaler"])


class OneStepRunner(SnapshotRunner):
    """Trained on the next row only, rolled forward over the decoder length."""

    def build(self, seed):
        raise NotImplementedError

    def train(self, cell, seed):
        examples = cell.training_examples()
        windows = cell.inputs(examples, NUMERIC_WIDTH)
        targets = np.stack([example.Y_out[0] for example in examples])
        y_scaler = Standardizer().fit(targets)
        model = self.build(seed)
        history = train_one_step(
            model, windows, y_scaler.apply(targets), training_config(self.params, seed)
        )
        logger.debug("%s trained on %d windows", self.name, len(windows))
        return FittedModel(model, {"y_scaler": y_scaler.as_dict(), "history": history.as_dict()})

    def predict(self, cell, fitted):
        y_scaler = self.target_scaler(fitted)
        return np.stack(
            [self._roll(cell, fitted.model, y_scaler, example) for example in cell.test]
        )

    def _roll(self, cell, model, y_scaler, example):
        data = cell.objects[example.object_id]
        last = cell.last_observed_row(example)
        track = [example.anchor]

        def advance(step, prediction):
            output = y_scaler.invert(prediction[None])[0]
            track.append(track[-1] + output if cell.relative else output)
            row = next_feature_row(data, last + 1 + step, track[-1], track[-2])
            return cell.x_scaler.apply(row[None])[0]

        window = cell.inputs([example], NUMERIC_WIDTH)[0]
        outputs = y_scaler.invert(roll_forward(model, window, cell.decoder_length, advance))
        if cell.relative:
            return example.anchor + np.cumsum(outputs, axis=0)
        return outputs


class RnnRunner(OneStepRunner):
    name = "rnn"

    def build(self, seed):
        return RNNBaseline(
            RnnConfig(input_size=NUMERIC_WIDTH, units=self.params["units"], seed=seed)
        )


class TcnRunner(OneStepRunner):
    name = "tcn"

    def build(self, seed):
        return TCNBaseline(
            TcnConfig(
                input_size=NUMERIC_WIDTH,
                filters=self.params["filters"],
                kernel=self.params["kernel"],
                dilations=self.params["dilations"],
                seed=seed,
            )
        )


class SequenceRunner(SnapshotRunner):
    """Encoder-decoder models trained with teacher forcing."""

    width = NUMERIC_WIDTH

    def build(self, seed):
        raise NotImplementedError

    def fit(self, model, arrays, config):
        raise NotImplementedError

    def train(self, cell, seed):
        raw = stack_examples(cell.training_examples())
        y_scaler = Standardizer().fit(raw.Y_out)
        arrays = standardize_arrays(
            SequenceArrays(raw.X_e[..., :self.width], raw.Y_d, raw.Y_out), cell.x_scaler, y_scaler
        )
        model = self.build(seed)
        history = self.fit(model, arrays, training_config(self.params, seed))
        logger.debug("%s trained on %d windows", self.name, len(arrays))
        return FittedModel(model, {"y_scaler": y_scaler.as_dict(), "history": history.as_dict()})

    def predict(self, cell, fitted):
        outputs = fitted.model.forecast(cell.inputs(cell.test, self.width), cell.decoder_length)
        return cell.to_positions(self.target_scaler(fitted).invert(outputs))


class StsLstmRunner(SequenceRunner):
    name = "sts_lstm"

    def build(self, seed):
        return Seq2SeqLSTM(
            LstmConfig(
                input_size=self.width,
                encoder_units=self.params["encoder_units"],
                decoder_units=self.params["decoder_units"],
                attention=False,
                seed=seed,
            )
        )

    def fit(self, model, arrays, config):
        return train_seq2seq(model, arrays, config)


class AttentionLstmRunner(StsLstmRunner):
    name = "mm_attention_lstm"
    width = FUSED_WIDTH

    def build(self, seed):
        return Seq2SeqLSTM(
            LstmConfig(
                input_size=self.width,
                encoder_units=self.params["encoder_units"],
                decoder_units=self.params["decoder_units"],
                attention=True,
                d_k=self.params["d_k"],
                seed=seed,
            )
        )


class TransformerRunner(SequenceRunner):
    name = "mm_transformer"
    width = FUSED_WIDTH

    def build(self, seed):
        return Seq2SeqTransformer(
            TransformerConfig(
                input_size=self.width,
                d_model=self.params["d_model"],
                heads=self.params["heads"],
                d_k=self.params["d_k"],
                ffn_units=self.params["ffn_units"],
                encoder_blocks=self.params["encoder_blocks"],
                decoder_blocks=self.params["decoder_blocks"],
                symmetric_residuals=self.params["symmetric_residuals"],
                seed=seed,
            )
        )

    def fit(self, model, arrays, config):
        return transformer_train(model, arrays, config)


RUNNERS = {
    runner.name: runner
    for runner in (
        CurveFitRunner,
        PersistenceRunner,
        RnnRunner,
        TcnRunner,
        StsLstmRunner,
        AttentionLstmRunner,
        TransformerRunner,
    )
}


def get_runner(name, hyperparameters=None):
    try:
        runner_class = RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}") from None
    return runner_class((hyperparameters or {}).get(name, {}))
