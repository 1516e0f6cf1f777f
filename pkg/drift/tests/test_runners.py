import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from drift.config import load_experiment_config
from drift.dataset import FUSED_WIDTH
from drift.experiment import (
    build_cell,
    build_object_data,
    load_campaign,
    object_embeddings,
)
from drift.physics import NUMERIC_WIDTH
from drift.runners import RUNNERS, Cell, get_runner, next_feature_row

TINY_TRAINING = {"max_epochs": 2, "batch_size": 128, "patience": 2}
TINY_HYPERPARAMETERS = {
    "rnn": {"units": [4], **TINY_TRAINING},
    "tcn": {"filters": 4, "kernel": 2, "dilations": [2, 1], **TINY_TRAINING},
    "sts_lstm": {"encoder_units": [4], "decoder_units": [4], **TINY_TRAINING},
    "mm_attention_lstm": {
        "encoder_units": [4],
        "decoder_units": [4],
        "d_k": 4,
        **TINY_TRAINING,
    },
    "mm_transformer": {
        "d_model": 8,
        "heads": 2,
        "d_k": 4,
        "ffn_units": 8,
        **TINY_TRAINING,
    },
}


def sample_config(output_dir="runs/test", **params):
    defaults = {
        "scenario": {"duration": 120.0},
        "time_horizons": [1],
        "encoder_length": 4,
        "decoder_length": 3,
        "objects": ["banana_boat", "orange_printed", "orange_inflatable"],
        "models": ["curvefit", "persistence"],
        "hyperparameters": TINY_HYPERPARAMETERS,
        "output_dir": str(output_dir),
        "seed": 0,
    }
    defaults.update(params)

    return load_experiment_config(overrides=defaults)


def sample_cell(config=None, t_h=1, test_object="banana_boat"):
    config = config or sample_config()
    objects, series = load_campaign(config)
    object_data = build_object_data(
        config, objects, series, object_embeddings(config, objects), t_h
    )
    return build_cell(config, object_data, t_h, test_object)


class CellTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cell = sample_cell()

    def test_window_counts(self):
        # 120 rows, 7-row windows: 114 per object; of the held-out object the
        # first 57 windows minus the 2 whose targets reach the test targets train
        self.assertEqual(len(self.cell.test), 57)
        self.assertEqual(len(self.cell.train), 2 * 114 + 55)
        self.assertEqual(self.cell.truth().shape, (57, 3, 2))

    def test_input_scaler_fit_on_numeric_columns(self):
        inputs = self.cell.inputs(self.cell.train, FUSED_WIDTH)

        self.assertEqual(inputs.shape, (len(self.cell.train), 4, FUSED_WIDTH))
        means = inputs[..., :NUMERIC_WIDTH].reshape(-1, NUMERIC_WIDTH).mean(axis=0)
        self.assertTrue(np.all(np.abs(means) < 1e-8))

    def test_training_examples_are_augmented_relative(self):
        examples = self.cell.training_examples()

        self.assertEqual(len(examples), 2 * len(self.cell.train))
        for example, source in zip(examples[:5], self.cell.train):
            np.testing.assert_allclose(example.Y_out, source.Y_out - source.anchor)
            np.testing.assert_array_equal(example.Y_d[0], [0.0, 0.0])

    def test_positions_from_relative_outputs(self):
        outputs = np.zeros((57, 3, 2))

        positions = self.cell.to_positions(outputs)

        np.testing.assert_array_equal(positions[:, 1], self.cell.anchors())

    def test_next_feature_row_matches_observed_features(self):
        data = self.cell.objects["banana_boat"]
        example = self.cell.test[0]
        row = self.cell.last_observed_row(example)
        series = data.series

        features = next_feature_row(data, row, series.d[row], series.d[row - 1])

        np.testing.assert_allclose(
            features, example.X_e[-1, :NUMERIC_WIDTH], rtol=1e-12, atol=1e-12
        )

    def test_empty_split_rejected(self):
        with self.assertRaises(ValueError):
            Cell(1, "banana_boat", self.cell.objects, self.cell.train, [], 4, 3)


class RegistryTests(SimpleTestCase):
    def test_all_models_registered(self):
        self.assertEqual(
            set(RUNNERS),
            {
                "curvefit",
                "persistence",
                "rnn",
                "tcn",
                "sts_lstm",
                "mm_attention_lstm",
                "mm_transformer",
            },
        )

    def test_hyperparameters_passed_by_name(self):
        runner = get_runner("rnn", {"rnn": {"units": [8]}})

        self.assertEqual(runner.params, {"units": [8]})

    def test_unknown_model_rejected(self):
        with self.assertRaises(ValueError):
            get_runner("gru")


class BaselineRunnerTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cell = sample_cell()

    def test_persistence_extrapolates_last_step(self):
        runner = get_runner("persistence")

        predictions = runner.predict(self.cell, runner.train(self.cell, 0))

        example = self.cell.test[4]
        d = self.cell.objects["banana_boat"].series.d
        last = self.cell.last_observed_row(example)
        delta = d[last] - d[last - 1]
        np.testing.assert_allclose(predictions[4, 0], d[last] + delta)
        np.testing.assert_allclose(predictions[4, 2], d[last] + 3 * delta)
        self.assertFalse(runner.trainable)

    def test_curve_fit_forecast(self):
        runner = get_runner("curvefit")

        fitted = runner.train(self.cell, 0)
        predictions = runner.predict(self.cell, fitted)

        self.assertEqual(predictions.shape, (57, 3, 2))
        self.assertTrue(np.all(np.isfinite(predictions)))
        errors = np.linalg.norm(predictions - self.cell.truth(), axis=-1)
        spread = np.linalg.norm(self.cell.truth()[:, -1] - self.cell.anchors(), axis=-1)
        self.assertLess(errors[:, 0].mean(), spread.mean())

    def test_curve_fit_snapshot(self):
        runner = get_runner("curvefit")
        fitted = runner.train(self.cell, 0)

        with tempfile.TemporaryDirectory() as directory:
            path = runner.save(fitted, Path(directory) / "curvefit.json")
            restored = runner.load(path)

        np.testing.assert_array_equal(
            runner.predict(self.cell, restored), runner.predict(self.cell, fitted)
        )


class NetworkRunnerTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cell = sample_cell()

    def assertRunnerWorks(self, name):
        runner = get_runner(name, TINY_HYPERPARAMETERS)

        fitted = runner.train(self.cell, seed=3)
        predictions = runner.predict(self.cell, fitted)

        self.assertEqual(predictions.shape, (57, 3, 2))
        self.assertTrue(np.all(np.isfinite(predictions)))
        self.assertEqual(len(fitted.extras["history"]["train_loss"]), 2)

        with tempfile.TemporaryDirectory() as directory:
            path = runner.save(fitted, Path(directory) / f"{name}.json")
            restored = runner.load(path)

        np.testing.assert_allclose(
            runner.predict(self.cell, restored), predictions, rtol=1e-12, atol=1e-12
        )
        return runner, fitted

    def test_rnn(self):
        self.assertRunnerWorks("rnn")

    def test_tcn(self):
        self.assertRunnerWorks("tcn")

    def test_sts_lstm_ignores_text(self):
        runner, fitted = self.assertRunnerWorks("sts_lstm")

        self.assertEqual(runner.width, NUMERIC_WIDTH)
        self.assertEqual(fitted.model.config.input_size, NUMERIC_WIDTH)
        self.assertFalse(fitted.model.config.attention)

    def test_attention_lstm(self):
        runner, fitted = self.assertRunnerWorks("mm_attention_lstm")

        self.assertEqual(fitted.model.config.input_size, FUSED_WIDTH)
        self.assertTrue(fitted.model.config.attention)

    def test_transformer(self):
        runner, fitted = self.assertRunnerWorks("mm_transformer")

        self.assertEqual(fitted.model.config.input_size, FUSED_WIDTH)

    def test_training_is_seeded(self):
        runner = get_runner("rnn", TINY_HYPERPARAMETERS)

        first = runner.predict(self.cell, runner.train(self.cell, seed=5))
        second = runner.predict(self.cell, runner.train(self.cell, seed=5))

        np.testing.assert_array_equal(first, second)
