import math

import numpy as np
from django.test import SimpleTestCase

from forecast.exceptions import NotTrainedError, ShapeError
from forecast.gradcheck import finite_diff_check
from forecast.nn import LayerNorm
from forecast.tensor import mse_loss
from forecast.training import SequenceArrays, TrainingConfig
from forecast.transformer import (
    Seq2SeqTransformer,
    TransformerConfig,
    positional_encoding,
    transformer_train,
)


def sample_transformer(**params):
    defaults = {"input_size": 3, "d_model": 8, "heads": 2, "ffn_units": 16, "seed": 11}
    defaults.update(params)
    return Seq2SeqTransformer(TransformerConfig(**defaults))


def sample_batch(count=2, encoder_length=5, decoder_length=4, seed=0):
    rng = np.random.default_rng(seed)
    X_e = rng.normal(size=(count, encoder_length, 3))
    Y_out = rng.normal(scale=0.5, size=(count, decoder_length, 2))
    Y_d = np.concatenate([np.zeros((count, 1, 2)), Y_out[:, :-1]], axis=1)
    return SequenceArrays(X_e, Y_d, Y_out)


class PositionalEncodingTests(SimpleTestCase):
    def test_position_zero(self):
        encoding = positional_encoding(3, 8)

        np.testing.assert_array_equal(encoding[0, 0::2], 0.0)
        np.testing.assert_array_equal(encoding[0, 1::2], 1.0)

    def test_first_position_first_dimension(self):
        self.assertAlmostEqual(positional_encoding(2, 64)[1, 0], math.sin(1.0), places=12)
        self.assertAlmostEqual(positional_encoding(2, 64)[1, 0], 0.841471, places=6)

    def test_bounded(self):
        encoding = positional_encoding(200, 64)

        self.assertLessEqual(np.abs(encoding).max(), 1.0)

    def test_odd_width_rejected(self):
        with self.assertRaises(ValueError):
            positional_encoding(4, 7)


class LayerNormTests(SimpleTestCase):
    def test_rows_have_zero_mean_and_unit_variance(self):
        x = np.random.default_rng(1).normal(loc=3.0, scale=4.0, size=(6, 64))

        out = LayerNorm(64)(x).data

        self.assertLessEqual(np.abs(out.mean(axis=-1)).max(), 1e-10)
        np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-8)


class EncoderBlockTests(SimpleTestCase):
    def test_default_output_shape_and_head_width(self):
        model = Seq2SeqTransformer(TransformerConfig(input_size=15))

        z = model.encode(np.zeros((10, 15)))

        self.assertEqual(z.shape, (1, 10, 64))
        self.assertEqual(model.config.d_k, 16)
        self.assertEqual(model.encoder[0].attention.last_weights.shape, (1, 4, 10, 10))

    def test_attention_rows_are_probability_vectors(self):
        model = sample_transformer()
        batch = sample_batch()

        model(batch.X_e, batch.Y_d)

        for name, weights in model.attention_weights().items():
            np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-12, err_msg=name)

    def test_positional_encoding_breaks_permutation_equivariance(self):
        model = sample_transformer()
        x = np.random.default_rng(2).normal(size=(5, 3))
        permutation = np.array([4, 2, 0, 3, 1])

        out = model.encode(x).data[0]
        permuted = model.encode(x[permutation]).data[0]

        self.assertFalse(np.allclose(permuted, out[permutation]))

    def test_width_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            sample_transformer().encode(np.zeros((4, 5)))

    def test_expanded_head_width_is_configurable(self):
        model = sample_transformer(d_k=8)

        self.assertEqual(model.encoder[0].attention.W_q.shape, (8, 16))
        self.assertEqual(model.encode(np.zeros((3, 3))).shape, (1, 3, 8))


class DecoderBlockTests(SimpleTestCase):
    def setUp(self):
        self.model = sample_transformer()
        self.batch = sample_batch(decoder_length=6)

    def test_causal_mask_leakage(self):
        rng = np.random.default_rng(3)
        for trial in range(100):
            X_e = rng.normal(size=(1, 5, 3))
            Y_d = rng.normal(size=(1, 6, 2))
            j = trial % 6
            base = self.model(X_e, Y_d).data
            perturbed = Y_d.copy()
            perturbed[0, j] += rng.normal(size=2)

            out = self.model(X_e, perturbed).data

            self.assertTrue(np.array_equal(out[0, :j], base[0, :j]), f"row {j}")

    def test_masked_attention_has_no_weight_on_future(self):
        self.model(self.batch.X_e, self.batch.Y_d)

        weights = self.model.decoder[0].self_attention.last_weights
        upper = np.triu(np.ones((6, 6), dtype=bool), k=1)
        self.assertFalse(weights[..., upper].any())

    def test_single_step_decoder(self):
        out = self.model(self.batch.X_e, self.batch.Y_d[:, :1])

        self.assertEqual(out.shape, (2, 1, 2))
        self.assertTrue(np.isfinite(out.data).all())

    def test_symmetric_residuals_change_encoder(self):
        plain = sample_transformer()
        residual = sample_transformer(symmetric_residuals=True)
        x = self.batch.X_e

        self.assertFalse(np.allclose(plain.encode(x).data, residual.encode(x).data))

    def test_miniature_gradients(self):
        model = self.model
        batch = sample_batch(decoder_length=3)

        def loss():
            return mse_loss(model(batch.X_e, batch.Y_d), batch.Y_out)

        report = finite_diff_check(loss, model.parameters(), max_entries=24, seed=1)

        self.assertTrue(report.passed, str(report))


class TransformerForecastTests(SimpleTestCase):
    def setUp(self):
        self.model = sample_transformer()
        self.window = np.random.default_rng(4).normal(size=(5, 3))

    def test_untrained_model_rejected(self):
        with self.assertRaises(NotTrainedError):
            self.model.forecast(self.window, 2)

    def test_first_step_matches_teacher_forced_output(self):
        self.model.fitted = True
        Y_d = np.zeros((4, 2))
        Y_d[1:] = 5.0

        autoregressive = self.model.forecast(self.window, 4)
        teacher_forced = self.model.forecast(self.window, 4, teacher_forced=Y_d)

        np.testing.assert_allclose(autoregressive[0], teacher_forced[0], atol=1e-12)

    def test_prefix_consistency(self):
        self.model.fitted = True

        long = self.model.forecast(self.window, 6)
        short = self.model.forecast(self.window, 3)

        self.assertEqual(long.shape, (6, 2))
        self.assertTrue(np.array_equal(long[:3], short))

    def test_deterministic(self):
        self.model.fitted = True

        self.assertTrue(
            np.array_equal(self.model.forecast(self.window, 4), self.model.forecast(self.window, 4))
        )


class TransformerTrainingTests(SimpleTestCase):
    def test_overfits_four_sequences(self):
        model = sample_transformer(d_model=16, heads=2, ffn_units=32)
        batch = sample_batch(count=4, decoder_length=3)
        config = TrainingConfig(
            max_epochs=1500,
            batch_size=4,
            learning_rate=5e-3,
            patience=1500,
            validation_fraction=0.0,
        )

        transformer_train(model, batch, config)

        prediction = model.forecast(batch.X_e, 3, teacher_forced=batch.Y_d)
        self.assertLess(np.mean((prediction - batch.Y_out) ** 2), 1e-3)

    def test_seeded_runs_are_identical(self):
        losses = []
        for _ in range(2):
            history = transformer_train(
                sample_transformer(),
                sample_batch(count=6),
                TrainingConfig(max_epochs=4, batch_size=3, seed=5),
            )
            losses.append(history.train_loss)

        self.assertEqual(losses[0], losses[1])
