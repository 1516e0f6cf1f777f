import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from drift.catalog import load_catalog
from drift.dataset import (
    FUSED_WIDTH,
    Standardizer,
    augment_noise,
    build_object_examples,
    dataset_fingerprint,
    downsample,
    dump_examples,
    fuse_embedding,
    holdout_split,
    load_examples,
    make_windows,
    stack_examples,
    standardize_arrays,
    to_relative,
)
from drift.exceptions import NotFittedError, UnknownObjectError
from drift.physics import NUMERIC_WIDTH
from drift.simulator import ScenarioConfig, simulate
from drift.text_encoder import EMBEDDING_WIDTH, BuiltinEncoder


def sample_rows(length, width=NUMERIC_WIDTH, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(length, width)), rng.normal(size=(length, 2))


def sample_examples(object_id, count, width=4):
    X, Y = sample_rows(count + 3, width=width, seed=len(object_id))
    return make_windows(X, Y, 2, 2, object_id)


def brute_force_offsets(T, encoder_length, decoder_length):
    return [i for i in range(T) if i + encoder_length + decoder_length <= T]


class DownsampleTests(SimpleTestCase):
    def test_identity_at_one(self):
        X, _ = sample_rows(7)

        np.testing.assert_array_equal(downsample(X, 1), X)

    def test_keeps_every_t_h_row(self):
        X = np.arange(10)[:, None]

        np.testing.assert_array_equal(downsample(X, 3)[:, 0], [0, 3, 6, 9])

    def test_length_is_ceiling(self):
        for N in range(1, 30):
            for t_h in (1, 3, 5, 10):
                self.assertEqual(len(downsample(np.zeros((N, 2)), t_h)), -(-N // t_h))

    def test_series_downsampled_together(self):
        obj = load_catalog()[0]
        series = simulate(ScenarioConfig.seeded(0, duration=30.0), obj).series()

        reduced = downsample(series, 5)

        self.assertEqual(len(reduced), 6)
        np.testing.assert_array_equal(reduced.t, [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])
        np.testing.assert_array_equal(reduced.d, series.d[::5])

    def test_invalid_horizon_rejected(self):
        for t_h in (0, -1, 1.5):
            with self.assertRaises(ValueError):
                downsample(np.zeros((4, 2)), t_h)


class FuseEmbeddingTests(SimpleTestCase):
    def test_width_and_columns(self):
        X, _ = sample_rows(6)
        embedding = BuiltinEncoder().encode("Small orange 3-D printed boat")

        fused = fuse_embedding(X, embedding)

        self.assertEqual(fused.shape, (6, FUSED_WIDTH))
        self.assertEqual(FUSED_WIDTH, 399)
        np.testing.assert_array_equal(fused[:, :NUMERIC_WIDTH], X)
        for row in fused:
            np.testing.assert_array_equal(row[NUMERIC_WIDTH:], embedding)

    def test_zero_embedding(self):
        X, _ = sample_rows(3)

        fused = fuse_embedding(X, np.zeros(EMBEDDING_WIDTH))

        np.testing.assert_array_equal(fused[:, NUMERIC_WIDTH:], np.zeros((3, EMBEDDING_WIDTH)))

    def test_dimension_mismatch_rejected(self):
        X, _ = sample_rows(3)
        with self.assertRaises(ValueError):
            fuse_embedding(X[:, :14], np.zeros(EMBEDDING_WIDTH))
        with self.assertRaises(ValueError):
            fuse_embedding(X, np.zeros(383))


class MakeWindowsTests(SimpleTestCase):
    def test_window_counts(self):
        X, Y = sample_rows(25)
        self.assertEqual(len(make_windows(X, Y, 10, 10)), 6)
        self.assertEqual(len(make_windows(X[:20], Y[:20], 10, 10)), 1)

    def test_random_triples_match_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            encoder_length = int(rng.integers(1, 12))
            decoder_length = int(rng.integers(1, 12))
            T = int(rng.integers(encoder_length + decoder_length, 80))
            X, Y = sample_rows(T, width=3, seed=T)

            examples = make_windows(X, Y, encoder_length, decoder_length)

            offsets = brute_force_offsets(T, encoder_length, decoder_length)
            self.assertEqual(len(examples), len(offsets))
            self.assertEqual(len(examples), T - (encoder_length + decoder_length) + 1)
            for i, example in zip(offsets, examples):
                np.testing.assert_array_equal(example.X_e, X[i:i + encoder_length])
                np.testing.assert_array_equal(
                    example.Y_out, Y[i + encoder_length:i + encoder_length + decoder_length]
                )
                np.testing.assert_array_equal(example.Y_d[0], [0.0, 0.0])
                np.testing.assert_array_equal(example.Y_d[1:], example.Y_out[:-1])

    def test_anchor_is_last_observed_target(self):
        X, Y = sample_rows(12)

        example = make_windows(X, Y, 4, 3)[2]

        np.testing.assert_array_equal(example.anchor, Y[5])
        self.assertEqual(list(example.target_rows), [6, 7, 8])

    def test_too_short_rejected(self):
        X, Y = sample_rows(19)

        with self.assertRaises(ValueError):
            make_windows(X, Y, 10, 10)

    def test_object_examples_from_series(self):
        obj = load_catalog()[1]
        series = simulate(ScenarioConfig.seeded(0, duration=100.0), obj).series()
        embedding = BuiltinEncoder().encode(obj.description)

        examples = build_object_examples(series, obj, 3, 4, 2, embedding=embedding)

        self.assertEqual(len(examples), 34 - 6 + 1)
        self.assertEqual(examples[0].X_e.shape, (4, FUSED_WIDTH))
        self.assertEqual(examples[0].object_id, obj.id)
        np.testing.assert_array_equal(examples[0].Y_out, series.d[[12, 15]])


class AugmentNoiseTests(SimpleTestCase):
    def setUp(self):
        X, Y = sample_rows(30)
        self.examples = make_windows(fuse_embedding(X, np.ones(EMBEDDING_WIDTH)), Y, 5, 3)

    def test_count_doubles(self):
        self.assertEqual(len(augment_noise(self.examples, seed=1)), 2 * len(self.examples))

    def test_noise_bounded_and_embedding_untouched(self):
        augmented = augment_noise(self.examples, factor=0.05, seed=3)

        for source, noisy in zip(self.examples, augmented[len(self.examples):]):
            numeric, original = noisy.X_e[:, :NUMERIC_WIDTH], source.X_e[:, :NUMERIC_WIDTH]
            self.assertTrue(
                np.all(np.abs(numeric - original) <= 0.05 * np.abs(original) + 1e-15)
            )
            np.testing.assert_array_equal(
                noisy.X_e[:, NUMERIC_WIDTH:], source.X_e[:, NUMERIC_WIDTH:]
            )
            np.testing.assert_array_equal(noisy.Y_out, source.Y_out)

    def test_originals_unchanged(self):
        before = [example.X_e.copy() for example in self.examples]

        augment_noise(self.examples, seed=5)

        for example, original in zip(self.examples, before):
            np.testing.assert_array_equal(example.X_e, original)

    def test_zero_factor_copies_originals(self):
        augmented = augment_noise(self.examples, factor=0.0, seed=2)

        for source, copy in zip(self.examples, augmented[len(self.examples):]):
            np.testing.assert_array_equal(copy.X_e, source.X_e)

    def test_deterministic_given_seed(self):
        first = augment_noise(self.examples, seed=9)
        second = augment_noise(self.examples, seed=9)

        self.assertEqual(dataset_fingerprint(first), dataset_fingerprint(second))

    def test_invalid_factor_rejected(self):
        with self.assertRaises(ValueError):
            augment_noise(self.examples, factor=1.0)


class HoldoutSplitTests(SimpleTestCase):
    def setUp(self):
        self.per_object = {f"object_{k}": sample_examples(f"object_{k}", 100) for k in range(5)}

    def test_counts(self):
        train, test = holdout_split(self.per_object, "object_2")

        self.assertEqual((len(train), len(test)), (450, 50))
        self.assertTrue(all(example.object_id == "object_2" for example in test))

    def test_held_out_split_is_chronological(self):
        train, test = holdout_split(self.per_object, "object_4")

        own = [example.start for example in train if example.object_id == "object_4"]
        self.assertEqual(own, list(range(50)))
        self.assertEqual([example.start for example in test], list(range(50, 100)))

    def test_purge_drops_overlapping_windows(self):
        train, test = holdout_split(self.per_object, "object_0", purge_overlap=True)

        first_target = test[0].target_rows.start
        own = [example for example in train if example.object_id == "object_0"]
        self.assertTrue(all(example.target_rows.stop <= first_target for example in own))
        self.assertLess(len(own), 50)

    def test_every_object_can_be_held_out(self):
        for object_id in self.per_object:
            train, test = holdout_split(self.per_object, object_id)
            self.assertEqual({example.object_id for example in test}, {object_id})

    def test_unknown_object_rejected(self):
        with self.assertRaises(UnknownObjectError):
            holdout_split(self.per_object, "object_9")

    def test_single_object_rejected(self):
        with self.assertRaises(ValueError):
            holdout_split({"object_0": self.per_object["object_0"]}, "object_0")


class StandardizerTests(SimpleTestCase):
    def test_fit_apply_gives_zero_mean_unit_std(self):
        X, _ = sample_rows(200)
        X = X * 7.0 + 3.0

        scaled = Standardizer().fit(X).apply(X)

        self.assertTrue(np.all(np.abs(scaled.mean(axis=0)) < 1e-10))
        np.testing.assert_allclose(scaled.std(axis=0), 1.0, rtol=1e-10)

    def test_invert_apply_round_trip(self):
        X, _ = sample_rows(50)
        scaler = Standardizer().fit(X)

        np.testing.assert_allclose(scaler.invert(scaler.apply(X)), X, atol=1e-10)

    def test_constant_column_maps_to_zero(self):
        X = np.column_stack([np.full(10, 4.0), np.arange(10.0)])

        scaled = Standardizer().fit(X).apply(X)

        np.testing.assert_array_equal(scaled[:, 0], np.zeros(10))

    def test_selected_columns_only(self):
        X, _ = sample_rows(20, width=NUMERIC_WIDTH + 3)

        scaled = Standardizer(columns=NUMERIC_WIDTH).fit(X).apply(X)

        np.testing.assert_array_equal(scaled[:, NUMERIC_WIDTH:], X[:, NUMERIC_WIDTH:])

    def test_apply_before_fit_rejected(self):
        with self.assertRaises(NotFittedError):
            Standardizer().apply(np.zeros((2, 2)))

    def test_dict_round_trip(self):
        X, _ = sample_rows(20)
        scaler = Standardizer(columns=4).fit(X)

        restored = Standardizer.from_dict(scaler.as_dict())

        np.testing.assert_array_equal(restored.apply(X), scaler.apply(X))

    def test_standardized_arrays_keep_zero_start_token(self):
        X, Y = sample_rows(30)
        arrays = stack_examples(to_relative(make_windows(X, Y, 4, 3)))
        y_scaler = Standardizer().fit(arrays.Y_out)

        scaled = standardize_arrays(arrays, Standardizer().fit(arrays.X_e), y_scaler)

        np.testing.assert_array_equal(scaled.Y_d[:, 0], np.zeros((len(arrays), 2)))
        np.testing.assert_array_equal(scaled.Y_d[:, 1:], scaled.Y_out[:, :-1])


class RelativeTargetTests(SimpleTestCase):
    def test_targets_relative_to_anchor(self):
        X, Y = sample_rows(15)
        example = make_windows(X, Y, 5, 3)[1]

        relative = to_relative([example])[0]

        np.testing.assert_allclose(relative.Y_out, Y[6:9] - Y[5])
        np.testing.assert_array_equal(relative.Y_d[0], [0.0, 0.0])
        np.testing.assert_array_equal(relative.X_e, example.X_e)


class DumpTests(SimpleTestCase):
    def test_jsonl_round_trip_keeps_fingerprint(self):
        X, Y = sample_rows(20)
        examples = make_windows(X, Y, 4, 3, "raft")

        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "examples.jsonl"
            dump_examples(examples, path)
            restored = load_examples(path)

        self.assertEqual(dataset_fingerprint(restored), dataset_fingerprint(examples))
        np.testing.assert_array_equal(restored[3].anchor, examples[3].anchor)
