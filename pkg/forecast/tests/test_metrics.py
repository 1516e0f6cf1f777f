import math

import numpy as np
from django.test import SimpleTestCase

from forecast.metrics import evaluate


class EvaluateTests(SimpleTestCase):
    def test_known_values(self):
        report = evaluate([[1.0, 2.0], [3.0, 4.0]], [[1.0, 1.0], [2.0, 2.0]])

        self.assertAlmostEqual(report.rmse, math.sqrt(6.0 / 4.0))
        self.assertAlmostEqual(report.mae, 1.0)
        self.assertAlmostEqual(report.mape, (0 + 100 + 50 + 100) / 4.0)
        self.assertEqual(report.count, 4)

    def test_perfect_prediction(self):
        truth = np.random.default_rng(0).normal(size=(5, 2))

        report = evaluate(truth, truth)

        self.assertEqual(report.rmse, 0.0)
        self.assertEqual(report.mae, 0.0)
        self.assertEqual(report.mape, 0.0)

    def test_rmse_never_below_mae(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            report = evaluate(rng.normal(size=(7, 2)), rng.normal(size=(7, 2)))

            self.assertGreaterEqual(report.rmse, report.mae)

    def test_near_zero_targets_excluded_from_mape(self):
        report = evaluate([1.0, 2.0, 3.0], [0.0, 1.0, 3.0])

        self.assertEqual(report.mape_excluded, 1)
        self.assertAlmostEqual(report.mape, 50.0)

    def test_all_zero_targets_give_nan_mape(self):
        report = evaluate([1.0, 2.0], [0.0, 0.0])

        self.assertTrue(math.isnan(report.mape))
        self.assertEqual(report.mape_excluded, 2)

    def test_shape_mismatch_rejected(self):
        with self.assertRaises(ValueError):
            evaluate(np.zeros((3, 2)), np.zeros((2, 2)))

    def test_empty_input_rejected(self):
        with self.assertRaises(ValueError):
            evaluate(np.zeros((0, 2)), np.zeros((0, 2)))

    def test_hand_computed_example(self):
        report = evaluate([110.0, 180.0], [100.0, 200.0])

        self.assertAlmostEqual(report.mae, 15.0)
        self.assertAlmostEqual(report.mape, 10.0)
        self.assertAlmostEqual(report.rmse, math.sqrt(250.0))
