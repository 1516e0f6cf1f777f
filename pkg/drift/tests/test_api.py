from django.contrib.auth import get_user_model
from django.test import TestCase
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from drift.models import LeewayObject
from drift.serializers import (
    ExperimentRunDetailSerializer,
    LeewayObjectListSerializer,
    LeewayObjectSerializer,
    MetricRecordSerializer,
)
from drift.tests.test_models import sample_leeway_object, sample_metric, sample_run

OBJECT_URL = reverse("drift:leewayobject-list")
RUN_URL = reverse("drift:experimentrun-list")
METRIC_URL = reverse("drift:metricrecord-list")


def detail_url(object_id):
    return reverse("drift:leewayobject-detail", args=[object_id])


def forces_url(object_id):
    return reverse("drift:leewayobject-forces", args=[object_id])


def object_payload(**params):
    defaults = {
        "slug": "new_raft",
        "name": "New raft",
        "description": "Grey raft with a flat floor",
        "mass": 3.0,
        "area_air": 1.5,
        "area_water": 0.15,
        "drag_air": 1.0,
        "lift_air": 0.2,
        "drag_water": 1.0,
        "lift_water": 0.2,
    }
    defaults.update(params)

    return defaults


class UnauthenticatedDriftApiTests(TestCase):
    def setUp(self):
        self.client = APIClient()

    def test_list_objects(self):
        sample_leeway_object()
        sample_leeway_object(slug="second_raft", name="Second raft")

        res = self.client.get(OBJECT_URL)

        objects = LeewayObject.objects.all()
        serializer = LeewayObjectListSerializer(objects, many=True)
        self.assertEqual(res.status_code, status.HTTP_200_OK)
        self.assertEqual(res.data, serializer.data)

    def test_create_object_forbidden(self):
        res = self.client.post(OBJECT_URL, object_payload(), format="json")

        self.assertEqual(res.status_code, status.HTTP_403_FORBIDDEN)


class AuthenticatedDriftApiTests(TestCase):
    def setUp(self):
        self.client = APIClient()
        self.user = get_user_model().objects.create_user(
            "forecaster",
            "forecaster@test.com",
            "testpass",
        )
        self.client.force_authenticate(self.user)

    def test_filter_objects_by_name(self):
        raft = sample_leeway_object(name="Orange inflatable")
        boat = sample_leeway_object(slug="banana_boat", name="Banana boat")

        res = self.client.get(OBJECT_URL, {"name": "inflatable"})

        serializer1 = LeewayObjectListSerializer(raft)
        serializer2 = LeewayObjectListSerializer(boat)
        self.assertIn(serializer1.data, res.data)
        self.assertNotIn(serializer2.data, res.data)

    def test_retrieve_object_detail(self):
        leeway_object = sample_leeway_object()

        res = self.client.get(detail_url(leeway_object.id))

        serializer = LeewayObjectSerializer(leeway_object)
        self.assertEqual(res.data, serializer.data)
        self.assertAlmostEqual(res.data["submersion_rate"], 1 / 11, places=12)

    def test_create_object_forbidden(self):
        res = self.client.post(OBJECT_URL, object_payload(), format="json")

        self.assertEqual(res.status_code, status.HTTP_403_FORBIDDEN)

    def test_forces(self):
        leeway_object = sample_leeway_object()

        res = self.client.get(
            forces_url(leeway_object.id), {"wind_x": -3.0, "wind_y": -4.0}
        )

        self.assertEqual(res.status_code, status.HTTP_200_OK)
        for name, expected in (("D_a", [-22.05, -29.40]), ("L_a", [-12.25, 9.1875])):
            for value, reference in zip(res.data[name], expected):
                self.assertAlmostEqual(value, reference, places=10)
        self.assertEqual(res.data["D_w"], [0.0, 0.0])
        self.assertAlmostEqual(res.data["gamma"], 1 / 11, places=12)

    def test_forces_bad_parameter(self):
        leeway_object = sample_leeway_object()

        res = self.client.get(forces_url(leeway_object.id), {"wind_x": "east"})

        self.assertEqual(res.status_code, status.HTTP_400_BAD_REQUEST)

    def test_retrieve_run_detail(self):
        run = sample_run()
        sample_metric(run)
        sample_metric(run, model="persistence", rmse=3.0, mae=2.0)

        res = self.client.get(reverse("drift:experimentrun-detail", args=[run.id]))

        serializer = ExperimentRunDetailSerializer(run)
        self.assertEqual(res.status_code, status.HTTP_200_OK)
        self.assertEqual(res.data, serializer.data)
        self.assertEqual(len(res.data["metrics"]), 2)

    def test_list_runs(self):
        sample_run()
        sample_run(status="partial")

        res = self.client.get(RUN_URL)

        self.assertEqual(len(res.data), 2)

    def test_filter_metrics(self):
        run = sample_run()
        sample_metric(run)
        sample_metric(run, t_h=5)
        sample_metric(run, model="persistence")
        sample_metric(run, model="persistence", protocol="onestep")
        sample_metric(run, leeway_object="banana_boat")

        cases = (
            ({"model": "persistence"}, 2),
            ({"t_h": 5}, 1),
            ({"protocol": "onestep"}, 1),
            ({"object": "banana_boat"}, 1),
            ({"model": "curvefit", "t_h": 1}, 2),
        )
        for params, count in cases:
            with self.subTest(params=params):
                res = self.client.get(METRIC_URL, params)
                self.assertEqual(res.data["count"], count)

    def test_metrics_are_paginated(self):
        run = sample_run()
        for t_h in range(1, 61):
            sample_metric(run, t_h=t_h)

        res = self.client.get(METRIC_URL)

        self.assertEqual(res.data["count"], 60)
        self.assertEqual(len(res.data["results"]), 50)
        self.assertIsNotNone(res.data["next"])


class AdminDriftApiTests(TestCase):
    def setUp(self):
        self.client = APIClient()
        self.user = get_user_model().objects.create_user(
            "admin", "admin@admin.com", "testpass", is_staff=True
        )
        self.client.force_authenticate(self.user)

    def test_create_object(self):
        res = self.client.post(OBJECT_URL, object_payload(), format="json")

        leeway_object = LeewayObject.objects.get(id=res.data["id"])
        self.assertEqual(res.status_code, status.HTTP_201_CREATED)
        self.assertEqual(leeway_object.slug, "new_raft")
        self.assertAlmostEqual(leeway_object.submersion_rate, 0.15 / 1.65, places=12)

    def test_create_object_with_negative_mass(self):
        res = self.client.post(OBJECT_URL, object_payload(mass=-1.0), format="json")

        self.assertEqual(res.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("mass", res.data)
        self.assertFalse(LeewayObject.objects.filter(slug="new_raft").exists())

    def test_runs_are_read_only(self):
        res = self.client.post(RUN_URL, {"seed": 1}, format="json")

        self.assertEqual(res.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)

    def test_metric_serializer_rejects_rmse_below_mae(self):
        run = sample_run()

        serializer = MetricRecordSerializer(
            data={
                "run": run.id,
                "leeway_object": "banana_boat",
                "model": "rnn",
                "t_h": 1,
                "protocol": "multistep",
                "rmse": 1.0,
                "mae": 2.0,
            }
        )

        self.assertFalse(serializer.is_valid())
        self.assertIn("rmse", serializer.errors)
