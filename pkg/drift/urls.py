from django.urls import path, include
from rest_framework import routers

from drift.views import (
    ExperimentRunViewSet,
    LeewayObjectViewSet,
    MetricRecordViewSet,
)

router = routers.DefaultRouter()
router.register("objects", LeewayObjectViewSet)
router.register("runs", ExperimentRunViewSet)
router.register("metrics", MetricRecordViewSet)

urlpatterns = [
    path("", include(router.urls))
]

app_name = "drift"
