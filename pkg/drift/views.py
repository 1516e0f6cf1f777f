from drf_spectacular.types import OpenApiTypes
from drf_spectacular.utils import OpenApiParameter, extend_schema
from rest_framework import mixins, status
from rest_framework.decorators import action
from rest_framework.pagination import PageNumberPagination
from rest_framework.response import Response
from rest_framework.viewsets import GenericViewSet, ReadOnlyModelViewSet

from drift.models import ExperimentRun, LeewayObject, MetricRecord
from drift.permissions import IsAdminOrReadOnly
from drift import physics
from drift.serializers import (
    ExperimentRunDetailSerializer,
    ExperimentRunSerializer,
    LeewayObjectListSerializer,
    LeewayObjectSerializer,
    MetricRecordSerializer,
)

FORCE_PARAMETERS = ("wind_x", "wind_y", "current_x", "current_y", "velocity_x", "velocity_y")


class LeewayObjectViewSet(
    mixins.ListModelMixin,
    mixins.CreateModelMixin,
    mixins.RetrieveModelMixin,
    GenericViewSet,
):
    queryset = LeewayObject.objects.all()
    serializer_class = LeewayObjectSerializer
    permission_classes = (IsAdminOrReadOnly,)

    def get_queryset(self):
        name = self.request.query_params.get("name")

        queryset = self.queryset

        if name:
            queryset = queryset.filter(name__icontains=name)

        return queryset

    def get_serializer_class(self):
        if self.action == "list":
            return LeewayObjectListSerializer

        return LeewayObjectSerializer

    @extend_schema(
        parameters=[
            OpenApiParameter(
                "name",
                type=OpenApiTypes.STR,
                description="Filter by object name (ex. ?name=inflatable)",
            ),
        ]
    )
    def list(self, request, *args, **kwargs):
        return super().list(request, *args, **kwargs)

    @extend_schema(
        parameters=[
            OpenApiParameter(
                parameter,
                type=OpenApiTypes.FLOAT,
                description=f"{parameter} in m/s, default 0 (ex. ?{parameter}=1.5)",
            )
            for parameter in FORCE_PARAMETERS
        ]
    )
    @action(methods=["GET"], detail=True, url_path="forces")
    def forces(self, request, pk=None):
        """Drag and lift on the object for one wind, current and velocity"""
        leeway_object = self.get_object()
        try:
            values = {
                parameter: float(request.query_params.get(parameter, 0.0))
                for parameter in FORCE_PARAMETERS
            }
            state = physics.forces(
                (values["wind_x"], values["wind_y"]),
                (values["current_x"], values["current_y"]),
                leeway_object.to_spec(),
                (values["velocity_x"], values["velocity_y"]),
            )
        except ValueError as error:
            return Response({"detail": str(error)}, status=status.HTTP_400_BAD_REQUEST)

        return Response(
            {
                "D_a": state.D_a.tolist(),
                "D_w": state.D_w.tolist(),
                "L_a": state.L_a.tolist(),
                "L_w": state.L_w.tolist(),
                "net": state.net.tolist(),
                "gamma": state.gamma,
            },
            status=status.HTTP_200_OK,
        )


class ExperimentRunViewSet(ReadOnlyModelViewSet):
    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer
    permission_classes = (IsAdminOrReadOnly,)

    def get_queryset(self):
        if self.action == "retrieve":
            return self.queryset.prefetch_related("metrics")

        return self.queryset

    def get_serializer_class(self):
        if self.action == "retrieve":
            return ExperimentRunDetailSerializer

        return ExperimentRunSerializer


class MetricPagination(PageNumberPagination):
    page_size = 50
    max_page_size = 500


class MetricRecordViewSet(mixins.ListModelMixin, GenericViewSet):
    queryset = MetricRecord.objects.all().select_related("run")
    serializer_class = MetricRecordSerializer
    pagination_class = MetricPagination
    permission_classes = (IsAdminOrReadOnly,)

    def get_queryset(self):
        model = self.request.query_params.get("model")
        t_h = self.request.query_params.get("t_h")
        leeway_object = self.request.query_params.get("object")
        protocol = self.request.query_params.get("protocol")

        queryset = self.queryset

        if model:
            queryset = queryset.filter(model=model)

        if t_h:
            queryset = queryset.filter(t_h=int(t_h))

        if leeway_object:
            queryset = queryset.filter(leeway_object=leeway_object)

        if protocol:
            queryset = queryset.filter(protocol=protocol)

        return queryset

    @extend_schema(
        parameters=[
            OpenApiParameter(
                "model",
                type=OpenApiTypes.STR,
                description="Filter by forecasting model (ex. ?model=mm_transformer)",
            ),
            OpenApiParameter(
                "t_h",
                type=OpenApiTypes.INT,
                description="Filter by time horizon in seconds (ex. ?t_h=5)",
            ),
            OpenApiParameter(
                "object",
                type=OpenApiTypes.STR,
                description="Filter by held-out object (ex. ?object=banana_boat)",
            ),
            OpenApiParameter(
                "protocol",
                type=OpenApiTypes.STR,
                description="multistep or onestep (ex. ?protocol=onestep)",
            ),
        ]
    )
    def list(self, request, *args, **kwargs):
        return super().list(request, *args, **kwargs)
