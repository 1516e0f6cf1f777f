from collections.abc import Mapping

from django.conf import settings
from rest_framework import serializers
from rest_framework.exceptions import ValidationError

from drift.models import (
    FORECAST_MODELS,
    ExperimentRun,
    LeewayObject,
    MetricRecord,
)


class LeewayObjectSerializer(serializers.ModelSerializer):
    def validate(self, attrs):
        data = super(LeewayObjectSerializer, self).validate(attrs=attrs)
        LeewayObject.validate_values(attrs, ValidationError)
        return data

    class Meta:
        model = LeewayObject
        fields = (
            "id",
            "slug",
            "name",
            "description",
            "mass",
            "area_air",
            "area_water",
            "drag_air",
            "lift_air",
            "drag_water",
            "lift_water",
            "submersion_rate",
            "silhouette",
        )
        read_only_fields = ("submersion_rate",)


class LeewayObjectListSerializer(LeewayObjectSerializer):
    class Meta:
        model = LeewayObject
        fields = ("id", "slug", "name", "mass", "submersion_rate")


class MetricRecordSerializer(serializers.ModelSerializer):
    def validate(self, attrs):
        data = super(MetricRecordSerializer, self).validate(attrs=attrs)
        MetricRecord.validate_errors(attrs["rmse"], attrs["mae"], ValidationError)
        return data

    class Meta:
        model = MetricRecord
        fields = (
            "id",
            "run",
            "leeway_object",
            "model",
            "t_h",
            "protocol",
            "rmse",
            "mae",
            "mape",
            "mape_excluded",
            "count",
        )


class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = ("id", "created_at", "config_hash", "seed", "status", "output_dir")


class ExperimentRunDetailSerializer(ExperimentRunSerializer):
    metrics = MetricRecordSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = (
            "id",
            "created_at",
            "config_hash",
            "seed",
            "status",
            "output_dir",
            "config",
            "metrics",
        )


def _units(*values):
    return serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        min_length=1,
        default=lambda: list(values),
    )


class TrainingSerializer(serializers.Serializer):
    batch_size = serializers.IntegerField(min_value=1, default=32)
    learning_rate = serializers.FloatField(min_value=1e-12, default=1e-3)
    max_epochs = serializers.IntegerField(min_value=1, default=1000)
    patience = serializers.IntegerField(min_value=1, default=30)
    validation_fraction = serializers.FloatField(
        min_value=0.0, max_value=0.9, default=0.1
    )
    time_budget_s = serializers.FloatField(
        min_value=0.0, allow_null=True, default=None
    )


class RnnSerializer(TrainingSerializer):
    batch_size = serializers.IntegerField(min_value=1, default=64)
    units = _units(128, 64)


class TcnSerializer(TrainingSerializer):
    batch_size = serializers.IntegerField(min_value=1, default=64)
    filters = serializers.IntegerField(min_value=1, default=64)
    kernel = serializers.IntegerField(min_value=1, default=11)
    dilations = _units(32, 16, 8)


class StsLstmSerializer(TrainingSerializer):
    encoder_units = _units(64, 64)
    decoder_units = _units(64, 64)

    def validate(self, attrs):
        encoder, decoder = attrs["encoder_units"], attrs["decoder_units"]
        if len(decoder) > len(encoder) or decoder != encoder[-len(decoder):]:
            raise ValidationError(
                {"decoder_units": "decoder layers must match the top encoder layers"}
            )
        return attrs


class AttentionLstmSerializer(StsLstmSerializer):
    decoder_units = _units(64)
    d_k = serializers.IntegerField(min_value=1, default=32)


class TransformerSerializer(TrainingSerializer):
    d_model = serializers.IntegerField(min_value=2, default=64)
    heads = serializers.IntegerField(min_value=1, default=4)
    d_k = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    ffn_units = serializers.IntegerField(min_value=1, default=128)
    encoder_blocks = serializers.IntegerField(min_value=1, default=1)
    decoder_blocks = serializers.IntegerField(min_value=1, default=1)
    symmetric_residuals = serializers.BooleanField(default=False)

    def validate_d_model(self, value):
        if value % 2:
            raise ValidationError("d_model must be even for the positional encoding")
        return value

    def validate(self, attrs):
        if attrs["d_k"] is None and attrs["d_model"] % attrs["heads"]:
            raise ValidationError(
                {"heads": "heads must divide d_model when d_k is not set"}
            )
        return attrs


class DefaultsFilledSerializer(serializers.Serializer):
    """Nested sections that are left out still get their defaults."""

    nested_sections = ()

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            data = dict(data)
            for name in self.nested_sections:
                data.setdefault(name, {})
        return super().to_internal_value(data)


class HyperparametersSerializer(DefaultsFilledSerializer):
    nested_sections = ("rnn", "tcn", "sts_lstm", "mm_attention_lstm", "mm_transformer")

    rnn = RnnSerializer(required=False)
    tcn = TcnSerializer(required=False)
    sts_lstm = StsLstmSerializer(required=False)
    mm_attention_lstm = AttentionLstmSerializer(required=False)
    mm_transformer = TransformerSerializer(required=False)


class ScenarioSerializer(serializers.Serializer):
    duration = serializers.FloatField(min_value=1e-9, default=1500.0)
    timestep = serializers.FloatField(min_value=1e-9, default=1.0)
    substeps = serializers.IntegerField(min_value=1, default=10)
    wind_mean = serializers.FloatField(min_value=0.0, default=1.55)
    current_mean = serializers.FloatField(min_value=0.0, default=0.09)
    anemometer_height = serializers.FloatField(min_value=1e-9, default=2.0066)
    shear_exponent = serializers.FloatField(min_value=0.0, default=0.10)

    def validate(self, attrs):
        if attrs["duration"] < attrs["timestep"]:
            raise ValidationError({"duration": "duration must cover at least one timestep"})
        return attrs


def _setting(key):
    return lambda: settings.DRIFTCAST[key]


class ExperimentConfigSerializer(DefaultsFilledSerializer):
    nested_sections = ("scenario", "hyperparameters")

    data_source = serializers.ChoiceField(
        choices=("simulate", "csv"), default="simulate"
    )
    csv_dir = serializers.CharField(allow_blank=True, default="")
    wind_height = serializers.FloatField(
        min_value=1e-9, allow_null=True, default=None
    )
    catalog = serializers.CharField(default=_setting("CATALOG_PATH"))
    text_backend = serializers.ChoiceField(
        choices=("builtin", "file"), default=_setting("TEXT_BACKEND")
    )
    embedding_file = serializers.CharField(
        allow_blank=True, default=_setting("EMBEDDING_FILE")
    )
    time_horizons = serializers.ListField(
        child=serializers.IntegerField(min_value=1),
        min_length=1,
        default=lambda: [1, 3, 5, 10],
    )
    encoder_length = serializers.IntegerField(min_value=1, default=10)
    decoder_length = serializers.IntegerField(min_value=1, default=10)
    models = serializers.ListField(
        child=serializers.ChoiceField(choices=FORECAST_MODELS),
        min_length=1,
        default=lambda: list(FORECAST_MODELS),
    )
    objects = serializers.ListField(
        child=serializers.CharField(), default=list
    )
    seed = serializers.IntegerField(min_value=0, default=_setting("SEED"))
    output_dir = serializers.CharField(default=_setting("OUTPUT_DIR"))
    relative_targets = serializers.BooleanField(default=True)
    augment = serializers.BooleanField(default=True)
    augment_factor = serializers.FloatField(
        min_value=0.0, max_value=0.99, default=0.05
    )
    train_fraction = serializers.FloatField(
        min_value=0.1, max_value=0.9, default=0.5
    )
    purge_overlap = serializers.BooleanField(default=True)
    scenario = ScenarioSerializer(required=False)
    hyperparameters = HyperparametersSerializer(required=False)

    def validate(self, attrs):
        if attrs["data_source"] == "csv" and not attrs["csv_dir"]:
            raise ValidationError({"csv_dir": "csv data needs a directory of series files"})
        if attrs["text_backend"] == "file" and not attrs["embedding_file"]:
            raise ValidationError(
                {"embedding_file": "the file text backend needs an embedding file"}
            )
        for field in ("time_horizons", "models", "objects"):
            if len(set(attrs[field])) != len(attrs[field]):
                raise ValidationError({field: "values must be unique"})
        return attrs
