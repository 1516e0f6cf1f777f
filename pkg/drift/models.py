from django.core.exceptions import ValidationError
from django.db import models

from drift.physics import ObjectSpec

FORECAST_MODELS = (
    "curvefit",
    "persistence",
    "rnn",
    "tcn",
    "sts_lstm",
    "mm_attention_lstm",
    "mm_transformer",
)
ONE_STEP_MODELS = ("curvefit", "persistence", "rnn", "tcn")


class LeewayObject(models.Model):
    NUMERIC_FIELDS = (
        "mass",
        "area_air",
        "area_water",
        "drag_air",
        "lift_air",
        "drag_water",
        "lift_water",
    )

    slug = models.SlugField(max_length=63, unique=True)
    name = models.CharField(max_length=255)
    description = models.TextField()
    mass = models.FloatField()
    area_air = models.FloatField()
    area_water = models.FloatField()
    drag_air = models.FloatField()
    lift_air = models.FloatField()
    drag_water = models.FloatField()
    lift_water = models.FloatField()
    silhouette = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ["slug"]

    @property
    def submersion_rate(self) -> float:
        return self.area_water / (self.area_water + self.area_air)

    @staticmethod
    def validate_values(values, error_to_raise):
        errors = {}
        if values.get("mass") is not None and values["mass"] <= 0:
            errors["mass"] = "mass must be positive"
        if values.get("area_air") is not None and values["area_air"] <= 0:
            errors["area_air"] = "wind-exposed area must be positive"
        if values.get("area_water") is not None and values["area_water"] < 0:
            errors["area_water"] = "submerged area must not be negative"
        for field in ("drag_air", "lift_air", "drag_water", "lift_water"):
            if values.get(field) is not None and values[field] < 0:
                errors[field] = f"{field} must not be negative"
        if errors:
            raise error_to_raise(errors)

    def clean(self):
        LeewayObject.validate_values(
            {field: getattr(self, field) for field in self.NUMERIC_FIELDS},
            ValidationError,
        )

    def save(
        self,
        force_insert=False,
        force_update=False,
        using=None,
        update_fields=None,
    ):
        self.full_clean()
        return super(LeewayObject, self).save(
            force_insert, force_update, using, update_fields
        )

    def to_spec(self):
        return ObjectSpec(
            id=self.slug,
            m_o=self.mass,
            A_a=self.area_air,
            A_w=self.area_water,
            C_D_air=self.drag_air,
            C_L_air=self.lift_air,
            C_D_water=self.drag_water,
            C_L_water=self.lift_water,
            description=self.description,
            name=self.name,
            silhouette=self.silhouette,
        )

    @staticmethod
    def spec_defaults(spec):
        return {
            "name": spec.name or spec.id,
            "description": spec.description,
            "mass": spec.m_o,
            "area_air": spec.A_a,
            "area_water": spec.A_w,
            "drag_air": spec.C_D_air,
            "lift_air": spec.C_L_air,
            "drag_water": spec.C_D_water,
            "lift_water": spec.C_L_water,
            "silhouette": spec.silhouette,
        }

    def __str__(self):
        return self.name


class ExperimentRun(models.Model):
    STATUS_CHOICES = (
        ("completed", "Completed"),
        ("partial", "Partial"),
        ("failed", "Failed"),
    )

    created_at = models.DateTimeField(auto_now_add=True)
    config_hash = models.CharField(max_length=64)
    seed = models.IntegerField()
    output_dir = models.CharField(max_length=1024)
    status = models.CharField(max_length=16, choices=STATUS_CHOICES)
    config = models.JSONField(default=dict)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.config_hash[:12]} ({self.status})"


class MetricRecord(models.Model):
    PROTOCOL_CHOICES = (
        ("multistep", "Multi-step"),
        ("onestep", "One-step"),
    )

    run = models.ForeignKey(
        ExperimentRun, on_delete=models.CASCADE, related_name="metrics"
    )
    leeway_object = models.CharField(max_length=63)
    model = models.CharField(
        max_length=32, choices=[(name, name) for name in FORECAST_MODELS]
    )
    t_h = models.PositiveIntegerField()
    protocol = models.CharField(
        max_length=16, choices=PROTOCOL_CHOICES, default="multistep"
    )
    rmse = models.FloatField()
    mae = models.FloatField()
    mape = models.FloatField(null=True, blank=True)
    mape_excluded = models.PositiveIntegerField(default=0)
    count = models.PositiveIntegerField(default=0)

    @staticmethod
    def validate_errors(rmse, mae, error_to_raise):
        if mae < 0:
            raise error_to_raise({"mae": "MAE must not be negative"})
        if rmse < mae * (1 - 1e-12):
            raise error_to_raise(
                {"rmse": f"RMSE ({rmse}) cannot be below MAE ({mae})"}
            )

    def clean(self):
        if self.t_h is not None and self.t_h < 1:
            raise ValidationError({"t_h": "time horizon must be at least 1"})
        MetricRecord.validate_errors(self.rmse, self.mae, ValidationError)

    def save(
        self,
        force_insert=False,
        force_update=False,
        using=None,
        update_fields=None,
    ):
        self.full_clean()
        return super(MetricRecord, self).save(
            force_insert, force_update, using, update_fields
        )

    def __str__(self):
        return f"{self.leeway_object} {self.model} t_h={self.t_h}"

    class Meta:
        unique_together = ("run", "leeway_object", "model", "t_h", "protocol")
        ordering = ["leeway_object", "t_h", "model"]
