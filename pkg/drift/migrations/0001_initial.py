# Generated by Django 4.1.5 on 2026-10-17 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("config_hash", models.CharField(max_length=64)),
                ("seed", models.IntegerField()),
                ("output_dir", models.CharField(max_length=1024)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("completed", "Completed"),
                            ("partial", "Partial"),
                            ("failed", "Failed"),
                        ],
                        max_length=16,
                    ),
                ),
                ("config", models.JSONField(default=dict)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
        migrations.CreateModel(
            name="LeewayObject",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("slug", models.SlugField(max_length=63, unique=True)),
                ("name", models.CharField(max_length=255)),
                ("description", models.TextField()),
                ("mass", models.FloatField()),
                ("area_air", models.FloatField()),
                ("area_water", models.FloatField()),
                ("drag_air", models.FloatField()),
                ("lift_air", models.FloatField()),
                ("drag_water", models.FloatField()),
                ("lift_water", models.FloatField()),
                ("silhouette", models.JSONField(blank=True, default=dict)),
            ],
            options={
                "ordering": ["slug"],
            },
        ),
        migrations.CreateModel(
            name="MetricRecord",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("leeway_object", models.CharField(max_length=63)),
                (
                    "model",
                    models.CharField(
                        choices=[
                            ("curvefit", "curvefit"),
                            ("persistence", "persistence"),
                            ("rnn", "rnn"),
                            ("tcn", "tcn"),
                            ("sts_lstm", "sts_lstm"),
                            ("mm_attention_lstm", "mm_attention_lstm"),
                            ("mm_transformer", "mm_transformer"),
                        ],
                        max_length=32,
                    ),
                ),
                ("t_h", models.PositiveIntegerField()),
                (
                    "protocol",
                    models.CharField(
                        choices=[
                            ("multistep", "Multi-step"),
                            ("onestep", "One-step"),
                        ],
                        default="multistep",
                        max_length=16,
                    ),
                ),
                ("rmse", models.FloatField()),
                ("mae", models.FloatField()),
                ("mape", models.FloatField(blank=True, null=True)),
                ("mape_excluded", models.PositiveIntegerField(default=0)),
                ("count", models.PositiveIntegerField(default=0)),
                (
                    "run",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="metrics",
                        to="drift.experimentrun",
                    ),
                ),
            ],
            options={
                "ordering": ["leeway_object", "t_h", "model"],
                "unique_together": {
                    ("run", "leeway_object", "model", "t_h", "protocol")
                },
            },
        ),
    ]
