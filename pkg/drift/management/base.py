"""Shared options and exit codes of the experiment commands."""
from contextlib import contextmanager

import yaml
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from drift.config import load_experiment_config
from drift.experiment import summary_table
from forecast.exceptions import TrainingDivergedError

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def split_list(value):
    if not value:
        return None
    return [item.strip() for item in value.split(",") if item.strip()]


@contextmanager
def exit_codes():
    """Translate pipeline failures into ``CommandError`` exit codes."""
    try:
        yield
    except ValidationError as error:
        raise CommandError(
            f"invalid configuration: {error.detail}", returncode=EXIT_CONFIG
        ) from error
    except TrainingDivergedError as error:
        raise CommandError(str(error), returncode=EXIT_DIVERGED) from error
    except OSError as error:
        raise CommandError(str(error), returncode=EXIT_IO) from error
    except (ValueError, yaml.YAMLError) as error:
        raise CommandError(str(error), returncode=EXIT_CONFIG) from error


class ExperimentCommand(BaseCommand):
    stage = "all"

    def add_arguments(self, parser):
        parser.add_argument(
            "--config", help="experiment configuration, JSON or YAML"
        )
        parser.add_argument("--seed", type=int, help="base seed of the run")
        parser.add_argument(
            "--models", help="comma-separated models (ex. curvefit,mm_transformer)"
        )
        parser.add_argument(
            "--th", help="comma-separated time horizons in seconds (ex. 1,5)"
        )
        parser.add_argument("--out", help="output directory of the run")

    def load_config(self, options):
        return load_experiment_config(
            options["config"],
            {
                "seed": options["seed"],
                "models": split_list(options["models"]),
                "time_horizons": split_list(options["th"]),
                "output_dir": options["out"],
            },
        )

    def report(self, result):
        for cell in result.failures:
            self.stdout.write(
                self.style.WARNING(
                    f"t_h={cell.t_h} {cell.object_id} {cell.model}: {cell.error}"
                )
            )
        if result.stage != "train":
            table = summary_table(result.metrics_frame())
            if not table.empty:
                self.stdout.write("Mean RMSE (m) over held-out objects:")
                self.stdout.write(table.to_string(float_format="%.4f"))
        message = (
            f"Run {result.status}: {len(result.cells)} cells, "
            f"{len(result.failures)} failed, output in {result.output_dir}"
        )
        if result.failures:
            self.stdout.write(self.style.WARNING(message))
        else:
            self.stdout.write(self.style.SUCCESS(message))
