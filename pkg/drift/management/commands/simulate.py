from pathlib import Path

from drift.experiment import load_campaign
from drift.management.base import ExperimentCommand, exit_codes
from drift.simulator import export_series


class Command(ExperimentCommand):
    help = "Simulate a drift campaign and write one series CSV per object."

    def add_arguments(self, parser):
        parser.add_argument("--config", help="experiment configuration, JSON or YAML")
        parser.add_argument("--seed", type=int, help="seed of the environment fields")
        parser.add_argument("--out", help="output directory; series go to <out>/data")

    def handle(self, *args, **options):
        options.update(models=None, th=None)
        with exit_codes():
            config = self.load_config(options)
            config["data_source"] = "simulate"
            objects, series = load_campaign(config)
            directory = Path(config["output_dir"]) / "data"
            directory.mkdir(parents=True, exist_ok=True)
            for obj in objects:
                drift = series[obj.id]
                export_series(drift, directory / f"{obj.id}.csv")
                self.stdout.write(
                    f"{obj.id}: {len(drift)} rows, final drift "
                    f"({drift.d[-1, 0]:.2f}, {drift.d[-1, 1]:.2f}) m"
                )
        self.stdout.write(self.style.SUCCESS(f"Series written to {directory}"))
