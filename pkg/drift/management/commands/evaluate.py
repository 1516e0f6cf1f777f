from drift.experiment import run_experiment
from drift.management.base import ExperimentCommand, exit_codes


class Command(ExperimentCommand):
    help = "Forecast and evaluate from the snapshots a previous train left in --out."
    stage = "evaluate"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--fail-fast", action="store_true")

    def handle(self, *args, **options):
        with exit_codes():
            config = self.load_config(options)
            result = run_experiment(config, self.stage, fail_fast=options["fail_fast"])
        self.report(result)
