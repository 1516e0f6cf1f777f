from drift.experiment import run_experiment
from drift.management.base import ExperimentCommand, exit_codes


class Command(ExperimentCommand):
    help = "Train every model of an experiment and save snapshots without evaluating."
    stage = "train"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--fail-fast", action="store_true")

    def handle(self, *args, **options):
        with exit_codes():
            config = self.load_config(options)
            result = run_experiment(config, self.stage, fail_fast=options["fail_fast"])
        self.report(result)
