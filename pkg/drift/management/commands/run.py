from drift.experiment import record_run, run_experiment
from drift.management.base import ExperimentCommand, exit_codes


class Command(ExperimentCommand):
    """Train and evaluate every (time horizon, held-out object, model) cell"""

    help = "Run a full experiment: build datasets, train, forecast and evaluate."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--fail-fast",
            action="store_true",
            help="stop at the first failing cell instead of recording it",
        )
        parser.add_argument(
            "--record",
            action="store_true",
            help="store the run and its metrics in the database",
        )

    def handle(self, *args, **options):
        with exit_codes():
            config = self.load_config(options)
            result = run_experiment(config, self.stage, fail_fast=options["fail_fast"])
        self.report(result)
        if options["record"]:
            run = record_run(result)
            self.stdout.write(self.style.SUCCESS(f"Recorded run {run.id}"))
