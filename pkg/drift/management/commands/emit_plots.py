from django.core.management.base import BaseCommand

from drift.experiment import emit_plots
from drift.management.base import exit_codes


class Command(BaseCommand):
    help = "Write truth-vs-forecast plot series (and optional SVG) of a finished run."

    def add_arguments(self, parser):
        parser.add_argument("run_dir", help="output directory of a run")
        parser.add_argument("--svg", action="store_true", help="also draw SVG figures")

    def handle(self, *args, **options):
        with exit_codes():
            written = emit_plots(options["run_dir"], svg=options["svg"])
        for path in written:
            self.stdout.write(str(path))
        self.stdout.write(self.style.SUCCESS(f"{len(written)} plot files written"))
