from django.conf import settings
from django.core.management.base import BaseCommand

from drift.catalog import load_catalog
from drift.management.base import exit_codes
from drift.models import LeewayObject


class Command(BaseCommand):
    help = "Create or update leeway objects from a catalog JSON file."

    def add_arguments(self, parser):
        parser.add_argument(
            "catalog",
            nargs="?",
            help="catalog file, defaults to the DRIFTCAST catalog setting",
        )

    def handle(self, *args, **options):
        path = options["catalog"] or settings.DRIFTCAST["CATALOG_PATH"]
        with exit_codes():
            objects = load_catalog(path)
        for spec in objects:
            _, created = LeewayObject.objects.update_or_create(
                slug=spec.id, defaults=LeewayObject.spec_defaults(spec)
            )
            self.stdout.write(f"{'Created' if created else 'Updated'} {spec.id}")
        self.stdout.write(self.style.SUCCESS(f"{len(objects)} objects loaded from {path}"))
