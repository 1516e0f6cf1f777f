from django.conf import settings
from django.core.management.base import BaseCommand

from drift.catalog import load_catalog
from drift.management.base import exit_codes
from drift.text_encoder import BuiltinEncoder, write_embedding_file


class Command(BaseCommand):
    help = (
        "Write builtin description embeddings of the catalog objects "
        "in the format the file text backend reads."
    )

    def add_arguments(self, parser):
        parser.add_argument("out", help="embedding CSV to write")
        parser.add_argument("--catalog", help="catalog file to embed")

    def handle(self, *args, **options):
        encoder = BuiltinEncoder()
        with exit_codes():
            objects = load_catalog(options["catalog"] or settings.DRIFTCAST["CATALOG_PATH"])
            vectors = {obj.id: encoder.encode(obj.description, obj.id) for obj in objects}
            write_embedding_file(vectors, options["out"])
        self.stdout.write(
            self.style.SUCCESS(f"{len(vectors)} embeddings written to {options['out']}")
        )
