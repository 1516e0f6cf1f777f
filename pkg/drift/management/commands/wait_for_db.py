import time

from django.db import connections
from django.db.utils import OperationalError
from django.core.management.base import BaseCommand


class Command(BaseCommand):
    """Pause until the database accepts connections"""

    help = "Wait for the database before migrating or recording runs."

    def add_arguments(self, parser):
        parser.add_argument(
            "--timeout", type=float, default=60.0, help="seconds before giving up"
        )

    def handle(self, *args, **options):
        self.stdout.write("Waiting for database...")
        deadline = time.monotonic() + options["timeout"]
        while True:
            try:
                connections["default"].ensure_connection()
                break
            except OperationalError:
                if time.monotonic() > deadline:
                    raise
                self.stdout.write("Database unavailable, waiting 1 second...")
                time.sleep(1)
        self.stdout.write(self.style.SUCCESS("Database available"))
