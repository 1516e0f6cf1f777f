from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from drift.catalog import load_catalog
from drift.management.base import exit_codes
from drift.models import LeewayObject
from forecast.cnn import (
    CnnConfig,
    CoeffCNN,
    cnn_scores,
    cnn_train,
    images_and_labels,
    predict_object_coeffs,
)
from forecast.geometry import (
    DEFAULT_CORPUS_SIZE,
    load_corpus,
    render_silhouette,
    save_corpus,
    synth_corpus,
)
from forecast.snapshots import save_snapshot
from forecast.training import TrainingConfig


class Command(BaseCommand):
    """Train the coefficient CNN and predict drag and lift for the catalog objects"""

    help = "Train the drag/lift coefficient CNN on geometry images."

    def add_arguments(self, parser):
        parser.add_argument("--corpus", help="directory of PNG images and labels.csv")
        parser.add_argument(
            "--corpus-size", type=int, default=DEFAULT_CORPUS_SIZE,
            help="synthetic images to draw when no corpus is given",
        )
        parser.add_argument("--image-size", type=int, default=32)
        parser.add_argument("--export-corpus", help="save the training images here")
        parser.add_argument("--epochs", type=int, default=200)
        parser.add_argument("--seed", type=int, default=settings.DRIFTCAST["SEED"])
        parser.add_argument("--out", help="snapshot path of the trained CNN")
        parser.add_argument("--catalog", help="objects whose coefficients are predicted")
        parser.add_argument(
            "--update",
            action="store_true",
            help="store predicted coefficients on the database objects",
        )

    def handle(self, *args, **options):
        seed = options["seed"]
        out = options["out"] or Path(settings.DRIFTCAST["OUTPUT_DIR"]) / "coeff_cnn.json"
        with exit_codes():
            if options["corpus"]:
                corpus = load_corpus(options["corpus"])
            else:
                corpus = synth_corpus(
                    options["corpus_size"], image_size=options["image_size"], seed=seed
                )
            if options["export_corpus"]:
                save_corpus(corpus, options["export_corpus"])
            images, labels = images_and_labels(corpus)
            image_size = images.shape[-1]
            model = CoeffCNN(CnnConfig(image_size=image_size, seed=seed))
            history = cnn_train(
                model,
                images,
                labels,
                TrainingConfig(max_epochs=options["epochs"], batch_size=32, seed=seed),
            )
            scores = cnn_scores(model, images, labels)
            save_snapshot(model, out, extras={"history": history.as_dict(), "scores": scores})
            objects = load_catalog(options["catalog"] or settings.DRIFTCAST["CATALOG_PATH"])
            silhouettes = {
                obj.id: render_silhouette(obj.silhouette, image_size).pixels
                for obj in objects
                if obj.silhouette
            }
            predictions = predict_object_coeffs(model, silhouettes)

        self.stdout.write(
            f"{len(corpus)} images, {history.epochs} epochs ({history.stop_reason}), "
            f"MSE {scores['mse']:.4g}, MAE {scores['mae']:.4g}"
        )
        for object_id, (drag, lift) in predictions.items():
            self.stdout.write(f"{object_id}: C_D {drag:.4f}, C_L {lift:.4f}")
            if options["update"]:
                for leeway_object in LeewayObject.objects.filter(slug=object_id):
                    leeway_object.drag_air = leeway_object.drag_water = drag
                    leeway_object.lift_air = leeway_object.lift_water = lift
                    leeway_object.save()
        self.stdout.write(self.style.SUCCESS(f"CNN snapshot written to {out}"))
