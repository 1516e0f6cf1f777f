"""Synthetic geometry silhouettes with analytic drag/lift labels.

Shapes are built as polygons symmetric about the flow axis (+x), rotated
by the angle of attack and rasterized with Pillow. Labels come from an
analytic proxy, not from a flow solver:

* ``C_D = K_DRAG * frontal extent / characteristic length`` where the
  frontal extent is the cross-flow (y) extent of the rotated outline and the
  characteristic length is the diameter of its bounding circle;
* ``C_L = K_LIFT * 2 I_xy / (I_xx + I_yy)`` from the centroidal second
  moments of area, which vanishes for outlines symmetric about the flow axis.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image, ImageDraw

logger = logging.getLogger(__name__)

K_DRAG = 1.5
K_LIFT = 1.0
SHAPE_FAMILIES = ("ellipse", "half-circle", "rhombus", "rectangle", "square", "triangle")
DEFAULT_CORPUS_SIZE = 179
LABELS_FILE = "labels.csv"


@dataclass
class GeometryImage:
    pixels: np.ndarray
    label: tuple = None
    family: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("pixels must be normalized to [0, 1]")


def outline(family, aspect=1.0, points=64):
    """Unrotated outline of ``family`` with its symmetry axis along x."""
    if family == "ellipse":
        theta = np.linspace(0.0, 2.0 * np.pi, points, endpoint=False)
        return np.column_stack([np.cos(theta), aspect * np.sin(theta)])
    if family == "half-circle":
        theta = np.linspace(-0.5 * np.pi, 0.5 * np.pi, points)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if family == "rhombus":
        return np.array([[1.0, 0.0], [0.0, aspect], [-1.0, 0.0], [0.0, -aspect]])
    if family == "rectangle":
        return np.array([[1.0, -aspect], [1.0, aspect], [-1.0, aspect], [-1.0, -aspect]])
    if family == "square":
        return np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]])
    if family == "triangle":
        return np.array([[1.0, 0.0], [-1.0, aspect], [-1.0, -aspect]])
    raise ValueError(f"unknown shape family {family!r}; expected one of {SHAPE_FAMILIES}")


def polygon_moments(vertices):
    """Area, centroid and centroidal second moments (x², y², xy) of a simple polygon."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    if abs(area) < 1e-12:
        raise ValueError("degenerate polygon with zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    sxx = ((x * x + x * xn + xn * xn) * cross).sum() / 12.0
    syy = ((y * y + y * yn + yn * yn) * cross).sum() / 12.0
    sxy = ((x * yn + 2 * x * y + 2 * xn * yn + xn * y) * cross).sum() / 24.0
    return {
        "area": abs(area),
        "centroid": (cx, cy),
        "x2": abs(sxx - area * cx * cx),
        "y2": abs(syy - area * cy * cy),
        "xy": np.sign(area) * (sxy - area * cx * cy),
    }


def proxy_coefficients(vertices):
    moments = polygon_moments(vertices)
    centered = vertices - np.asarray(moments["centroid"])
    radius = np.linalg.norm(centered, axis=1).max()
    frontal = vertices[:, 1].max() - vertices[:, 1].min()
    drag = K_DRAG * frontal / (2.0 * radius)
    lift = K_LIFT * 2.0 * moments["xy"] / (moments["x2"] + moments["y2"])
    if abs(lift) < 1e-12:
        lift = 0.0
    return float(drag), float(lift)


def rotate(vertices, angle_deg):
    angle = np.deg2rad(angle_deg)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    return vertices @ rotation.T


def rasterize(vertices, image_size):
    half = image_size / 2.0
    points = [(half + x * (half - 1), half - y * (half - 1)) for x, y in vertices]
    canvas = Image.new("L", (image_size, image_size), 0)
    ImageDraw.Draw(canvas).polygon(points, fill=255)
    return np.asarray(canvas, dtype=float) / 255.0


def synth_geometry(family, scale, angle, seed=0, image_size=32, aspect=None):
    """Rasterize one silhouette and label it with the analytic proxy.

    ``scale`` is the bounding-circle radius as a fraction of half the image;
    ``aspect`` defaults to a seeded draw in [0.35, 0.95].
    """
    if not 0.0 < scale <= 1.0 or scale * image_size / 2.0 < 2.0:
        raise ValueError(f"degenerate scale {scale} for a {image_size}px image")
    if aspect is None:
        aspect = float(np.random.default_rng(seed).uniform(0.35, 0.95))
    if aspect <= 0:
        raise ValueError(f"aspect must be positive, got {aspect}")
    vertices = rotate(outline(family, aspect), angle)
    vertices = vertices - vertices.mean(axis=0)
    centroid = np.asarray(polygon_moments(vertices)["centroid"])
    vertices = vertices - centroid
    vertices = vertices / np.linalg.norm(vertices, axis=1).max() * scale
    return GeometryImage(
        pixels=rasterize(vertices, image_size),
        label=proxy_coefficients(vertices),
        family=family,
        meta={"scale": scale, "angle": angle, "aspect": aspect, "seed": seed},
    )


def render_silhouette(recipe, image_size=32):
    """Image for a catalog object's ``silhouette`` recipe."""
    return synth_geometry(
        recipe["family"],
        recipe.get("scale", 0.8),
        recipe.get("angle", 0.0),
        seed=recipe.get("seed", 0),
        image_size=image_size,
        aspect=recipe.get("aspect"),
    )


def synth_corpus(
    count=DEFAULT_CORPUS_SIZE,
    image_size=32,
    seed=0,
    angle_range=(-30.0, 30.0),
    scale_range=(0.55, 0.95),
):
    rng = np.random.default_rng(seed)
    corpus = []
    for index in range(count):
        family = SHAPE_FAMILIES[index % len(SHAPE_FAMILIES)]
        corpus.append(
            synth_geometry(
                family,
                scale=float(rng.uniform(*scale_range)),
                angle=float(rng.uniform(*angle_range)),
                seed=int(rng.integers(2**31)),
                image_size=image_size,
            )
        )
    logger.debug("synthesized %d geometry images at %dpx", count, image_size)
    return corpus


def save_corpus(corpus, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for index, item in enumerate(corpus):
        name = f"{item.family or 'shape'}_{index:03d}.png"
        pixels = np.rint(item.pixels * 255.0).astype(np.uint8)
        Image.fromarray(pixels, mode="L").save(directory / name)
        drag, lift = item.label if item.label is not None else (np.nan, np.nan)
        rows.append({"file": name, "C_D": drag, "C_L": lift})
    pd.DataFrame(rows, columns=["file", "C_D", "C_L"]).to_csv(
        directory / LABELS_FILE, index=False, float_format="%.17g"
    )
    return directory / LABELS_FILE


def load_corpus(directory):
    directory = Path(directory)
    labels = pd.read_csv(directory / LABELS_FILE)
    missing = {"file", "C_D", "C_L"} - set(labels.columns)
    if missing:
        raise ValueError(f"{LABELS_FILE} lacks columns {sorted(missing)}")
    corpus = []
    for row in labels.itertuples(index=False):
        with Image.open(directory / row.file) as image:
            pixels = np.asarray(image.convert("L"), dtype=float) / 255.0
        corpus.append(
            GeometryImage(
                pixels=pixels,
                label=(float(row.C_D), float(row.C_L)),
                family=str(row.file).rsplit("_", 1)[0],
            )
        )
    return corpus
