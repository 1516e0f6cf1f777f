"""Lightweight CNN regressing drag and lift coefficients from silhouettes."""
import logging
from dataclasses import dataclass

import numpy as np

from forecast.exceptions import NotTrainedError, ShapeError
from forecast.nn import Conv2d, Linear, Module, ModuleList
from forecast.tensor import as_tensor, mae, max_pool2d, mse_loss, no_grad
from forecast.training import TrainingConfig, fit

logger = logging.getLogger(__name__)

MIN_IMAGES = 10


@dataclass
class CnnConfig:
    image_size: int = 128
    channels: tuple = (64, 32, 32)
    kernels: tuple = (5, 3, 3)
    dense_units: int = 32
    output_size: int = 2
    pool: int = 2
    seed: int = 0

    def __post_init__(self):
        self.channels = tuple(self.channels)
        self.kernels = tuple(self.kernels)
        if len(self.channels) != len(self.kernels):
            raise ValueError("channels and kernels must have the same length")
        self.shape_trace()

    def shape_trace(self):
        """Spatial size after every conv and pool, starting with the input size."""
        trace = [self.image_size]
        size = self.image_size
        for kernel in self.kernels:
            size = size - kernel + 1
            if size < 1:
                raise ShapeError("conv stack", (self.image_size,), self.kernels)
            trace.append(size)
            size //= self.pool
            if size < 1:
                raise ShapeError("conv stack", (self.image_size,), self.kernels)
            trace.append(size)
        return trace

    @property
    def flatten_size(self):
        side = self.shape_trace()[-1]
        return side * side * self.channels[-1]


class CoeffCNN(Module):
    kind = "coeff_cnn"

    def __init__(self, config):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        in_channels = (1,) + config.channels[:-1]
        self.convs = ModuleList(
            Conv2d(c_in, c_out, k, rng)
            for c_in, c_out, k in zip(in_channels, config.channels, config.kernels)
        )
        self.hidden = Linear(config.flatten_size, config.dense_units, rng)
        self.out = Linear(config.dense_units, config.output_size, rng)

    def forward(self, images):
        x = as_tensor(images)
        if x.ndim == 3:
            x = x.reshape(x.shape[0], 1, *x.shape[1:])
        size = self.config.image_size
        if x.ndim != 4 or x.shape[1:] != (1, size, size):
            raise ShapeError("cnn_forward", x.shape, (None, 1, size, size))
        for conv in self.convs:
            x = max_pool2d(conv(x).relu(), self.config.pool)
        x = x.reshape(x.shape[0], -1)
        return self.out(self.hidden(x).relu())


def cnn_forward(model, image):
    """Predicted (C_D, C_L) for one H×W image."""
    with no_grad():
        return model(np.asarray(image, dtype=float)[None])[0].data.copy()


def images_and_labels(corpus):
    images = np.stack([item.pixels for item in corpus])
    labels = np.array([item.label for item in corpus], dtype=float)
    return images, labels


def cnn_scores(model, images, labels):
    with no_grad():
        prediction = model(images).data
    diff = prediction - labels
    return {"mse": float(np.mean(diff * diff)), "mae": mae(prediction, labels)}


def cnn_train(model, images, labels, config=None, min_images=MIN_IMAGES):
    """Fit on (N, H, W) images against (N, 2) labels with MSE and early stopping.

    Lowering ``min_images`` is only meant for capacity checks on tiny sets.
    """
    images = np.asarray(images, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(images) == 0:
        raise ValueError("cannot train the CNN on an empty dataset")
    if len(images) != len(labels):
        raise ShapeError("cnn_train", images.shape, labels.shape)
    if len(images) < min_images:
        raise ValueError(f"the CNN needs at least {min_images} images, got {len(images)}")
    config = config or TrainingConfig(max_epochs=200, batch_size=32, patience=30)

    def batch_loss(indices):
        return mse_loss(model(images[indices]), labels[indices])

    history = fit(model, batch_loss, len(images), config)
    scores = cnn_scores(model, images, labels)
    logger.info("CNN train MSE %.6g MAE %.6g", scores["mse"], scores["mae"])
    return history


def predict_object_coeffs(model, silhouettes):
    """Map object id to (C_D, C_L) predicted from its silhouette, clamped at zero."""
    if not model.fitted:
        raise NotTrainedError("the coefficient CNN has not been trained or loaded")
    predictions = {}
    for object_id, pixels in silhouettes.items():
        drag, lift = np.maximum(cnn_forward(model, pixels), 0.0)
        predictions[object_id] = (float(drag), float(lift))
    return predictions
