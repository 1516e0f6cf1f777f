"""One-step RNN and TCN baselines and the persistence forecast.

One-step models map an encoder window (batch, length, features) to the
next drift value. ``roll_forward`` turns them into multi-step forecasters
by appending a new feature row after every prediction.
"""
import logging
from dataclasses import dataclass

import numpy as np

from forecast.exceptions import NotTrainedError, ShapeError
from forecast.nn import BatchNorm1d, CausalConv1d, Linear, Module, ModuleList, RNNCell
from forecast.tensor import Tensor, as_tensor, mse_loss, no_grad
from forecast.training import fit

logger = logging.getLogger(__name__)


@dataclass
class RnnConfig:
    input_size: int
    units: tuple = (128, 64)
    output_size: int = 2
    seed: int = 0

    def __post_init__(self):
        self.units = tuple(self.units)


@dataclass
class TcnConfig:
    input_size: int
    filters: int = 64
    kernel: int = 11
    dilations: tuple = (32, 16, 8)
    output_size: int = 2
    seed: int = 0

    def __post_init__(self):
        self.dilations = tuple(self.dilations)
        if self.kernel < 1 or any(d < 1 for d in self.dilations):
            raise ValueError("kernel and dilations must be positive")


def _windows(x, width):
    x = as_tensor(x)
    if x.ndim == 2:
        x = x.reshape(1, *x.shape)
    if x.ndim != 3 or x.shape[-1] != width:
        raise ShapeError("one-step window", x.shape, (None, None, width))
    return x


class RNNBaseline(Module):
    kind = "rnn"

    def __init__(self, config):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        sizes = (config.input_size,) + config.units
        self.cells = ModuleList(
            RNNCell(sizes[i], sizes[i + 1], rng) for i in range(len(config.units))
        )
        self.head = Linear(config.units[-1], config.output_size, rng)

    def forward(self, x):
        x = _windows(x, self.config.input_size)
        batch, length, _ = x.shape
        states = [Tensor(np.zeros((batch, cell.hidden_size))) for cell in self.cells]
        for t in range(length):
            layer_input = x[:, t, :]
            for index, cell in enumerate(self.cells):
                states[index] = cell(layer_input, states[index])
                layer_input = states[index]
        return self.head(states[-1])


class TCNBaseline(Module):
    """Stack of dilated causal convolutions, each followed by batch norm and ReLU."""

    kind = "tcn"

    def __init__(self, config):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed)
        channels = (config.input_size,) + (config.filters,) * len(config.dilations)
        self.convs = ModuleList(
            CausalConv1d(channels[i], channels[i + 1], config.kernel, dilation, rng)
            for i, dilation in enumerate(config.dilations)
        )
        self.norms = ModuleList(BatchNorm1d(config.filters) for _ in config.dilations)
        self.head = Linear(config.filters, config.output_size, rng)

    def sequence_features(self, x):
        """Per-time-step features (batch, filters, length); step t sees inputs <= t only."""
        x = _windows(x, self.config.input_size).transpose(0, 2, 1)
        for conv, norm in zip(self.convs, self.norms):
            x = norm(conv(x)).relu()
        return x

    def forward(self, x):
        features = self.sequence_features(x)
        return self.head(features[:, :, -1])


def train_one_step(model, windows, targets, config):
    windows = np.asarray(windows, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if len(windows) == 0:
        raise ValueError("cannot train on an empty dataset")

    def batch_loss(indices):
        return mse_loss(model(windows[indices]), targets[indices])

    return fit(model, batch_loss, len(windows), config)


def predict_next(model, windows):
    if not model.fitted:
        raise NotTrainedError(f"{model.kind} has not been trained or loaded")
    with no_grad():
        return model(np.asarray(windows, dtype=float)).data.copy()


def roll_forward(model, window, steps, advance):
    """Recursive multi-step forecast from a one-step model.

    ``window`` is one (length, features) encoder window. After each
    prediction ``advance(step, prediction)`` must return the feature row
    that follows; the window slides by one row and the next step is
    predicted from it.
    """
    window = np.array(window, dtype=float)
    predictions = []
    for step in range(steps):
        prediction = predict_next(model, window[None])[0]
        predictions.append(prediction)
        if step + 1 < steps:
            row = np.asarray(advance(step, prediction), dtype=float)
            window = np.vstack([window[1:], row[None]])
    return np.array(predictions)


def persistence_forecast(history, steps):
    """Repeat the last observed per-step displacement ``steps`` times."""
    history = np.asarray(history, dtype=float)
    if len(history) < 2:
        raise ValueError("persistence needs at least two observed positions")
    last = history[-1]
    delta = history[-1] - history[-2]
    return last + np.arange(1, steps + 1)[:, None] * delta
