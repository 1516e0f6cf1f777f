"""Mini-batch training loop with validation early stopping.

Every trainable model supplies a ``batch_loss(indices)`` closure that
returns a scalar loss Tensor for the given example indices; the loop
owns shuffling, the validation split, Adam and the stop rules.
"""
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from forecast.exceptions import TrainingDivergedError
from forecast.optim import Adam
from forecast.tensor import no_grad

logger = logging.getLogger(__name__)


@dataclass
class TrainingConfig:
    max_epochs: int = 1000
    batch_size: int = 32
    learning_rate: float = 1e-3
    patience: int = 30
    validation_fraction: float = 0.1
    seed: int = 0
    time_budget_s: float = None
    restore_best: bool = True

    def __post_init__(self):
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""

    @property
    def epochs(self):
        return len(self.train_loss)

    @property
    def best_loss(self):
        monitored = self.val_loss or self.train_loss
        return monitored[self.best_epoch] if monitored else math.nan

    def as_dict(self):
        return {
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
        }


def split_indices(n_examples, validation_fraction, rng):
    order = rng.permutation(n_examples)
    n_val = int(round(n_examples * validation_fraction))
    if validation_fraction > 0 and n_examples >= 2:
        n_val = max(n_val, 1)
    n_val = min(n_val, n_examples - 1)
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def evaluate_loss(model, batch_loss, indices, batch_size):
    if len(indices) == 0:
        return math.nan
    was_training = model.training
    model.eval()
    total = 0.0
    with no_grad():
        for start in range(0, len(indices), batch_size):
            chunk = indices[start:start + batch_size]
            total += float(batch_loss(chunk).data) * len(chunk)
    model.train(was_training)
    return total / len(indices)


def fit(model, batch_loss, n_examples, config):
    if n_examples < 1:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = split_indices(n_examples, config.validation_fraction, rng)
    optimizer = Adam(model.parameters(), lr=config.learning_rate)
    history = TrainingHistory()
    best_state = model.state_dict()
    best_loss = math.inf
    last_finite = math.nan
    stale = 0
    started = time.monotonic()
    model.train()

    for epoch in range(config.max_epochs):
        order = rng.permutation(train_idx)
        epoch_total = 0.0
        for batch_number, start in enumerate(range(0, len(order), config.batch_size)):
            batch = order[start:start + config.batch_size]
            loss = batch_loss(batch)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingDivergedError(epoch, batch_number, last_finite)
            last_finite = value
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_total += value * len(batch)
        history.train_loss.append(epoch_total / len(order))

        if len(val_idx):
            monitored = evaluate_loss(model, batch_loss, val_idx, config.batch_size)
            history.val_loss.append(monitored)
        else:
            monitored = history.train_loss[-1]
        logger.debug(
            "epoch %d train %.6g monitored %.6g", epoch, history.train_loss[-1], monitored
        )

        if monitored < best_loss:
            best_loss = monitored
            history.best_epoch = epoch
            best_state = model.state_dict()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                history.stop_reason = "early_stopping"
                break
        if config.time_budget_s is not None and time.monotonic() - started > config.time_budget_s:
            history.stop_reason = "time_budget"
            break
    else:
        history.stop_reason = "max_epochs"

    if config.restore_best:
        model.load_state_dict(best_state)
    model.eval()
    model.fitted = True
    logger.info(
        "%s trained %d epochs, best epoch %d (loss %.6g), stopped on %s",
        type(model).__name__,
        history.epochs,
        history.best_epoch,
        best_loss,
        history.stop_reason,
    )
    return history


@dataclass
class SequenceArrays:
    """Stacked (batch, length, width) arrays for teacher-forced training."""

    X_e: np.ndarray
    Y_d: np.ndarray
    Y_out: np.ndarray

    def __len__(self):
        return len(self.X_e)

    def subset(self, indices):
        return SequenceArrays(self.X_e[indices], self.Y_d[indices], self.Y_out[indices])
