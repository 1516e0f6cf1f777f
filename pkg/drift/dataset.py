"""From drift series to teacher-forced sequence examples.

Per object: numeric features at full rate, down-sampling by ``t_h``,
optional embedding fusion, then windows of ``encoder_length`` input rows
followed by ``decoder_length`` target rows. Windows never cross objects.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from drift.exceptions import NotFittedError, UnknownObjectError
from drift.physics import NUMERIC_WIDTH, feature_matrix, object_velocity
from drift.simulator import DriftSeries
from drift.text_encoder import EMBEDDING_WIDTH
from forecast.training import SequenceArrays

logger = logging.getLogger(__name__)

FUSED_WIDTH = NUMERIC_WIDTH + EMBEDDING_WIDTH
STD_FLOOR = 1e-8


@dataclass
class SequenceExample:
    X_e: np.ndarray
    Y_d: np.ndarray
    Y_out: np.ndarray
    object_id: str = ""
    start: int = 0
    anchor: np.ndarray = None

    @property
    def target_rows(self):
        """Down-sampled row indices covered by ``Y_out``."""
        first = self.start + len(self.X_e)
        return range(first, first + len(self.Y_out))


def downsample(series, t_h):
    if int(t_h) != t_h or t_h < 1:
        raise ValueError(f"time horizon must be a positive integer, got {t_h}")
    t_h = int(t_h)
    if isinstance(series, DriftSeries):
        return DriftSeries(
            series.t[::t_h], series.v_a[::t_h], series.v_w[::t_h], series.d[::t_h], series.object_id
        )
    return np.asarray(series)[::t_h]


def object_rows(series, obj):
    """Numeric features (N, 15) and drift targets (N, 2) of one object."""
    velocity = object_velocity(series.t, series.d)
    return feature_matrix(series.t, series.v_a, series.v_w, obj, velocity), np.asarray(series.d)


def fuse_embedding(rows, embedding):
    rows = np.asarray(rows, dtype=float)
    embedding = np.asarray(embedding, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != NUMERIC_WIDTH:
        raise ValueError(f"expected (N, {NUMERIC_WIDTH}) feature rows, got {rows.shape}")
    if embedding.shape != (EMBEDDING_WIDTH,):
        raise ValueError(f"expected a {EMBEDDING_WIDTH}-vector, got {embedding.shape}")
    return np.hstack([rows, np.broadcast_to(embedding, (len(rows), EMBEDDING_WIDTH))])


def teacher_forcing_input(Y_out):
    """Zero start token followed by the targets shifted one step."""
    Y_out = np.asarray(Y_out)
    Y_d = np.zeros_like(Y_out)
    Y_d[..., 1:, :] = Y_out[..., :-1, :]
    return Y_d


def make_windows(X, Y, encoder_length, decoder_length, object_id=""):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if encoder_length < 1 or decoder_length < 1:
        raise ValueError("encoder and decoder lengths must be at least 1")
    if len(X) != len(Y):
        raise ValueError(f"{len(X)} feature rows but {len(Y)} target rows")
    span = encoder_length + decoder_length
    if len(X) < span:
        raise ValueError(f"series of {len(X)} rows is shorter than one window ({span})")
    examples = []
    for i in range(len(X) - span + 1):
        Y_out = Y[i + encoder_length:i + span].copy()
        examples.append(
            SequenceExample(
                X_e=X[i:i + encoder_length].copy(),
                Y_d=teacher_forcing_input(Y_out),
                Y_out=Y_out,
                object_id=object_id,
                start=i,
                anchor=Y[i + encoder_length - 1].copy(),
            )
        )
    return examples


def build_object_examples(series, obj, t_h, encoder_length, decoder_length, embedding=None):
    X, Y = object_rows(series, obj)
    X, Y = downsample(X, t_h), downsample(Y, t_h)
    if embedding is not None:
        X = fuse_embedding(X, embedding)
    return make_windows(X, Y, encoder_length, decoder_length, obj.id)


def augment_noise(examples, factor=0.05, seed=0, numeric_width=NUMERIC_WIDTH):
    """Originals plus one copy with numeric inputs scaled by U[1 - factor, 1 + factor]."""
    if not 0 <= factor < 1:
        raise ValueError("noise factor must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    noisy = []
    for example in examples:
        X_e = example.X_e.copy()
        numeric = X_e[:, :numeric_width]
        numeric *= rng.uniform(1 - factor, 1 + factor, size=numeric.shape)
        noisy.append(replace(example, X_e=X_e))
    return list(examples) + noisy


def holdout_split(per_object, test_object_id, train_fraction=0.5, purge_overlap=False):
    """Other objects plus the chronological first part of the held-out one train the model."""
    if len(per_object) < 2:
        raise ValueError("the holdout split needs at least two objects")
    if test_object_id not in per_object:
        raise UnknownObjectError(f"unknown object {test_object_id!r}")
    held_out = sorted(per_object[test_object_id], key=lambda example: example.start)
    cut = int(len(held_out) * train_fraction)
    test = held_out[cut:]
    own_train = held_out[:cut]
    if purge_overlap and test:
        first_test_target = test[0].target_rows.start
        own_train = [
            example for example in own_train if example.target_rows.stop <= first_test_target
        ]
    train = [
        example
        for object_id, examples in per_object.items()
        if object_id != test_object_id
        for example in examples
    ]
    return train + own_train, test


class Standardizer:
    """Per-column mean/std scaling of selected columns of the last axis."""

    def __init__(self, columns=None, floor=STD_FLOOR):
        self.columns = columns
        self.floor = floor
        self.mean = None
        self.std = None

    @property
    def fitted(self):
        return self.mean is not None

    @property
    def _selected(self):
        return slice(None) if self.columns is None else slice(0, self.columns)

    def fit(self, data):
        data = np.asarray(data, dtype=float)
        flat = data.reshape(-1, data.shape[-1])[:, self._selected]
        if len(flat) == 0:
            raise ValueError("cannot fit a standardizer on empty data")
        self.mean = flat.mean(axis=0)
        self.std = np.maximum(flat.std(axis=0), self.floor)
        return self

    def _check(self, data):
        if not self.fitted:
            raise NotFittedError("standardizer has not been fitted")
        return np.array(data, dtype=float)

    def apply(self, data):
        data = self._check(data)
        columns = self._selected
        data[..., columns] = (data[..., columns] - self.mean) / self.std
        return data

    def invert(self, data):
        data = self._check(data)
        columns = self._selected
        data[..., columns] = data[..., columns] * self.std + self.mean
        return data

    def as_dict(self):
        return {
            "columns": self.columns,
            "floor": self.floor,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, payload):
        scaler = cls(payload["columns"], payload["floor"])
        scaler.mean = np.asarray(payload["mean"], dtype=float)
        scaler.std = np.asarray(payload["std"], dtype=float)
        return scaler


def to_relative(examples):
    """Targets as displacement from the last observed position."""
    relative = []
    for example in examples:
        Y_out = example.Y_out - example.anchor
        relative.append(replace(example, Y_out=Y_out, Y_d=teacher_forcing_input(Y_out)))
    return relative


def stack_examples(examples):
    if not examples:
        raise ValueError("no examples to stack")
    return SequenceArrays(
        X_e=np.stack([example.X_e for example in examples]),
        Y_d=np.stack([example.Y_d for example in examples]),
        Y_out=np.stack([example.Y_out for example in examples]),
    )


def standardize_arrays(arrays, x_scaler, y_scaler):
    """Scaled copy; the decoder input keeps its zero start token."""
    Y_out = y_scaler.apply(arrays.Y_out)
    return SequenceArrays(x_scaler.apply(arrays.X_e), teacher_forcing_input(Y_out), Y_out)


def dataset_fingerprint(examples):
    digest = hashlib.sha256()
    for example in examples:
        digest.update(example.object_id.encode())
        digest.update(np.int64(example.start).tobytes())
        for array in (example.X_e, example.Y_out):
            digest.update(np.ascontiguousarray(array, dtype=float).tobytes())
    return digest.hexdigest()


def dump_examples(examples, path):
    with open(path, "w") as stream:
        for example in examples:
            record = {
                "object_id": example.object_id,
                "start": example.start,
                "X_e": example.X_e.tolist(),
                "Y_d": example.Y_d.tolist(),
                "Y_out": example.Y_out.tolist(),
                "anchor": None if example.anchor is None else example.anchor.tolist(),
            }
            stream.write(json.dumps(record) + "\n")
    return path


def load_examples(path):
    examples = []
    with open(path) as stream:
        for line in stream:
            if not line.strip():
                continue
            record = json.loads(line)
            examples.append(
                SequenceExample(
                    X_e=np.asarray(record["X_e"], dtype=float),
                    Y_d=np.asarray(record["Y_d"], dtype=float),
                    Y_out=np.asarray(record["Y_out"], dtype=float),
                    object_id=record["object_id"],
                    start=record["start"],
                    anchor=None if record["anchor"] is None else np.asarray(record["anchor"]),
                )
            )
    return examples
