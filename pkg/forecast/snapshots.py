"""Portable JSON snapshots of trained models.

Layout::

    {
      "format": "driftcast-snapshot",
      "version": 1,
      "model": "<kind>",
      "config": {...},
      "config_hash": "<sha256 of the canonical config JSON>",
      "seed": <int>,
      "tensors": {"<dotted name>": {"shape": [...], "data": [...]}},
      "extras": {...}
    }

Floats are written with ``repr`` precision so a load restores them bit for bit.
"""
import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np

from forecast.baselines import RNNBaseline, RnnConfig, TCNBaseline, TcnConfig
from forecast.cnn import CnnConfig, CoeffCNN
from forecast.lstm import LstmConfig, Seq2SeqLSTM
from forecast.transformer import Seq2SeqTransformer, TransformerConfig

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "driftcast-snapshot"
SNAPSHOT_VERSION = 1


def canonical_json(payload):
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def config_hash(config):
    if hasattr(config, "__dataclass_fields__"):
        config = asdict(config)
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def save_snapshot(model, path, extras=None):
    config = asdict(model.config)
    payload = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "model": model.kind,
        "config": config,
        "config_hash": config_hash(config),
        "seed": config.get("seed", 0),
        "tensors": {
            name: {"shape": list(value.shape), "data": value.ravel().tolist()}
            for name, value in model.state_dict().items()
        },
        "extras": extras or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, default=_jsonable))
    logger.debug("saved %s snapshot to %s", model.kind, path)
    return path


def read_snapshot(path):
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"{path} is not a model snapshot")
    if payload.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {payload.get('version')}")
    if config_hash(payload["config"]) != payload["config_hash"]:
        raise ValueError(f"{path}: config hash does not match its config")
    payload["tensors"] = {
        name: np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        for name, entry in payload["tensors"].items()
    }
    return payload


def build_model(kind, config):
    builders = {
        "sts_lstm": (Seq2SeqLSTM, LstmConfig),
        "mm_attention_lstm": (Seq2SeqLSTM, LstmConfig),
        "mm_transformer": (Seq2SeqTransformer, TransformerConfig),
        "rnn": (RNNBaseline, RnnConfig),
        "tcn": (TCNBaseline, TcnConfig),
        "coeff_cnn": (CoeffCNN, CnnConfig),
    }
    try:
        model_class, config_class = builders[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return model_class(config_class(**config))


def load_snapshot(path):
    """Rebuild the model stored at ``path``; returns (model, extras)."""
    payload = read_snapshot(path)
    model = build_model(payload["model"], payload["config"])
    model.load_state_dict(payload["tensors"])
    model.eval()
    return model, payload["extras"]
