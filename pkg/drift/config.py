"""Experiment configuration files (JSON, or YAML by suffix)."""
import json
from pathlib import Path

import yaml

from drift.serializers import ExperimentConfigSerializer


def read_config_file(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        payload = yaml.safe_load(text) or {}
    else:
        payload = json.loads(text) if text.strip() else {}
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return payload


def to_plain(value):
    """Nested OrderedDicts from the serializer as plain dicts and lists."""
    return json.loads(json.dumps(value))


def load_experiment_config(path=None, overrides=None):
    """Validated configuration with defaults filled in.

    Raises ``rest_framework.exceptions.ValidationError`` with field paths
    when the file does not validate.
    """
    payload = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            payload[key] = value
    serializer = ExperimentConfigSerializer(data=payload)
    serializer.is_valid(raise_exception=True)
    return to_plain(serializer.validated_data)
