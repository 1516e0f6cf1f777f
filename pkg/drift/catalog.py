"""Object catalog: JSON file <-> ``ObjectSpec``.

An entry gives either explicit ``A_w`` or a ``submerged_fraction`` of
``A_a``, and either per-medium coefficients or one ``C_D``/``C_L`` pair
used for air and water alike.
"""
import json
import logging
from pathlib import Path

from drift.exceptions import UnknownObjectError
from drift.physics import ObjectSpec

logger = logging.getLogger(__name__)

DEFAULT_CATALOG = Path(__file__).resolve().parent / "data" / "objects.json"


def spec_from_entry(entry):
    try:
        A_a = float(entry["A_a"])
        if "A_w" in entry:
            A_w = float(entry["A_w"])
        else:
            A_w = float(entry["submerged_fraction"]) * A_a
        drag = entry.get("C_D")
        lift = entry.get("C_L")
        return ObjectSpec(
            id=entry["id"],
            m_o=float(entry["m_o"]),
            A_a=A_a,
            A_w=A_w,
            C_D_air=float(entry.get("C_D_air", drag)),
            C_L_air=float(entry.get("C_L_air", lift)),
            C_D_water=float(entry.get("C_D_water", drag)),
            C_L_water=float(entry.get("C_L_water", lift)),
            description=entry.get("description", ""),
            name=entry.get("name", entry["id"]),
            silhouette=entry.get("silhouette", {}),
        )
    except KeyError as error:
        raise ValueError(f"catalog entry {entry.get('id', '?')} is missing {error}") from None
    except TypeError:
        raise ValueError(f"catalog entry {entry.get('id', '?')} has no coefficients") from None


def load_catalog(path=None):
    path = Path(path or DEFAULT_CATALOG)
    payload = json.loads(path.read_text())
    entries = payload["objects"] if isinstance(payload, dict) else payload
    objects = [spec_from_entry(entry) for entry in entries]
    ids = [obj.id for obj in objects]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate object ids")
    logger.debug("loaded %d objects from %s", len(objects), path)
    return objects


def select_objects(objects, ids):
    """Subset of ``objects`` in the order of ``ids``; ``None`` keeps all."""
    if not ids:
        return list(objects)
    by_id = {obj.id: obj for obj in objects}
    unknown = [object_id for object_id in ids if object_id not in by_id]
    if unknown:
        raise UnknownObjectError(f"unknown objects: {', '.join(unknown)}")
    return [by_id[object_id] for object_id in ids]
