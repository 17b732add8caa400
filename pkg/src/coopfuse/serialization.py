"""JSON documents for scenes, fusion reports, and sweep records.

One document per file, fields mirroring the domain types, all floats at full
round-trip precision, angles in radians.  Formal JSON Schemas for each
document kind ship with the package under ``coopfuse/schemas`` and are
enforced on load.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib.resources import files
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from .fusion import Detection, FusionOutput
from .geometry import OrientedBox, Pose, RigidTransform
from .metrics import TransformError
from .scenario import Scene

__all__ = [
    "MalformedDocumentError",
    "SCENE_SCHEMA",
    "REPORT_SCHEMA",
    "RECORDS_SCHEMA",
    "scene_to_dict",
    "scene_from_dict",
    "save_scene",
    "load_scene",
    "fusion_report_dict",
    "records_document",
    "save_document",
    "load_document",
    "validate_document",
]

SCENE_SCHEMA = "scene.schema.json"
REPORT_SCHEMA = "fusion-report.schema.json"
RECORDS_SCHEMA = "records.schema.json"


class MalformedDocumentError(ValueError):
    """A document failed schema or semantic validation; names the bad field."""


@lru_cache(maxsize=None)
def _schema(name: str) -> dict[str, Any]:
    text = files("coopfuse").joinpath(f"schemas/{name}").read_text(encoding="utf-8")
    return json.loads(text)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    # bool subclasses int, so it must be recognized before the integer branch
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def validate_document(document: Mapping[str, Any], schema_name: str) -> None:
    """Raise MalformedDocumentError at the first schema violation."""
    validator = jsonschema.Draft202012Validator(_schema(schema_name))
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is not None:
        path = "/".join(str(p) for p in error.absolute_path) or "(document root)"
        raise MalformedDocumentError(f"invalid field {path!r}: {error.message}")


def _box_dict(box: OrientedBox) -> dict[str, Any]:
    return {
        "center": _jsonable(box.center),
        "yaw": float(box.yaw),
        "extent": _jsonable(box.extent),
    }


def _box_from_dict(raw: Mapping[str, Any], where: str) -> OrientedBox:
    try:
        return OrientedBox(np.array(raw["center"]), float(raw["yaw"]), np.array(raw["extent"]))
    except ValueError as exc:
        raise MalformedDocumentError(f"invalid field {where!r}: {exc}") from exc


def _pose_dict(pose: Pose) -> dict[str, Any]:
    return {"position": _jsonable(pose.position), "angles": _jsonable(pose.angles)}


def _pose_from_dict(raw: Mapping[str, Any], where: str) -> Pose:
    try:
        return Pose(np.array(raw["position"]), np.array(raw["angles"]))
    except ValueError as exc:
        raise MalformedDocumentError(f"invalid field {where!r}: {exc}") from exc


def scene_to_dict(scene: Scene, config: Mapping[str, Any] | None = None) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format": "coopfuse-scene",
        "version": 1,
        "bounds": _jsonable(scene.bounds),
        "ego_pose": _pose_dict(scene.ego_pose),
        "cav_pose": _pose_dict(scene.cav_pose),
        "objects": [_box_dict(box) for box in scene.objects],
    }
    if config is not None:
        doc["config"] = _jsonable(config)
    return doc


def scene_from_dict(document: Mapping[str, Any]) -> Scene:
    validate_document(document, SCENE_SCHEMA)
    objects = tuple(
        _box_from_dict(raw, f"objects/{idx}") for idx, raw in enumerate(document["objects"])
    )
    try:
        return Scene(
            objects=objects,
            ego_pose=_pose_from_dict(document["ego_pose"], "ego_pose"),
            cav_pose=_pose_from_dict(document["cav_pose"], "cav_pose"),
            bounds=np.array(document["bounds"], dtype=float),
        )
    except ValueError as exc:
        raise MalformedDocumentError(f"invalid field 'objects': {exc}") from exc


def save_document(document: Mapping[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(document), handle, indent=2)
        handle.write("\n")


def load_document(path: str) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedDocumentError("document root must be an object")
    return document


def save_scene(scene: Scene, path: str, config: Mapping[str, Any] | None = None) -> None:
    save_document(scene_to_dict(scene, config), path)


def load_scene(path: str) -> Scene:
    return scene_from_dict(load_document(path))


def _transform_dict(transform: RigidTransform) -> dict[str, Any]:
    return {
        "rotation": _jsonable(transform.rotation),
        "translation": _jsonable(transform.translation),
    }


def _detection_dict(det: Detection) -> dict[str, Any]:
    out = _box_dict(det.box)
    out["confidence"] = float(det.confidence)
    return out


def fusion_report_dict(
    output: FusionOutput,
    error: TransformError | None = None,
    config: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Fusion result as a serializable report document.

    ``error`` carries the applied transform's RRE/RTE against ground truth
    when the caller knows it (the CLI does; a live system would not).
    """
    doc: dict[str, Any] = {
        "format": "coopfuse-fusion-report",
        "version": 1,
        "mode": output.mode.value,
        "correction_applied": output.correction_applied,
        "pair_count": len(output.association.pairs),
        "inlier_ratio": (
            output.registration.inlier_ratio if output.registration is not None else 0.0
        ),
        "applied_transform": _transform_dict(output.applied_transform),
        "fused_objects": [_detection_dict(det) for det in output.objects],
    }
    if error is not None:
        doc["rre_deg"] = math.degrees(error.rre)
        doc["rte_m"] = error.rte
    if config is not None:
        doc["config"] = _jsonable(config)
    return doc


def records_document(
    records_as_dicts: Sequence[Mapping[str, Any]], config: Mapping[str, Any] | None = None
) -> dict[str, Any]:
    """JSON mirror of the sweep CSV."""
    doc: dict[str, Any] = {
        "format": "coopfuse-records",
        "version": 1,
        "records": [_jsonable(row) for row in records_as_dicts],
    }
    if config is not None:
        doc["config"] = _jsonable(config)
    return doc
