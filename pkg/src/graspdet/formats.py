"""Serialization shared across the pipeline.

Grasps and annotations travel as JSON Lines, one object per line with keys
translation [x, y, z] (m), rotation (unit quaternion [w, x, y, z]), width
(m), confidence; annotations add object_id. Intrinsics and AP reports are
plain JSON objects.
"""

from __future__ import annotations

import json

import numpy as np

from .avh import GraspAnnotation
from .camera import Intrinsics
from .errors import FormatError
from .fas import GraspPose
from .geometry import quat_from_rotation, rotation_from_quat
from .metrics import APReport


def _pose_row(pose: GraspPose, confidence: float) -> dict:
    quat = quat_from_rotation(pose.rotation)
    quat = quat / np.linalg.norm(quat)
    return {
        "translation": [float(x) for x in pose.translation],
        "rotation": [float(x) for x in quat],
        "width": float(pose.width),
        "confidence": float(confidence),
    }


def write_grasps(path, grasps) -> None:
    """grasps: iterable of (GraspPose, confidence)."""
    with open(path, "w") as f:
        for pose, conf in grasps:
            f.write(json.dumps(_pose_row(pose, conf)) + "\n")


def read_grasps(path):
    out = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                pose = GraspPose(
                    translation=np.array(row["translation"], dtype=float),
                    rotation=rotation_from_quat(row["rotation"]),
                    width=float(row["width"]),
                )
                out.append((pose, float(row["confidence"])))
            except (KeyError, ValueError, TypeError) as e:
                raise FormatError(f"bad grasp row at line {line_no}: {e}") from e
    return out


def write_annotations(path, annotations) -> None:
    with open(path, "w") as f:
        for ann in annotations:
            row = _pose_row(
                GraspPose(ann.translation, ann.rotation, ann.width), confidence=1.0
            )
            row["object_id"] = ann.object_id
            f.write(json.dumps(row) + "\n")


def read_annotations(path):
    out = []
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                out.append(
                    GraspAnnotation(
                        translation=np.array(row["translation"], dtype=float),
                        rotation=rotation_from_quat(row["rotation"]),
                        width=float(row["width"]),
                        object_id=row.get("object_id"),
                    )
                )
            except (KeyError, ValueError, TypeError) as e:
                raise FormatError(f"bad annotation row at line {line_no}: {e}") from e
    return out


def load_intrinsics(path) -> Intrinsics:
    with open(path) as f:
        try:
            return Intrinsics.from_dict(json.load(f))
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as e:
            raise FormatError(f"bad intrinsics file {path}: {e}") from e


def save_intrinsics(intr: Intrinsics, path) -> None:
    with open(path, "w") as f:
        json.dump(intr.to_dict(), f, indent=2)
        f.write("\n")


def save_report(report: APReport, path) -> None:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")
