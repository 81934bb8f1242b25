"""
Record Schema

This module defines the line-delimited records exchanged between the
simulator, the mapper and the command line: frame logs with their depth
patches, loop-closure correction events, augmented-map instance records and
run manifests.
"""
# flake8: noqa: E501

import base64
import binascii
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, field_validator

from augmap.core.geometry import CameraIntrinsics, DepthPatch, Pose2D
from augmap.schemas.domain import Detection, ObjectClass

DEPTH_DTYPE = "<f4"


def _patch_to_wire(patch: DepthPatch) -> Dict[str, Any]:
    rows, cols = patch.shape
    payload = np.ascontiguousarray(patch.depth, dtype=DEPTH_DTYPE).tobytes()
    return {
        "u0": patch.u0,
        "v0": patch.v0,
        "stride": patch.stride,
        "rows": rows,
        "cols": cols,
        "depth": base64.b64encode(payload).decode("ascii"),
    }


def _patch_from_wire(value: Any) -> DepthPatch:
    if isinstance(value, DepthPatch):
        return value
    if not isinstance(value, dict):
        raise ValueError("depth patch must be an object")
    try:
        rows, cols = int(value["rows"]), int(value["cols"])
        raw = base64.b64decode(value["depth"], validate=True)
        depth = np.frombuffer(raw, dtype=DEPTH_DTYPE)
        if depth.size != rows * cols:
            raise ValueError(f"depth payload holds {depth.size} samples, expected {rows * cols}")
        return DepthPatch(
            int(value["u0"]), int(value["v0"]), int(value["stride"]), depth.reshape(rows, cols).copy()
        )
    except (KeyError, TypeError, binascii.Error) as err:
        raise ValueError(f"malformed depth patch: {err}") from err


WireDepthPatch = Annotated[
    DepthPatch,
    PlainValidator(_patch_from_wire),
    PlainSerializer(_patch_to_wire, return_type=dict),
]


class SensedDetection(BaseModel):
    """A detection together with the depth samples covering its box."""

    model_config = ConfigDict(frozen=True)

    detection: Detection
    patch: WireDepthPatch


class FrameRecord(BaseModel):
    """
    Everything the robot produced for one camera frame.

    Attributes:
        timestamp: Frame time in seconds.
        true_pose: Ground truth robot pose (evaluation only).
        odom_pose: Robot pose estimate from drifting odometry.
        detections: Detections with their depth patches.
        anchor_node: Pose graph node created for this frame.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["frame"] = "frame"
    timestamp: float
    true_pose: Pose2D
    odom_pose: Pose2D
    detections: List[SensedDetection] = Field(default_factory=list)
    anchor_node: int


class CorrectionEvent(BaseModel):
    """
    A back-end correction of past frame poses.

    Attributes:
        timestamp: Time the correction became available.
        corrections: Corrected pose per pose graph node.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["correction"] = "correction"
    timestamp: float
    corrections: Dict[int, Pose2D]


class LogHeader(BaseModel):
    """First record of a frame log: the sensor setup the log was recorded with."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["header"] = "header"
    scenario: str
    seed: int
    camera: CameraIntrinsics
    mount_height: float = Field(gt=0)
    frame_count: int = Field(ge=0)


class MapHeader(BaseModel):
    """First record of an augmented map file."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["augmented_map"] = "augmented_map"
    format_version: int = 1
    grid: Optional[str] = None
    instance_count: int = Field(ge=0)


class InstanceRecord(BaseModel):
    """
    One tracked instance of an augmented map.

    `cov` holds the upper triangle of the covariance row by row:
    (xx, xy, xθ, yy, yθ, θθ).
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["instance"] = "instance"
    id: int = Field(ge=0)
    class_label: ObjectClass
    x: float
    y: float
    theta: float
    cov: Tuple[float, float, float, float, float, float]
    observation_count: int = Field(ge=1)
    last_seen: float
    anchor_node: int
    offset: Pose2D

    @field_validator("cov")
    @classmethod
    def _non_negative_variances(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if v[0] < 0 or v[3] < 0 or v[5] < 0:
            raise ValueError("covariance diagonal must be non-negative")
        return v


class RunManifest(BaseModel):
    """
    Provenance of one command run.

    The wall-clock duration is logged by the command line and not stored,
    so identical runs write byte-identical manifests.

    Attributes:
        command: Sub-command name.
        config_hash: Digest of the effective configuration.
        seed: Seed the run was driven by, if any.
        version: augmap version.
        inputs: Input file name to SHA-256 digest.
        outputs: Output file name to SHA-256 digest.
    """

    model_config = ConfigDict(frozen=True)

    command: str
    config_hash: str
    seed: Optional[int] = None
    version: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
