"""
Domain Schema

This module defines the schema for the domain model of the augmap library:
the object classes the detector reports, per-frame detections, world objects
of a simulated scenario, and ground truth annotations used for evaluation.
"""
# flake8: noqa: E501

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):  # type: ignore[no-redef]
        """Backport of enum.StrEnum: str() and format() yield the value."""

        def __str__(self) -> str:
            return str(self.value)

        __format__ = str.__format__  # type: ignore[assignment]
from typing import FrozenSet, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from augmap.core.geometry import BoundingBox, Pose2D


class ObjectClass(StrEnum):
    """Object classes reported by the detector."""

    DOOR = "door"
    BENCH = "bench"
    TRASH_BIN = "trash_bin"
    FIRE_EXTINGUISHER = "fire_extinguisher"
    WATER_FOUNTAIN = "water_fountain"
    PERSON = "person"


# Classes that are mapped; people are detected but never tracked.
STATIC_CLASSES: Tuple[ObjectClass, ...] = (
    ObjectClass.DOOR,
    ObjectClass.BENCH,
    ObjectClass.TRASH_BIN,
    ObjectClass.FIRE_EXTINGUISHER,
    ObjectClass.WATER_FOUNTAIN,
)

PLANAR_CLASSES: FrozenSet[ObjectClass] = frozenset({ObjectClass.DOOR})

# Classes whose observed heading is the viewing bearing, not an object property.
COMPACT_CLASSES: FrozenSet[ObjectClass] = frozenset(c for c in STATIC_CLASSES if c not in PLANAR_CLASSES)


class Detection(BaseModel):
    """
    A detector output for one object in one image.

    Attributes:
        class_label: The detected class.
        box: The detection box in pixels.
        confidence: Detector confidence in [0, 1]. Carried but not used by the tracker.
        timestamp: Image capture time in seconds.
    """

    model_config = ConfigDict(frozen=True)

    class_label: ObjectClass
    box: BoundingBox
    confidence: float = Field(ge=0.0, le=1.0)
    timestamp: float


class GroundTruthAnnotation(BaseModel):
    """
    The annotated location of a static object in the ground truth map.

    Attributes:
        class_label: The object class (never person).
        pose: The annotated planar pose.
    """

    model_config = ConfigDict(frozen=True)

    class_label: ObjectClass
    pose: Pose2D

    @field_validator("class_label")
    @classmethod
    def _static_only(cls, v: ObjectClass) -> ObjectClass:
        if v not in STATIC_CLASSES:
            raise ValueError(f"class '{v}' is not a static class")
        return v


class WorldObject(BaseModel):
    """
    An object placed in a simulated world.

    The pose's theta is the facing direction (for doors, the wall normal
    pointing into the free space). `extent` is (width, depth, height) in
    meters along the object's lateral, facing and vertical axes; doors use a
    depth of 0. `elevation` is the height of the object's lowest point.

    Attributes:
        class_label: The object class.
        pose: Ground-plane pose of the object center.
        extent: Physical size (width, depth, height) in meters.
        elevation: Height of the object's base above the floor.
    """

    model_config = ConfigDict(frozen=True)

    class_label: ObjectClass
    pose: Pose2D
    extent: Tuple[float, float, float]
    elevation: float = 0.0

    @field_validator("extent")
    @classmethod
    def _non_negative(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(e < 0 for e in v) or v[0] <= 0 or v[2] <= 0:
            raise ValueError("extent components must be >= 0 with positive width and height")
        return v

    def annotation(self) -> GroundTruthAnnotation:
        """The ground truth annotation of this object."""
        return GroundTruthAnnotation(class_label=self.class_label, pose=self.pose)


DEFAULT_EXTENTS = {
    ObjectClass.DOOR: (0.9, 0.0, 2.0),
    ObjectClass.BENCH: (1.2, 0.45, 0.45),
    ObjectClass.TRASH_BIN: (0.35, 0.35, 0.6),
    ObjectClass.FIRE_EXTINGUISHER: (0.1, 0.1, 0.5),
    ObjectClass.WATER_FOUNTAIN: (0.4, 0.35, 0.9),
    ObjectClass.PERSON: (0.45, 0.3, 1.7),
}
