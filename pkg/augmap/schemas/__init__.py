"""
Schemas Package

This package contains the schema definitions for the augmap library.
"""

from augmap.schemas.config import (
    AssociationConfig,
    CorridorSpec,
    FittingConfig,
    PipelineConfig,
    Rect,
    ScenarioConfig,
    SensorNoiseModel,
)
from augmap.schemas.domain import (
    COMPACT_CLASSES,
    STATIC_CLASSES,
    Detection,
    GroundTruthAnnotation,
    ObjectClass,
    WorldObject,
)
from augmap.schemas.records import (
    CorrectionEvent,
    FrameRecord,
    InstanceRecord,
    LogHeader,
    MapHeader,
    RunManifest,
    SensedDetection,
)

__all__ = [
    "AssociationConfig",
    "CorridorSpec",
    "FittingConfig",
    "PipelineConfig",
    "Rect",
    "ScenarioConfig",
    "SensorNoiseModel",
    "COMPACT_CLASSES",
    "STATIC_CLASSES",
    "Detection",
    "GroundTruthAnnotation",
    "ObjectClass",
    "WorldObject",
    "CorrectionEvent",
    "FrameRecord",
    "InstanceRecord",
    "LogHeader",
    "MapHeader",
    "RunManifest",
    "SensedDetection",
]
