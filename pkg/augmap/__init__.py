"""
augmap: A Python library that augments robot occupancy maps with the
persistent objects an RGB-D camera and an object detector see along the way.

This library provides tools for fitting primitive shapes to detected objects,
tracking them as map instances across frames and loop closures, simulating
sensing runs, and scoring the resulting maps against ground truth.
"""

__version__ = "0.1.0"

# Import key classes and functions for easy access
from augmap.core import (
    CameraIntrinsics,
    PoseGraph,
    Pose2D,
    Pose3D,
    SemanticMapper,
    TrackedInstance,
    TrackerState,
    extract_observation,
    hungarian,
    reanchor,
    step,
)
from augmap.evaluation import EvalReport, SweepResult, evaluate, sweep
from augmap.maps import AugmentedMap, OccupancyGrid, load_augmented, save_augmented
from augmap.schemas import AssociationConfig, ObjectClass, PipelineConfig, ScenarioConfig
from augmap.simulation import run_scenario

# Define what's available for import with `from augmap import *`
__all__ = [
    "CameraIntrinsics",
    "PoseGraph",
    "Pose2D",
    "Pose3D",
    "SemanticMapper",
    "TrackedInstance",
    "TrackerState",
    "extract_observation",
    "hungarian",
    "reanchor",
    "step",
    "EvalReport",
    "SweepResult",
    "evaluate",
    "sweep",
    "AugmentedMap",
    "OccupancyGrid",
    "load_augmented",
    "save_augmented",
    "AssociationConfig",
    "ObjectClass",
    "PipelineConfig",
    "ScenarioConfig",
    "run_scenario",
]
