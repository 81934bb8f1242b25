"""
Core Package

This package contains the core components of the augmap library: geometry,
the pose graph, shape fitting, the tracker and the frame replay mapper.
"""

# geometry first: the schemas build on it
from augmap.core.geometry import (
    BoundingBox,
    CameraIntrinsics,
    DepthPatch,
    PointCloud,
    Pose2D,
    Pose3D,
    PoseBuffer,
    backproject_box,
    pose_at,
    transform_cloud,
    wrap_angle,
)
from augmap.core.mapper import SemanticMapper, track_timeline
from augmap.core.pose_graph import PoseGraph
from augmap.core.shape_fitting import (
    ObjectObservation,
    PlaneModel,
    euclidean_cluster,
    extract_observation,
    ransac_plane,
    refine_plane,
)
from augmap.core.tracker import (
    TrackedInstance,
    TrackerState,
    hungarian,
    kalman_update,
    mahalanobis,
    reanchor,
    step,
)

__all__ = [
    "BoundingBox",
    "CameraIntrinsics",
    "DepthPatch",
    "PointCloud",
    "Pose2D",
    "Pose3D",
    "PoseBuffer",
    "backproject_box",
    "pose_at",
    "transform_cloud",
    "wrap_angle",
    "PoseGraph",
    "ObjectObservation",
    "PlaneModel",
    "euclidean_cluster",
    "extract_observation",
    "ransac_plane",
    "refine_plane",
    "TrackedInstance",
    "TrackerState",
    "hungarian",
    "kalman_update",
    "mahalanobis",
    "reanchor",
    "step",
    "SemanticMapper",
    "track_timeline",
]
