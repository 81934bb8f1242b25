"""
Shape Fitting

This module turns a detection and its map-frame point patch into an object
observation. Planar classes (doors) are fitted with RANSAC followed by a
least-squares refinement; compact classes are segmented by Euclidean
clustering and represented by their largest cluster.
"""
# flake8: noqa: E501

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from augmap.core.geometry import PointCloud, Pose2D, project_to_ground, wrap_angle
from augmap.errors import (
    DegeneratePlaneError,
    EmptyCloudError,
    InsufficientPointsError,
    NoClusterError,
    NoConsensusError,
)
from augmap.schemas.config import FittingConfig
from augmap.schemas.domain import PLANAR_CLASSES, Detection, ObjectClass
from augmap.utils.rng import SeedLike

logger = logging.getLogger(__name__)

# Relative singular value below which a point set counts as rank-deficient
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PlaneModel:
    """
    A plane n·p + d = 0 with its consensus set.

    Attributes:
        normal: Unit normal.
        offset: Plane offset d in meters.
        inlier_indices: Indices of the cloud points within `threshold`.
        centroid: Mean of the inliers.
        threshold: Inlier distance used to select the consensus set.
        degenerate: Set when a refinement could not be computed.
    """

    normal: np.ndarray
    offset: float
    inlier_indices: np.ndarray
    centroid: np.ndarray
    threshold: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        normal = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "inlier_indices", np.asarray(self.inlier_indices, dtype=np.intp))
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float))

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Absolute point-to-plane distances."""
        return np.abs(points @ self.normal + self.offset)


@dataclass(frozen=True, eq=False)
class Cluster:
    """
    A Euclidean cluster of cloud points.

    Attributes:
        member_indices: Indices of the member points, ascending.
        centroid: Mean of the members.
        hull_extent: (dx, dy, dz) of the axis-aligned bound of the members' convex hull.
    """

    member_indices: np.ndarray
    centroid: np.ndarray
    hull_extent: Tuple[float, float, float]

    def __len__(self) -> int:
        return int(self.member_indices.shape[0])


@dataclass(frozen=True, eq=False)
class ObjectObservation:
    """
    One per-frame measurement of an object.

    Attributes:
        class_label: The detected class.
        pose: Projected ground pose (x, y, theta).
        shape: The fitted plane or the selected cluster.
        timestamp: Capture time in seconds.
        range_from_robot: Ground distance from the robot in meters.
    """

    class_label: ObjectClass
    pose: Pose2D
    shape: Union[PlaneModel, Cluster]
    timestamp: float
    range_from_robot: float

    def __post_init__(self) -> None:
        if self.range_from_robot < 0:
            raise ValueError("range_from_robot must be non-negative")


def _orient(normal: np.ndarray, offset: float, centroid: np.ndarray, viewpoint: np.ndarray) -> Tuple[np.ndarray, float]:
    if float(normal @ (viewpoint - centroid)) < 0:
        return -normal, -offset
    return normal, offset


def _rank(points: np.ndarray) -> np.ndarray:
    centered = points - points.mean(axis=0)
    return np.linalg.svd(centered, full_matrices=False, compute_uv=False)


def ransac_plane(
    cloud: PointCloud,
    dist_thresh: float = 0.03,
    max_iters: int = 200,
    min_inliers: int = 50,
    seed: SeedLike = 0,
    viewpoint: Optional[Sequence[float]] = None,
) -> PlaneModel:
    """
    Fit a plane by random sample consensus.

    All 3-point hypotheses are drawn up front and scored in one pass; the
    first hypothesis with the most inliers wins.

    Args:
        cloud: Points to fit.
        dist_thresh: Inlier distance in meters.
        max_iters: Number of hypotheses.
        min_inliers: Minimum consensus size.
        seed: Sampler seed.
        viewpoint: Point the normal is oriented towards; the origin of the
            cloud's frame (the camera center for camera-frame clouds) by default.

    Returns:
        The best-consensus plane with its normal facing the viewpoint.

    Raises:
        InsufficientPointsError: Fewer than 3 points, or all points collinear.
        NoConsensusError: The best hypothesis has fewer than `min_inliers` inliers.
    """
    pts = cloud.points
    n = len(pts)
    if n < 3:
        raise InsufficientPointsError(f"plane fitting needs 3 points, got {n}")
    sv = _rank(pts)
    if sv[1] <= RANK_TOL * max(sv[0], 1e-300):
        raise InsufficientPointsError("points are collinear")

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(max_iters, 3))
    p0, p1, p2 = pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]]
    normals = np.cross(p1 - p0, p2 - p0)
    norms = np.linalg.norm(normals, axis=1)
    valid = norms > 1e-12
    if not np.any(valid):
        raise NoConsensusError("every sampled triplet was degenerate")

    normals = normals[valid] / norms[valid, None]
    offsets = -np.einsum("ij,ij->i", normals, p0[valid])
    counts = (np.abs(pts @ normals.T + offsets) <= dist_thresh).sum(axis=0)
    best = int(np.argmax(counts))
    if counts[best] < min_inliers:
        raise NoConsensusError(
            f"best plane has {counts[best]} inliers, {min_inliers} required"
        )

    normal, offset = normals[best], float(offsets[best])
    inliers = np.flatnonzero(np.abs(pts @ normal + offset) <= dist_thresh)
    centroid = pts[inliers].mean(axis=0)
    view = np.zeros(3) if viewpoint is None else np.asarray(viewpoint, dtype=float)
    normal, offset = _orient(normal, offset, centroid, view)
    return PlaneModel(normal / np.linalg.norm(normal), offset, inliers, centroid, dist_thresh)


def _rms(points: np.ndarray, normal: np.ndarray, offset: float) -> float:
    return float(np.sqrt(np.mean((points @ normal + offset) ** 2)))


def refine_plane(model: PlaneModel, cloud: PointCloud) -> PlaneModel:
    """
    Least-squares refinement of a plane over its inliers.

    The refined normal is the smallest principal direction of the inlier
    covariance. The consensus set is re-selected with the model's threshold
    when that does not raise the inlier RMS distance above the input's;
    otherwise the input inliers within the threshold of the refined plane
    are kept. A rank-deficient inlier set leaves the model unchanged with
    `degenerate` set.

    Args:
        model: Plane to refine, with at least 3 inliers.
        cloud: The cloud the model was fitted on.

    Returns:
        The refined plane.
    """
    inlier_pts = cloud.points[model.inlier_indices]
    if len(inlier_pts) < 3:
        return replace(model, degenerate=True)

    centroid = inlier_pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(inlier_pts - centroid, full_matrices=False)
    if sv[1] <= RANK_TOL * max(sv[0], 1e-300):
        return replace(model, degenerate=True)

    normal = vt[2] / np.linalg.norm(vt[2])
    if float(normal @ model.normal) < 0:
        normal = -normal
    offset = -float(normal @ centroid)

    before = _rms(inlier_pts, model.normal, model.offset)
    inliers = np.flatnonzero(np.abs(cloud.points @ normal + offset) <= model.threshold)
    if len(inliers) < 3 or _rms(cloud.points[inliers], normal, offset) > before:
        kept = np.abs(inlier_pts @ normal + offset) <= model.threshold
        inliers = model.inlier_indices[kept]
    if len(inliers) < 3:
        return replace(model, degenerate=True)
    return PlaneModel(normal, offset, inliers, cloud.points[inliers].mean(axis=0), model.threshold)
    if len(inliers) < 3:
        return replace(model, degenerate=True)
    return PlaneModel(normal, offset, inliers, cloud.points[inliers].mean(axis=0), model.threshold)


def euclidean_cluster(cloud: PointCloud, tol: float = 0.10, min_size: int = 30) -> List[Cluster]:
    """
    Region growing by point proximity.

    Points closer than `tol` are linked; connected components with at least
    `min_size` points are returned, largest first (ties by lowest member index).

    Args:
        cloud: Points to segment.
        tol: Link distance in meters.
        min_size: Minimum cluster size.

    Returns:
        The retained clusters, possibly empty.
    """
    pts = cloud.points
    n = len(pts)
    if n == 0:
        return []

    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    adjacency = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    _, labels = connected_components(adjacency, directed=False)

    clusters = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if len(members) < min_size:
            continue
        member_pts = pts[members]
        extent = np.ptp(member_pts, axis=0)
        clusters.append(
            Cluster(members, member_pts.mean(axis=0), (float(extent[0]), float(extent[1]), float(extent[2])))
        )
    clusters.sort(key=lambda c: (-len(c), int(c.member_indices[0])))
    return clusters


def _door_pose(cloud: PointCloud, plane: PlaneModel, position: str = "centroid") -> Pose2D:
    horizontal = np.cross(plane.normal, np.array([0.0, 0.0, 1.0]))
    norm = np.linalg.norm(horizontal)
    if norm < 1e-6:
        raise DegeneratePlaneError("fitted door plane is horizontal")
    horizontal /= norm

    center = plane.centroid
    if position == "midpoint":
        # Middle of the inlier span along the wall
        along = (cloud.points[plane.inlier_indices] - plane.centroid) @ horizontal
        center = plane.centroid + horizontal * (along.min() + along.max()) / 2.0
    x, y = project_to_ground(center)
    return Pose2D(x, y, wrap_angle(math.atan2(plane.normal[1], plane.normal[0])))


def extract_observation(
    det: Detection,
    cloud_map_frame: PointCloud,
    robot: Pose2D,
    cfg: Optional[FittingConfig] = None,
    seed: Optional[SeedLike] = None,
) -> ObjectObservation:
    """
    Fit the class primitive to a detection's points.

    Doors: RANSAC plane plus refinement; the position is the inlier
    centroid (or the middle of the inlier span along the wall with
    `cfg.door_position="midpoint"`) and theta follows the camera-facing
    normal. Other classes: centroid of the largest Euclidean cluster with
    theta the bearing from the robot.

    Args:
        det: The detection.
        cloud_map_frame: The detection's points in the map frame.
        robot: Robot pose at capture time.
        cfg: Fitting configuration.
        seed: RANSAC seed; `cfg.seed` by default.

    Returns:
        The observation.

    Raises:
        FittingError: If the primitive cannot be fitted.
    """
    cfg = cfg or FittingConfig()
    if len(cloud_map_frame) == 0:
        raise EmptyCloudError(f"empty cloud for {det.class_label} detection")

    shape: Union[PlaneModel, Cluster]
    if det.class_label in PLANAR_CLASSES:
        viewpoint = (robot.x, robot.y, float(cloud_map_frame.points[:, 2].mean()))
        plane = ransac_plane(
            cloud_map_frame,
            dist_thresh=cfg.plane_threshold,
            max_iters=cfg.ransac_iterations,
            min_inliers=cfg.min_inliers,
            seed=cfg.seed if seed is None else seed,
            viewpoint=viewpoint,
        )
        if cfg.refine:
            plane = refine_plane(plane, cloud_map_frame)
        pose = _door_pose(cloud_map_frame, plane, cfg.door_position)
        shape = plane
    else:
        clusters = euclidean_cluster(cloud_map_frame, cfg.cluster_tolerance, cfg.cluster_min_size)
        if not clusters:
            raise NoClusterError(
                f"no cluster of {cfg.cluster_min_size} points in {len(cloud_map_frame)}"
            )
        shape = clusters[0]
        x, y = project_to_ground(shape.centroid)
        pose = Pose2D(x, y, robot.bearing_to(x, y))

    return ObjectObservation(
        class_label=det.class_label,
        pose=pose,
        shape=shape,
        timestamp=det.timestamp,
        range_from_robot=math.hypot(pose.x - robot.x, pose.y - robot.y),
    )
