"""
Geometry

This module contains the geometric building blocks of the mapping pipeline:
planar and spatial poses, the pinhole camera model, back-projection of
detection boxes into point clouds, rigid frame transforms, and a timestamped
pose buffer used to look up the robot pose at image capture time.

Camera frames follow the optical convention (x right, y down, z forward).
The map frame is z-up with the robot moving in the x-y plane.
"""

import bisect
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Iterable, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.spatial.transform import Rotation

from augmap.errors import EmptyBufferError, EmptyCloudError

TWO_PI = 2.0 * math.pi

DEFAULT_BUFFER_CAPACITY = 512


def wrap_angle(a: float) -> float:
    """
    Wrap an angle to the half-open interval (-pi, pi].

    Args:
        a: Angle in radians. Must be finite.

    Returns:
        The equivalent angle in (-pi, pi].
    """
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Pose2D:
    """
    A planar pose (x, y, theta) in meters and radians.

    Used both for robot poses and for the filtered state of map objects.
    theta is normalized to (-pi, pi] on construction.
    """

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta)):
            raise ValueError(f"Pose2D components must be finite: {self}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @classmethod
    def identity(cls) -> "Pose2D":
        return cls(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Return self ∘ other, i.e. `other` expressed in self's frame mapped out."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )

    def relative_to(self, anchor: "Pose2D") -> "Pose2D":
        """Express this pose in the frame of `anchor`."""
        return anchor.inverse().compose(self)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def bearing_to(self, x: float, y: float) -> float:
        """Absolute bearing (map frame) from this position to (x, y)."""
        return math.atan2(y - self.y, x - self.x)


class Pose3D:
    """
    A rigid transform in 3D: translation in meters and a unit quaternion.

    The quaternion is stored scalar-first as (w, x, y, z).
    """

    __slots__ = ("translation", "rotation", "_rot")

    def __init__(
        self,
        translation: Sequence[float] = (0.0, 0.0, 0.0),
        rotation: Sequence[float] = (1.0, 0.0, 0.0, 0.0),
    ):
        t = tuple(float(v) for v in translation)
        q = tuple(float(v) for v in rotation)
        if len(t) != 3 or len(q) != 4:
            raise ValueError("Pose3D needs 3 translation and 4 quaternion components")
        if abs(math.sqrt(sum(v * v for v in q)) - 1.0) > 1e-9:
            raise ValueError(f"Quaternion {q} is not unit length")
        self.translation: Tuple[float, float, float] = t  # type: ignore[assignment]
        self.rotation: Tuple[float, float, float, float] = q  # type: ignore[assignment]
        w, x, y, z = q
        self._rot = Rotation.from_quat([x, y, z, w])

    def __repr__(self) -> str:
        return f"Pose3D(translation={self.translation}, rotation={self.rotation})"

    @classmethod
    def identity(cls) -> "Pose3D":
        return cls()

    @classmethod
    def from_rotation(cls, translation: Sequence[float], rot: Rotation) -> "Pose3D":
        x, y, z, w = rot.as_quat()
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        return cls(translation, (w / norm, x / norm, y / norm, z / norm))

    @classmethod
    def camera_from_robot(cls, robot: Pose2D, mount_height: float) -> "Pose3D":
        """
        Pose of a level, forward-looking optical camera mounted on the robot.

        Args:
            robot: Robot pose in the map frame.
            mount_height: Height of the optical center above the floor.

        Returns:
            The camera-to-map transform.
        """
        c, s = math.cos(robot.theta), math.sin(robot.theta)
        # Columns: camera x (right), y (down), z (forward) in map coordinates
        matrix = np.array(
            [
                [s, 0.0, c],
                [-c, 0.0, s],
                [0.0, -1.0, 0.0],
            ]
        )
        return cls.from_rotation(
            (robot.x, robot.y, mount_height), Rotation.from_matrix(matrix)
        )

    @property
    def rotation_matrix(self) -> np.ndarray:
        return self._rot.as_matrix()

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points."""
        if len(points) == 0:
            return np.empty((0, 3))
        return self._rot.apply(points) + np.asarray(self.translation)

    def inverse(self) -> "Pose3D":
        inv = self._rot.inv()
        return Pose3D.from_rotation(-inv.apply(np.asarray(self.translation)), inv)

    def compose(self, other: "Pose3D") -> "Pose3D":
        """Return self ∘ other (apply `other` first)."""
        t = self._rot.apply(np.asarray(other.translation)) + np.asarray(
            self.translation
        )
        return Pose3D.from_rotation(t, self._rot * other._rot)


class CameraIntrinsics(BaseModel):
    """
    Pinhole camera intrinsics of a rectified camera.

    Attributes:
        fx: Focal length along image columns, pixels.
        fy: Focal length along image rows, pixels.
        cx: Principal point column, pixels.
        cy: Principal point row, pixels.
        width: Image width, pixels.
        height: Image height, pixels.
    """

    model_config = ConfigDict(frozen=True)

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @model_validator(mode="after")
    def _check_ranges(self) -> "CameraIntrinsics":
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not 0 <= self.cx < self.width or not 0 <= self.cy < self.height:
            raise ValueError("principal point must lie inside the image")
        return self

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project (N, 3) camera-frame points to (N, 2) pixel coordinates."""
        pts = np.atleast_2d(points)
        u = self.fx * pts[:, 0] / pts[:, 2] + self.cx
        v = self.fy * pts[:, 1] / pts[:, 2] + self.cy
        return np.column_stack([u, v])

    def rays(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Camera-frame ray directions with unit depth for pixel grids."""
        return np.stack(
            [(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones_like(u)],
            axis=-1,
        )


class BoundingBox(BaseModel):
    """
    An axis-aligned detection box in pixels, given by its center and size.
    """

    model_config = ConfigDict(frozen=True)

    center_x: float
    center_y: float
    w: float
    h: float

    @model_validator(mode="after")
    def _check_size(self) -> "BoundingBox":
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box width and height must be positive")
        return self

    @classmethod
    def from_corners(
        cls, u_min: float, v_min: float, u_max: float, v_max: float
    ) -> "BoundingBox":
        return cls(
            center_x=(u_min + u_max) / 2.0,
            center_y=(v_min + v_max) / 2.0,
            w=u_max - u_min,
            h=v_max - v_min,
        )

    def pixel_bounds(self, intr: CameraIntrinsics) -> Tuple[int, int, int, int]:
        """
        Inclusive integer pixel bounds of the box clipped to the image.

        Returns:
            (u_min, u_max, v_min, v_max).

        Raises:
            ValueError: If the box does not intersect the image.
        """
        u_min = max(0, math.ceil(self.center_x - self.w / 2.0))
        u_max = min(intr.width - 1, math.floor(self.center_x + self.w / 2.0))
        v_min = max(0, math.ceil(self.center_y - self.h / 2.0))
        v_max = min(intr.height - 1, math.floor(self.center_y + self.h / 2.0))
        if u_min > u_max or v_min > v_max:
            raise ValueError(f"box {self} does not intersect the image")
        return u_min, u_max, v_min, v_max


@dataclass(frozen=True)
class DepthPatch:
    """
    Per-pixel depth in meters sampled on a regular pixel grid.

    Sample (i, j) holds the depth of pixel (u0 + stride * j, v0 + stride * i).
    """

    u0: int
    v0: int
    stride: int
    depth: np.ndarray

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError("patch stride must be at least 1")
        object.__setattr__(self, "depth", np.atleast_2d(np.asarray(self.depth)))

    @property
    def shape(self) -> Tuple[int, int]:
        rows, cols = self.depth.shape
        return int(rows), int(cols)


@dataclass(frozen=True)
class PointCloud:
    """
    An ordered set of 3D points in meters tagged with the frame they live in.
    """

    points: np.ndarray
    frame: Literal["camera", "map"] = "camera"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def centroid(self) -> np.ndarray:
        return np.asarray(self.points.mean(axis=0))


def backproject_box(
    depth_patch: DepthPatch,
    intr: CameraIntrinsics,
    box: BoundingBox,
    pixel_step: int = 2,
) -> PointCloud:
    """
    Lift the valid depth pixels inside a detection box to camera-frame points.

    Pixels are read at most every `pixel_step` image rows and columns.
    Pixels with non-positive or non-finite depth are skipped.

    Args:
        depth_patch: Depth samples covering the box.
        intr: Camera intrinsics.
        box: Detection box.
        pixel_step: Minimum pixel spacing between sampled pixels.

    Returns:
        A camera-frame point cloud, one point per valid pixel.

    Raises:
        EmptyCloudError: If no pixel inside the box has valid depth.
    """
    u_min, u_max, v_min, v_max = box.pixel_bounds(intr)
    rows, cols = depth_patch.shape
    step = max(1, math.ceil(pixel_step / depth_patch.stride))

    us = depth_patch.u0 + depth_patch.stride * np.arange(0, cols, step)
    vs = depth_patch.v0 + depth_patch.stride * np.arange(0, rows, step)
    col_idx = np.arange(0, cols, step)[(us >= u_min) & (us <= u_max)]
    row_idx = np.arange(0, rows, step)[(vs >= v_min) & (vs <= v_max)]

    z = depth_patch.depth[np.ix_(row_idx, col_idx)].astype(float)
    u = (depth_patch.u0 + depth_patch.stride * col_idx)[None, :].astype(float)
    v = (depth_patch.v0 + depth_patch.stride * row_idx)[:, None].astype(float)
    u, v = np.broadcast_to(u, z.shape), np.broadcast_to(v, z.shape)

    valid = np.isfinite(z) & (z > 0)
    if not np.any(valid):
        raise EmptyCloudError("no valid depth pixel inside the detection box")

    z = z[valid]
    x = (u[valid] - intr.cx) * z / intr.fx
    y = (v[valid] - intr.cy) * z / intr.fy
    return PointCloud(np.column_stack([x, y, z]), frame="camera")


def transform_cloud(cloud: PointCloud, cam_pose: Pose3D) -> PointCloud:
    """
    Move a camera-frame cloud into the map frame.

    Args:
        cloud: Cloud tagged with the camera frame.
        cam_pose: Camera pose in the map frame.

    Returns:
        The same points expressed in the map frame.

    Raises:
        ValueError: If the cloud is not in the camera frame.
    """
    if cloud.frame != "camera":
        raise ValueError("transform_cloud expects a camera-frame cloud")
    return PointCloud(cam_pose.apply(cloud.points), frame="map")


def project_to_ground(p: Iterable[float]) -> Tuple[float, float]:
    """Drop the vertical component of a map-frame point."""
    x, y, _ = (float(v) for v in p)
    return x, y


def interpolate_pose(p0: Pose2D, p1: Pose2D, alpha: float) -> Pose2D:
    """Linear interpolation in position, shortest-arc interpolation in heading."""
    return Pose2D(
        p0.x + alpha * (p1.x - p0.x),
        p0.y + alpha * (p1.y - p0.y),
        p0.theta + alpha * wrap_angle(p1.theta - p0.theta),
    )


@dataclass
class PoseBuffer:
    """
    A bounded, time-ordered buffer of robot poses.

    A single writer appends poses with strictly increasing timestamps; readers
    take consistent snapshots. The oldest sample is evicted once `capacity`
    is reached.
    """

    capacity: int = DEFAULT_BUFFER_CAPACITY
    _samples: Deque[Tuple[float, Pose2D]] = field(init=False, repr=False)
    _lock: threading.Lock = field(
        init=False, repr=False, default_factory=threading.Lock
    )

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")
        self._samples = deque(maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._samples)

    def append(self, t: float, pose: Pose2D) -> None:
        """
        Append a pose sample.

        Raises:
            ValueError: If `t` is not later than the newest sample.
        """
        with self._lock:
            if self._samples and t <= self._samples[-1][0]:
                raise ValueError(
                    f"timestamp {t} is not after the last sample "
                    f"{self._samples[-1][0]}"
                )
            self._samples.append((float(t), pose))

    def snapshot(self) -> Tuple[Tuple[float, Pose2D], ...]:
        with self._lock:
            return tuple(self._samples)

    @property
    def latest(self) -> Optional[Tuple[float, Pose2D]]:
        samples = self.snapshot()
        return samples[-1] if samples else None


def pose_at(buf: PoseBuffer, t: float) -> Pose2D:
    """
    Interpolate the robot pose at time `t`.

    Queries outside the buffered span clamp to the nearest endpoint.

    Args:
        buf: The pose buffer.
        t: Query time in seconds.

    Returns:
        The interpolated pose.

    Raises:
        EmptyBufferError: If the buffer holds no samples.
    """
    samples = buf.snapshot()
    if not samples:
        raise EmptyBufferError("cannot look up a pose in an empty buffer")

    times = [s[0] for s in samples]
    if t <= times[0]:
        return samples[0][1]
    if t >= times[-1]:
        return samples[-1][1]

    k = bisect.bisect_right(times, t)
    t0, p0 = samples[k - 1]
    t1, p1 = samples[k]
    return interpolate_pose(p0, p1, (t - t0) / (t1 - t0))
