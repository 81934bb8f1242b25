"""
Scenario Simulator

This module contains the ScenarioSimulator class, a deterministic stand-in
for the camera, the object detector and the localization back end. It drives
a robot along a waypoint trajectory through an occupancy grid and produces,
per frame, the detections of visible objects with depth patches ray-cast
from simple object models (a rectangle for doors, an ellipsoid otherwise),
a drifting odometry pose, and loop-closure correction events.

Every random draw comes from a stream derived from (seed, stream, frame,
object), so scenarios that differ in one parameter share all other draws.
"""
# flake8: noqa: E501

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from augmap.core.geometry import (
    BoundingBox,
    DepthPatch,
    Pose2D,
    Pose3D,
    PoseBuffer,
    pose_at,
    wrap_angle,
)
from augmap.errors import ConfigError
from augmap.maps.occupancy import CellState, OccupancyGrid, corridor_grid, load_grid
from augmap.schemas.config import ScenarioConfig
from augmap.schemas.domain import (
    DEFAULT_EXTENTS,
    PLANAR_CLASSES,
    STATIC_CLASSES,
    Detection,
    GroundTruthAnnotation,
    ObjectClass,
    WorldObject,
)
from augmap.schemas.records import (
    CorrectionEvent,
    FrameRecord,
    LogHeader,
    SensedDetection,
)
from augmap.utils.rng import derive_rng

logger = logging.getLogger(__name__)

# Objects closer than this to the camera plane are not rendered
MIN_DEPTH = 0.1

DEFAULT_ELEVATIONS = {ObjectClass.FIRE_EXTINGUISHER: 1.0}

CONFIDENCE_RANGE = (0.5, 1.0)


def build_grid(cfg: ScenarioConfig) -> OccupancyGrid:
    """The scenario's occupancy grid, generated or loaded."""
    if cfg.corridor is not None:
        return corridor_grid(cfg.corridor)
    assert cfg.grid_path is not None
    return load_grid(cfg.grid_path)


def generate_trajectory(cfg: ScenarioConfig) -> List[Tuple[float, Pose2D]]:
    """
    Sample a constant-speed piecewise-linear path at the frame rate.

    Samples are taken at t = k / frame_rate while the path lasts, the final
    waypoint included when the duration is a whole number of frames. The
    heading follows the current segment; a sample on a corner takes the
    heading of the segment that starts there.

    Args:
        cfg: Scenario with waypoints, speed and frame rate.

    Returns:
        (timestamp, pose) samples.

    Raises:
        ConfigError: Fewer than 2 waypoints, or coincident consecutive waypoints.
    """
    points = [(w.x, w.y) for w in cfg.waypoints]
    if len(points) < 2:
        raise ConfigError(f"a trajectory needs at least 2 waypoints, got {len(points)}")

    lengths = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        length = math.hypot(x1 - x0, y1 - y0)
        if length < 1e-9:
            raise ConfigError(f"coincident consecutive waypoints at ({x0}, {y0})")
        lengths.append(length)
    starts = np.concatenate([[0.0], np.cumsum(lengths)])
    total = float(starts[-1])

    samples = []
    count = int(math.floor(total / cfg.speed * cfg.frame_rate + 1e-9)) + 1
    for k in range(count):
        t = k / cfg.frame_rate
        s = min(cfg.speed * t, total)
        seg = int(np.searchsorted(starts, s, side="right")) - 1
        if seg < len(lengths) - 1 and abs(s - starts[seg + 1]) < 1e-9:
            seg += 1
        seg = min(seg, len(lengths) - 1)
        (x0, y0), (x1, y1) = points[seg], points[seg + 1]
        alpha = (s - starts[seg]) / lengths[seg]
        heading = math.atan2(y1 - y0, x1 - x0)
        samples.append((t, Pose2D(x0 + alpha * (x1 - x0), y0 + alpha * (y1 - y0), heading)))
    return samples


def grid_line(c0: Tuple[int, int], c1: Tuple[int, int]) -> Iterator[Tuple[int, int]]:
    """Cells of the integer line from c0 to c1, both included."""
    x0, y0 = c0
    x1, y1 = c1
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def visible(robot: Pose2D, obj: Pose2D, grid: OccupancyGrid, fov_deg: float, detect_range: float) -> bool:
    """
    Whether an object position is in view of the robot.

    True iff the object is within range, within half the field of view of
    the heading, and no occupied cell lies on the grid line between the two
    cells (end cells excluded).
    """
    distance = robot.distance_to(obj)
    if distance > detect_range:
        return False
    if distance > 0 and abs(wrap_angle(robot.bearing_to(obj.x, obj.y) - robot.theta)) > math.radians(fov_deg) / 2.0:
        return False

    start, end = grid.cell_of(robot.x, robot.y), grid.cell_of(obj.x, obj.y)
    for cell in grid_line(start, end):
        if cell == start or cell == end:
            continue
        if grid.state(*cell) == CellState.OCCUPIED:
            return False
    return True


def object_axes(obj: WorldObject) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Center, lateral, facing and up axes of an object in the map frame."""
    c, s = math.cos(obj.pose.theta), math.sin(obj.pose.theta)
    center = np.array([obj.pose.x, obj.pose.y, obj.elevation + obj.extent[2] / 2.0])
    return center, np.array([-s, c, 0.0]), np.array([c, s, 0.0]), np.array([0.0, 0.0, 1.0])


def object_corners(obj: WorldObject) -> np.ndarray:
    center, lateral, facing, up = object_axes(obj)
    w, d, h = obj.extent
    if obj.class_label in PLANAR_CLASSES:
        d = 0.0
    signs = [(a, b, c) for a in (-1, 1) for b in (-1, 1) for c in (-1, 1)]
    return np.array(
        [center + a * lateral * w / 2 + b * facing * d / 2 + c * up * h / 2 for a, b, c in signs]
    )


@dataclass(frozen=True)
class SimulationResult:
    """
    Output of one simulated run.

    Attributes:
        header: Sensor setup of the log.
        log: One record per frame.
        events: Loop-closure corrections.
        truth: Annotations of the static objects, in scenario order.
        observed: Per annotation, whether the object was ever in sensing view.
        grid: The occupancy grid.
        truncated: Number of views dropped because the object left the image sideways.
    """

    header: LogHeader
    log: List[FrameRecord]
    events: List[CorrectionEvent]
    truth: List[GroundTruthAnnotation]
    observed: List[bool]
    grid: OccupancyGrid
    truncated: int = 0


class ScenarioSimulator:
    """
    Simulates the sensing of one scenario.
    """

    def __init__(self, cfg: ScenarioConfig, grid: Optional[OccupancyGrid] = None):
        """
        Initialize a ScenarioSimulator.

        Args:
            cfg: The scenario.
            grid: Occupancy grid; built from the scenario when omitted.
        """
        self.cfg = cfg
        self.grid = grid if grid is not None else build_grid(cfg)
        self.trajectory = generate_trajectory(cfg)
        self._truth_poses = PoseBuffer(capacity=len(self.trajectory))
        for t, pose in self.trajectory:
            self._truth_poses.append(t, pose)
        self._static = [i for i, o in enumerate(cfg.objects) if o.class_label in STATIC_CLASSES]
        self._seen = [False] * len(cfg.objects)
        self.truncated = 0

    @property
    def effective_p_detect(self) -> float:
        """Detection probability after intensity-noise degradation."""
        return self.cfg.p_detect * max(0.0, 1.0 - self.cfg.noise.sigma_I / 25.0)

    def check_trajectory(self) -> None:
        """
        Raises:
            ConfigError: If a trajectory sample is not on a free cell.
        """
        for t, pose in self.trajectory:
            if not self.grid.is_free(pose.x, pose.y):
                raise ConfigError(f"trajectory leaves the free space at t={t:.3f} ({pose.x:.2f}, {pose.y:.2f})")

    def _ray_depths(self, obj: WorldObject, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        center, lateral, facing, up = object_axes(obj)
        w, d, h = obj.extent
        if obj.class_label in PLANAR_CLASSES:
            denom = dirs @ facing
            with np.errstate(divide="ignore", invalid="ignore"):
                t = ((center - origin) @ facing) / denom
            hit = origin + t[..., None] * dirs
            rel = hit - center
            inside = (np.abs(rel @ lateral) <= w / 2) & (np.abs(rel @ up) <= h / 2)
            valid = (denom < -1e-12) & (t > 0) & inside
        else:
            scale = np.array([w / 2, max(d, 1e-2) / 2, h / 2])
            basis = np.stack([lateral, facing, up]) / scale[:, None]
            o = basis @ (origin - center)
            dd = dirs @ basis.T
            qa = np.sum(dd * dd, axis=-1)
            qb = 2.0 * (dd @ o)
            qc = float(o @ o) - 1.0
            disc = qb * qb - 4.0 * qa * qc
            with np.errstate(invalid="ignore"):
                t = (-qb - np.sqrt(disc)) / (2.0 * qa)
            valid = (disc >= 0) & (t > 0) & (qc > 0)
        return np.where(valid, t, 0.0)

    def render_object(self, obj: WorldObject, robot: Pose2D, frame: int, index: int) -> Optional[Tuple[BoundingBox, DepthPatch]]:
        """
        Render an object's detection box and depth patch.

        Args:
            obj: The object.
            robot: True robot pose at capture time.
            frame: Frame index.
            index: Object index (noise stream key).

        Returns:
            The box and patch, or None when the object is behind the camera,
            faces away, leaves the image sideways or is missed by every ray.
        """
        cfg = self.cfg
        intr = cfg.camera
        camera = Pose3D.camera_from_robot(robot, cfg.mount_height)
        origin = np.asarray(camera.translation)

        center, _, facing, _ = object_axes(obj)
        if obj.class_label in PLANAR_CLASSES and float((origin - center) @ facing) <= 0:
            return None

        cam_corners = camera.inverse().apply(object_corners(obj))
        if np.any(cam_corners[:, 2] <= MIN_DEPTH):
            return None
        uv = intr.project(cam_corners)
        u_min, u_max = float(uv[:, 0].min()), float(uv[:, 0].max())
        v_min, v_max = float(uv[:, 1].min()), float(uv[:, 1].max())
        if u_min < 0 or u_max > intr.width - 1:
            self.truncated += 1
            return None
        v_min, v_max = max(v_min, 0.0), min(v_max, intr.height - 1.0)
        u0, u1, v0, v1 = math.ceil(u_min), math.floor(u_max), math.ceil(v_min), math.floor(v_max)
        if u0 > u1 or v0 > v1:
            return None

        stride = cfg.patch_stride
        us = u0 + stride * np.arange((u1 - u0) // stride + 1)
        vs = v0 + stride * np.arange((v1 - v0) // stride + 1)
        uu, vv = np.meshgrid(us.astype(float), vs.astype(float))
        dirs = intr.rays(uu, vv) @ camera.rotation_matrix.T
        depth = self._ray_depths(obj, origin, dirs)
        valid = depth > 0
        if not np.any(valid):
            return None

        sigma = cfg.noise.sigma_depth_m
        if sigma > 0:
            noise = derive_rng(cfg.seed, "noise", frame, index).normal(0.0, sigma, size=depth.shape)
            depth = np.where(valid, depth + noise, 0.0)
        box = BoundingBox.from_corners(u_min, v_min, u_max, v_max)
        return box, DepthPatch(u0, v0, stride, depth.astype(np.float32))

    def _clutter(self, robot: Pose2D, frame: int) -> List[WorldObject]:
        cfg = self.cfg
        rng = derive_rng(cfg.seed, "clutter", frame)
        phantoms = []
        for _ in range(int(rng.poisson(cfg.clutter_rate))):
            cls = STATIC_CLASSES[int(rng.integers(len(STATIC_CLASSES)))]
            distance = float(rng.uniform(1.0, cfg.detect_range))
            bearing = robot.theta + float(rng.uniform(-0.5, 0.5)) * math.radians(cfg.fov_deg)
            x = robot.x + distance * math.cos(bearing)
            y = robot.y + distance * math.sin(bearing)
            if not self.grid.is_free(x, y):
                continue
            phantoms.append(
                WorldObject(
                    class_label=cls,
                    pose=Pose2D(x, y, bearing + math.pi),
                    extent=DEFAULT_EXTENTS[cls],
                    elevation=DEFAULT_ELEVATIONS.get(cls, 0.0),
                )
            )
        return phantoms

    def synthesize_frame(self, frame: int, t: float, robot_true: Pose2D, odom_pose: Pose2D) -> FrameRecord:
        """
        Produce the sensor record of one frame.

        Each visible object is detected with the effective detection
        probability; its box is the projection of its extent and its depth
        patch carries N(0, sigma_D²) noise. Clutter detections follow.

        Args:
            frame: Frame index, also the pose graph node.
            t: Frame time.
            robot_true: True robot pose at frame time.
            odom_pose: Odometry pose reported with the frame.

        Returns:
            The frame record.
        """
        cfg = self.cfg
        capture_t = t - cfg.detection_latency
        robot = pose_at(self._truth_poses, capture_t) if cfg.detection_latency > 0 else robot_true
        p_detect = self.effective_p_detect

        candidates = [(i, o) for i, o in enumerate(cfg.objects)]
        candidates += [(len(cfg.objects) + i, o) for i, o in enumerate(self._clutter(robot, frame))]

        detections = []
        for index, obj in candidates:
            is_clutter = index >= len(cfg.objects)
            if not is_clutter and not visible(robot, obj.pose, self.grid, cfg.fov_deg, cfg.detect_range):
                continue
            rendered = self.render_object(obj, robot, frame, index)
            if rendered is None:
                continue
            if not is_clutter:
                self._seen[index] = True
            if derive_rng(cfg.seed, "detect", frame, index).random() >= p_detect:
                continue
            box, patch = rendered
            confidence = float(derive_rng(cfg.seed, "confidence", frame, index).uniform(*CONFIDENCE_RANGE))
            detection = Detection(class_label=obj.class_label, box=box, confidence=confidence, timestamp=capture_t)
            detections.append(SensedDetection(detection=detection, patch=patch))

        return FrameRecord(
            timestamp=t,
            true_pose=robot_true,
            odom_pose=odom_pose,
            detections=detections,
            anchor_node=frame,
        )

    def run(self) -> SimulationResult:
        """
        Simulate the whole trajectory.

        Odometry accumulates translation drift of `drift_rate` per meter
        traveled along `drift_heading`, plus white localization noise. At the
        first frame at or after each loop-closure time, a correction event
        maps every node so far to its true pose and the drift restarts from
        zero.

        Returns:
            The simulation result.

        Raises:
            ConfigError: If the trajectory leaves the free space.
        """
        cfg = self.cfg
        self.check_trajectory()
        sigma_xy, sigma_theta = cfg.localization_noise
        heading = np.array([math.cos(cfg.drift_heading), math.sin(cfg.drift_heading)])
        closures = sorted(cfg.loop_closure_at)

        drift = np.zeros(2)
        frames: List[FrameRecord] = []
        events: List[CorrectionEvent] = []
        previous: Optional[Pose2D] = None
        for k, (t, true_pose) in enumerate(self.trajectory):
            if previous is not None:
                drift = drift + cfg.drift_rate * previous.distance_to(true_pose) * heading
            previous = true_pose
            jitter = derive_rng(cfg.seed, "jitter", k).normal(size=3) * np.array([sigma_xy, sigma_xy, sigma_theta])
            odom = Pose2D(
                true_pose.x + drift[0] + jitter[0],
                true_pose.y + drift[1] + jitter[1],
                true_pose.theta + jitter[2],
            )
            frames.append(self.synthesize_frame(k, t, true_pose, odom))

            if closures and t >= closures[0] - 1e-9:
                while closures and t >= closures[0] - 1e-9:
                    closures.pop(0)
                events.append(
                    CorrectionEvent(
                        timestamp=t,
                        corrections={i: self.trajectory[i][1] for i in range(k + 1)},
                    )
                )
                logger.debug("loop closure at t=%.3f removed drift of %.3f m", t, float(np.hypot(*drift)))
                drift = np.zeros(2)

        truth = [self.cfg.objects[i].annotation() for i in self._static]
        observed = [self._seen[i] for i in self._static]
        header = LogHeader(
            scenario=cfg.name,
            seed=cfg.seed,
            camera=cfg.camera,
            mount_height=cfg.mount_height,
            frame_count=len(frames),
        )
        if self.truncated:
            logger.info("dropped %d truncated object views", self.truncated)
        logger.info(
            "simulated %s: %d frames, %d detections, %d corrections",
            cfg.name,
            len(frames),
            sum(len(f.detections) for f in frames),
            len(events),
        )
        return SimulationResult(header, frames, events, truth, observed, self.grid, self.truncated)


def run_scenario(cfg: ScenarioConfig, grid: Optional[OccupancyGrid] = None) -> SimulationResult:
    """Simulate a scenario; see ScenarioSimulator.run."""
    return ScenarioSimulator(cfg, grid).run()


def drift_errors(result: SimulationResult) -> Sequence[float]:
    """Per-frame distance between odometry and true pose."""
    return [f.odom_pose.distance_to(f.true_pose) for f in result.log]
