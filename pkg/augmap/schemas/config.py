"""
Configuration Schema

This module defines the configuration models of the augmap library: shape
fitting, data association and tracking, the full replay pipeline, and the
simulated scenario description. All models are frozen pydantic models and
can be loaded from JSON with `Model.model_validate_json`.
"""
# flake8: noqa: E501

import math
from pathlib import Path
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from augmap.core.geometry import CameraIntrinsics, Pose2D
from augmap.errors import ConfigError
from augmap.schemas.domain import STATIC_CLASSES, ObjectClass, WorldObject

DEFAULT_DELTA = 1.2

Diagonal = Tuple[float, float, float]


class FittingConfig(BaseModel):
    """
    Parameters of back-projection and primitive shape fitting.

    Attributes:
        plane_threshold: RANSAC point-to-plane inlier distance in meters.
        ransac_iterations: Number of 3-point plane hypotheses.
        min_inliers: Minimum consensus size for a plane to be accepted.
        refine: Whether to refine the winning plane by least squares.
        cluster_tolerance: Euclidean clustering link distance in meters.
        cluster_min_size: Minimum number of points per cluster.
        pixel_step: Minimum pixel spacing when reading depth inside a box.
        door_position: Door position, the inlier centroid or the midpoint of
            the inlier span along the wall. The midpoint does not shift
            toward the near side of an obliquely viewed door.
        seed: Base seed of the RANSAC sampler.
    """

    model_config = ConfigDict(frozen=True)

    plane_threshold: float = Field(default=0.03, gt=0)
    ransac_iterations: int = Field(default=200, ge=1)
    min_inliers: int = Field(default=50, ge=3)
    refine: bool = True
    cluster_tolerance: float = Field(default=0.10, gt=0)
    cluster_min_size: int = Field(default=30, ge=1)
    pixel_step: int = Field(default=2, ge=1)
    door_position: Literal["centroid", "midpoint"] = "centroid"
    seed: int = Field(default=0, ge=0, lt=2**64)


class AssociationConfig(BaseModel):
    """
    Parameters of data association and per-instance Kalman filtering.

    Covariances are diagonal and given by their diagonals in
    (m², m², rad²).

    Attributes:
        delta: Per-class Mahalanobis gating threshold.
        max_range: Observations farther than this from the robot are discarded.
        measurement_noise: Diagonal of R.
        process_noise: Diagonal of Q.
        initial_covariance: Diagonal of P0 given to new instances.
        position_only: Gate and associate on (x, y) only, for every class.
        position_only_classes: Classes gated on (x, y) only. Empty by default;
            `COMPACT_CLASSES` selects the classes whose observed theta is the
            viewing bearing.
        gate_on: Covariance used for gating, the instance covariance P
            (default) or the innovation covariance P + Q + R.
    """

    model_config = ConfigDict(frozen=True)

    delta: Dict[ObjectClass, float] = Field(
        default_factory=lambda: {c: DEFAULT_DELTA for c in STATIC_CLASSES}
    )
    max_range: float = Field(default=6.0, gt=0)
    measurement_noise: Diagonal = (0.15**2, 0.15**2, 0.2**2)
    process_noise: Diagonal = (0.0, 0.0, 0.0)
    initial_covariance: Diagonal = (0.5**2, 0.5**2, 0.5**2)
    position_only: bool = False
    position_only_classes: FrozenSet[ObjectClass] = frozenset()
    gate_on: Literal["innovation", "state"] = "state"

    @field_validator("delta")
    @classmethod
    def _positive_delta(cls, v: Dict[ObjectClass, float]) -> Dict[ObjectClass, float]:
        if any(d <= 0 for d in v.values()):
            raise ValueError("delta must be positive for every class")
        return v

    @field_serializer("position_only_classes")
    def _sorted_classes(self, v: FrozenSet[ObjectClass]) -> List[str]:
        return sorted(c.value for c in v)

    @model_validator(mode="after")
    def _check_diagonals(self) -> "AssociationConfig":
        if any(q < 0 for q in self.measurement_noise + self.process_noise):
            raise ValueError("noise diagonals must be non-negative")
        if any(p <= 0 for p in self.initial_covariance):
            raise ValueError("initial covariance diagonals must be positive")
        return self

    def delta_for(self, cls: ObjectClass) -> float:
        return self.delta.get(cls, DEFAULT_DELTA)

    def with_delta(self, value: float) -> "AssociationConfig":
        """Return a copy using the same threshold for every class."""
        return self.model_copy(update={"delta": {c: value for c in STATIC_CLASSES}})

    def gates_position_only(self, cls: ObjectClass) -> bool:
        return self.position_only or cls in self.position_only_classes

    @property
    def R(self) -> np.ndarray:
        return np.diag(self.measurement_noise)

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.process_noise)

    @property
    def P0(self) -> np.ndarray:
        return np.diag(self.initial_covariance)


class PipelineConfig(BaseModel):
    """
    Configuration of the frame replay pipeline (fitting plus tracking).

    Attributes:
        association: Tracker configuration.
        fitting: Shape fitting configuration.
        compensate_latency: Look up the robot pose at each detection's
            capture time instead of using the pose of the frame it arrived in.
    """

    model_config = ConfigDict(frozen=True)

    association: AssociationConfig = Field(default_factory=AssociationConfig)
    fitting: FittingConfig = Field(default_factory=FittingConfig)
    compensate_latency: bool = True

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        """
        Load a pipeline configuration from a JSON file.

        Raises:
            ConfigError: If the file does not validate.
        """
        try:
            return cls.model_validate_json(Path(path).read_text())
        except ValueError as err:
            raise ConfigError(f"invalid pipeline config {path}: {err}") from err


class SensorNoiseModel(BaseModel):
    """
    RGB-D noise levels of the simulated camera.

    The depth noise level is tied to the intensity noise level by
    sigma_D = 0.1 * sigma_I. Depth images are in meters unless `depth_unit_m`
    scales them, for example 0.01 for centimetre depth images.

    Attributes:
        sigma_I: Intensity noise standard deviation (intensity units).
        sigma_D: Depth noise standard deviation in depth units; derived when omitted.
        depth_unit_m: Size of one depth unit in meters.
    """

    model_config = ConfigDict(frozen=True)

    sigma_I: float = Field(default=0.0, ge=0)
    sigma_D: Optional[float] = None
    depth_unit_m: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _tie_depth_to_intensity(self) -> "SensorNoiseModel":
        expected = 0.1 * self.sigma_I
        if self.sigma_D is None:
            object.__setattr__(self, "sigma_D", expected)
        elif not math.isclose(self.sigma_D, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"sigma_D must equal 0.1 * sigma_I = {expected}")
        return self

    @property
    def sigma_depth_m(self) -> float:
        """Per-pixel depth noise standard deviation in meters."""
        return float(self.sigma_D or 0.0) * self.depth_unit_m


class Rect(BaseModel):
    """An axis-aligned rectangle in map coordinates."""

    model_config = ConfigDict(frozen=True)

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @model_validator(mode="after")
    def _ordered(self) -> "Rect":
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("rectangle bounds must be increasing")
        return self


class CorridorSpec(BaseModel):
    """
    Generator parameters for a walled rectangular floor.

    The floor spans [0, length) x [0, width); its border cells are walls and
    `margin` meters of unknown cells surround it.
    Interior `blocks` are filled as occupied, which turns a hall into a
    ring corridor.
    """

    model_config = ConfigDict(frozen=True)

    length: float = Field(gt=0)
    width: float = Field(gt=0)
    resolution: float = Field(default=0.05, gt=0)
    margin: float = Field(default=0.0, ge=0)
    blocks: List[Rect] = Field(default_factory=list)


def default_camera() -> CameraIntrinsics:
    return CameraIntrinsics(fx=260.0, fy=260.0, cx=160.0, cy=120.0, width=320, height=240)


class ScenarioConfig(BaseModel):
    """
    Description of a simulated mapping run.

    Attributes:
        name: Scenario name.
        corridor: Corridor generator parameters (alternative to grid_path).
        grid_path: PGM occupancy grid to load (alternative to corridor).
        objects: Static and dynamic objects of the world.
        waypoints: Trajectory waypoints; theta is ignored.
        speed: Robot speed in m/s.
        frame_rate: Camera frame rate in Hz.
        camera: Camera intrinsics.
        mount_height: Camera height above the floor in meters.
        fov_deg: Horizontal field of view used for visibility.
        detect_range: Maximum sensing range in meters.
        p_detect: Per-frame detection probability of a visible object.
        clutter_rate: Mean number of false detections per frame.
        noise: RGB-D noise model.
        drift_rate: Odometry drift in meters per meter traveled.
        drift_heading: Map-frame direction of the accumulated drift.
        localization_noise: Per-frame white pose noise (sigma_xy m, sigma_theta rad).
        loop_closure_at: Times at which the back end corrects past nodes.
        detection_latency: Delay between image capture and detection arrival.
        patch_stride: Pixel stride of generated depth patches.
        seed: Seed of every random draw of the run.
    """

    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    corridor: Optional[CorridorSpec] = None
    grid_path: Optional[str] = None
    objects: List[WorldObject] = Field(default_factory=list)
    waypoints: List[Pose2D] = Field(default_factory=list)
    speed: float = Field(default=1.0, gt=0)
    frame_rate: float = Field(default=5.0, gt=0)
    camera: CameraIntrinsics = Field(default_factory=default_camera)
    mount_height: float = Field(default=0.8, gt=0)
    fov_deg: float = Field(default=60.0, gt=0, lt=180)
    detect_range: float = Field(default=8.0, gt=0)
    p_detect: float = Field(default=1.0, ge=0, le=1)
    clutter_rate: float = Field(default=0.0, ge=0)
    noise: SensorNoiseModel = Field(default_factory=SensorNoiseModel)
    drift_rate: float = Field(default=0.0, ge=0)
    drift_heading: float = math.pi / 2
    localization_noise: Tuple[float, float] = (0.0, 0.0)
    loop_closure_at: List[float] = Field(default_factory=list)
    detection_latency: float = Field(default=0.0, ge=0)
    patch_stride: int = Field(default=2, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _one_geometry_source(self) -> "ScenarioConfig":
        if (self.corridor is None) == (self.grid_path is None):
            raise ValueError("exactly one of 'corridor' and 'grid_path' is required")
        if any(s < 0 for s in self.localization_noise):
            raise ValueError("localization noise must be non-negative")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScenarioConfig":
        """
        Load a scenario from a JSON file.

        Raises:
            ConfigError: If the file is missing or does not validate.
        """
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read scenario {path}: {err}") from err
        try:
            return cls.model_validate_json(text)
        except ValueError as err:
            raise ConfigError(f"invalid scenario {path}: {err}") from err

    def with_sigma_I(self, sigma_I: float) -> "ScenarioConfig":
        noise = SensorNoiseModel(sigma_I=sigma_I, depth_unit_m=self.noise.depth_unit_m)
        return self.model_copy(update={"noise": noise})

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return self.model_copy(update={"seed": seed})
