"""
Scenarios

Factories for the standard simulated scenarios: a straight corridor, a
corridor with tightly clustered doors, a ring corridor loop with a loop
closure, and a building-scale ring corridor. Keyword overrides are passed
through to ScenarioConfig. `scenario_pipeline` gives the replay settings the
scenarios are tuned for.
"""
# flake8: noqa: E501

import math
from typing import Any, Dict, List, Literal, Tuple

from augmap.core.geometry import Pose2D
from augmap.schemas.config import (
    AssociationConfig,
    CorridorSpec,
    FittingConfig,
    PipelineConfig,
    Rect,
    ScenarioConfig,
    SensorNoiseModel,
)
from augmap.schemas.domain import COMPACT_CLASSES, DEFAULT_EXTENTS, ObjectClass, WorldObject
from augmap.simulation.simulator import DEFAULT_ELEVATIONS

Wall = Literal["south", "north", "west", "east"]

RESOLUTION = 0.05
# Gap between an object and the wall it is mounted on
WALL_CLEARANCE = 0.02

_FACING = {"south": math.pi / 2, "north": -math.pi / 2, "west": 0.0, "east": math.pi}


def wall_object(
    cls: ObjectClass,
    along: float,
    wall: Wall,
    length: float,
    width: float,
    extent: Tuple[float, float, float] = None,  # type: ignore[assignment]
) -> WorldObject:
    """
    An object against one of the outer walls of a length x width floor.

    Args:
        cls: Object class.
        along: Position along the wall (x for south/north, y for west/east).
        wall: Which wall.
        length: Floor extent along x.
        width: Floor extent along y.
        extent: Physical size; the class default when omitted.

    Returns:
        The object, facing into the floor.
    """
    extent = extent or DEFAULT_EXTENTS[cls]
    inset = RESOLUTION + WALL_CLEARANCE + extent[1] / 2.0
    if wall == "south":
        x, y = along, inset
    elif wall == "north":
        x, y = along, width - inset
    elif wall == "west":
        x, y = inset, along
    else:
        x, y = length - inset, along
    return WorldObject(
        class_label=cls,
        pose=Pose2D(x, y, _FACING[wall]),
        extent=extent,
        elevation=DEFAULT_ELEVATIONS.get(cls, 0.0),
    )


def _config(base: Dict[str, Any], overrides: Dict[str, Any]) -> ScenarioConfig:
    return ScenarioConfig(**{**base, **overrides})


def corridor_scenario(
    n_doors: int = 3,
    n_extinguishers: int = 2,
    n_trash_bins: int = 0,
    length: float = 20.0,
    width: float = 2.5,
    spacing: float = 5.0,
    **overrides: Any,
) -> ScenarioConfig:
    """
    A straight corridor walked end to end along its center line.

    Doors sit at x = 4, 4 + spacing, ... on alternating walls; fire
    extinguishers and trash bins sit halfway between doors.
    """
    objects: List[WorldObject] = []
    walls: Tuple[Wall, Wall] = ("south", "north")
    for i in range(n_doors):
        objects.append(wall_object(ObjectClass.DOOR, 4.0 + i * spacing, walls[i % 2], length, width))
    for i in range(n_extinguishers):
        objects.append(
            wall_object(ObjectClass.FIRE_EXTINGUISHER, 4.0 + (i + 0.5) * spacing, walls[(i + 1) % 2], length, width)
        )
    for i in range(n_trash_bins):
        objects.append(wall_object(ObjectClass.TRASH_BIN, 4.0 + (i + 0.5) * spacing, walls[i % 2], length, width))

    base: Dict[str, Any] = dict(
        name="corridor",
        corridor=CorridorSpec(length=length, width=width, resolution=RESOLUTION),
        objects=objects,
        waypoints=[Pose2D(0.5, width / 2), Pose2D(length - 0.5, width / 2)],
        detect_range=6.0,
    )
    return _config(base, overrides)


def clustered_doors_scenario(
    n_doors: int = 8,
    spacing: float = 1.5,
    width: float = 2.5,
    localization_noise: Tuple[float, float] = (0.03, 0.01),
    **overrides: Any,
) -> ScenarioConfig:
    """
    Doors packed `spacing` meters apart along both walls of a corridor.

    Per-frame localization noise makes repeated observations of one door
    scatter, which is what the gating threshold has to absorb.
    """
    first = 4.0
    length = first + n_doors * spacing / 2.0 + 7.0
    walls: Tuple[Wall, Wall] = ("south", "north")
    objects = [
        wall_object(ObjectClass.DOOR, first + i * spacing / 2.0, walls[i % 2], length, width)
        for i in range(n_doors)
    ]
    base: Dict[str, Any] = dict(
        name="clustered_doors",
        corridor=CorridorSpec(length=length, width=width, resolution=RESOLUTION),
        objects=objects,
        waypoints=[Pose2D(0.5, width / 2), Pose2D(length - 0.5, width / 2)],
        detect_range=6.0,
        localization_noise=localization_noise,
        patch_stride=4,
    )
    return _config(base, overrides)


def _ring(length: float, width: float, corridor: float) -> CorridorSpec:
    block = Rect(x_min=corridor, y_min=corridor, x_max=length - corridor, y_max=width - corridor)
    return CorridorSpec(length=length, width=width, resolution=RESOLUTION, blocks=[block])


def loop_scenario(drift_rate: float = 0.01, **overrides: Any) -> ScenarioConfig:
    """
    One lap of a 50 m ring corridor with a loop closure at the end.

    Odometry drifts by `drift_rate` per meter; the closure maps every past
    frame back to its true pose.
    """
    length, width, corridor = 18.0, 12.0, 2.5
    c = corridor / 2.0
    waypoints = [
        Pose2D(c, c),
        Pose2D(length - c, c),
        Pose2D(length - c, width - c),
        Pose2D(c, width - c),
        Pose2D(c, c),
    ]
    objects = [
        wall_object(ObjectClass.DOOR, 6.0, "south", length, width),
        wall_object(ObjectClass.DOOR, 11.0, "south", length, width),
        wall_object(ObjectClass.DOOR, 6.0, "east", length, width),
        wall_object(ObjectClass.DOOR, 12.0, "north", length, width),
        wall_object(ObjectClass.DOOR, 6.0, "north", length, width),
        wall_object(ObjectClass.DOOR, 7.0, "west", length, width),
    ]
    perimeter = 2 * (length - corridor) + 2 * (width - corridor)
    base: Dict[str, Any] = dict(
        name="loop",
        corridor=_ring(length, width, corridor),
        objects=objects,
        waypoints=waypoints,
        detect_range=6.0,
        drift_rate=drift_rate,
        loop_closure_at=[perimeter],
        patch_stride=4,
    )
    return _config(base, overrides)


def building_scale_scenario(
    sigma_I: float = 5.0,
    drift_rate: float = 0.005,
    depth_unit_m: float = 0.01,
    **overrides: Any,
) -> ScenarioConfig:
    """
    A 42 m x 18.5 m floor with a ring corridor and 19 doors.

    The robot drives most of the ring once, stopping short of its start so
    early doors are not revisited, and the back end closes the loop at the
    end of the run. Depth images are in centimetres unless `depth_unit_m`
    says otherwise.
    """
    length, width, corridor = 42.0, 18.5, 2.5
    c = corridor / 2.0
    waypoints = [
        Pose2D(8.25, c),
        Pose2D(length - c, c),
        Pose2D(length - c, width - c),
        Pose2D(c, width - c),
        Pose2D(c, c),
    ]
    objects = [wall_object(ObjectClass.DOOR, x, "south", length, width) for x in (11.0, 15.0, 19.0, 23.0, 27.0, 31.0, 35.0)]
    objects += [wall_object(ObjectClass.DOOR, x, "north", length, width) for x in (7.0, 11.0, 15.0, 19.0, 23.0, 27.0, 31.0, 35.0)]
    objects += [wall_object(ObjectClass.DOOR, y, "east", length, width) for y in (6.0, 9.25, 12.5)]
    objects += [wall_object(ObjectClass.DOOR, 9.0, "west", length, width)]

    path = sum(a.distance_to(b) for a, b in zip(waypoints, waypoints[1:]))
    base: Dict[str, Any] = dict(
        name="building_scale",
        corridor=_ring(length, width, corridor),
        objects=objects,
        waypoints=waypoints,
        frame_rate=2.5,
        detect_range=6.0,
        noise=SensorNoiseModel(sigma_I=sigma_I, depth_unit_m=depth_unit_m),
        drift_rate=drift_rate,
        loop_closure_at=[path],
        patch_stride=4,
    )
    return _config(base, overrides)


def scenario_pipeline(gate_on: Literal["innovation", "state"] = "innovation", **association: Any) -> PipelineConfig:
    """
    Replay settings the built-in scenarios are tuned for.

    Compact classes gate on position only, since their observed heading is
    the bearing from the robot. Doors sit at the middle of their inlier span
    along the wall. Gating uses the innovation covariance unless `gate_on`
    selects the instance covariance.

    Args:
        gate_on: Gating covariance.
        **association: Further AssociationConfig fields.

    Returns:
        The pipeline configuration.
    """
    return PipelineConfig(
        association=AssociationConfig(position_only_classes=COMPACT_CLASSES, gate_on=gate_on, **association),
        fitting=FittingConfig(door_position="midpoint"),
    )


SCENARIOS = {
    "corridor": corridor_scenario,
    "clustered_doors": clustered_doors_scenario,
    "loop": loop_scenario,
    "building_scale": building_scale_scenario,
}
