"""
Occupancy Grid

This module contains the trinary occupancy grid the object map is overlaid
on, its PGM persistence with a sidecar metadata file, and the corridor
generator used by simulated scenarios.

Cell (0, 0) is the cell at the grid origin; rows grow along the map's y
axis. The PGM image stores the top row (highest y) first.
"""
# flake8: noqa: E501

import logging
import math
import re
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Dict, Iterable, Tuple, Union

import numpy as np
import yaml

from augmap.core.geometry import Pose2D
from augmap.errors import ConfigError, GridFormatError
from augmap.schemas.config import CorridorSpec

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".yaml"
SIDECAR_KEYS = ("resolution", "origin_x", "origin_y", "origin_theta")

_HEADER = re.compile(rb"\AP5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


class CellState(IntEnum):
    """PGM byte value of each cell state."""

    OCCUPIED = 0
    UNKNOWN = 205
    FREE = 254


_CELL_VALUES = np.array([s.value for s in CellState], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    A 2D trinary occupancy grid.

    Attributes:
        resolution: Cell size in meters.
        origin: Map pose of the corner of cell (0, 0).
        cells: (height, width) array of CellState byte values.
    """

    resolution: float
    origin: Pose2D
    cells: np.ndarray

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise ValueError("grid resolution must be positive")
        cells = np.array(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ValueError("grid cells must be a 2D array")
        if not np.all(np.isin(cells, _CELL_VALUES)):
            raise ValueError("grid cells must be 0, 205 or 254")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        """(col, row) of the cell containing a map point; may be out of bounds."""
        local = self.origin.inverse().compose(Pose2D(x, y))
        return (
            int(math.floor(local.x / self.resolution)),
            int(math.floor(local.y / self.resolution)),
        )

    def world_of(self, col: int, row: int) -> Tuple[float, float]:
        """Map coordinates of a cell center."""
        center = self.origin.compose(
            Pose2D((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)
        )
        return center.x, center.y

    def state(self, col: int, row: int) -> CellState:
        if not self.in_bounds(col, row):
            return CellState.UNKNOWN
        return CellState(int(self.cells[row, col]))

    def is_free(self, x: float, y: float) -> bool:
        return self.state(*self.cell_of(x, y)) == CellState.FREE


def _write_sidecar(path: Path, grid: OccupancyGrid) -> None:
    values = {
        "resolution": grid.resolution,
        "origin_x": grid.origin.x,
        "origin_y": grid.origin.y,
        "origin_theta": grid.origin.theta,
    }
    path.write_text(yaml.safe_dump(values, sort_keys=False, default_flow_style=False))


def _read_sidecar(path: Path) -> Dict[str, float]:
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as err:
        raise GridFormatError(f"cannot read grid metadata {path}: {err}") from err
    except yaml.YAMLError as err:
        raise GridFormatError(f"{path}: invalid YAML: {err}") from err
    if not isinstance(data, dict):
        raise GridFormatError(f"{path}: expected a mapping of metadata keys")
    missing = [k for k in SIDECAR_KEYS if k not in data]
    if missing:
        raise GridFormatError(f"{path}: missing keys {missing}")
    values: Dict[str, float] = {}
    for key in SIDECAR_KEYS:
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise GridFormatError(f"{path}: {key} must be a number, got {value!r}")
        values[key] = float(value)
    return values


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(path).with_suffix(SIDECAR_SUFFIX)


def save_grid(grid: OccupancyGrid, path: Union[str, Path]) -> None:
    """
    Write a grid as a binary P5 PGM plus a sidecar metadata file.

    Args:
        grid: The grid.
        path: PGM path; the sidecar is written next to it with a `.yaml` suffix.
    """
    path = Path(path)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    path.write_bytes(header + np.flipud(grid.cells).tobytes())
    _write_sidecar(sidecar_path(path), grid)


def load_grid(path: Union[str, Path]) -> OccupancyGrid:
    """
    Read a binary P5 grid and its YAML sidecar.

    The sidecar must hold the keys resolution, origin_x, origin_y and
    origin_theta; other keys are ignored.

    Raises:
        GridFormatError: On a malformed header, payload size mismatch,
            unknown cell byte or malformed sidecar.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise GridFormatError(f"cannot read grid {path}: {err}") from err

    match = _HEADER.match(data)
    if match is None:
        raise GridFormatError(f"{path}: not a binary P5 PGM")
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255 or width == 0 or height == 0:
        raise GridFormatError(f"{path}: unsupported size {width}x{height} or maxval {maxval}")

    payload = data[match.end():]
    if len(payload) != width * height:
        raise GridFormatError(
            f"{path}: payload has {len(payload)} bytes, expected {width * height}"
        )
    cells = np.flipud(np.frombuffer(payload, dtype=np.uint8).reshape(height, width))
    bad = np.setdiff1d(np.unique(cells), _CELL_VALUES)
    if bad.size:
        raise GridFormatError(f"{path}: unknown cell values {bad.tolist()}")

    meta = _read_sidecar(sidecar_path(path))
    return OccupancyGrid(
        resolution=meta["resolution"],
        origin=Pose2D(meta["origin_x"], meta["origin_y"], meta["origin_theta"]),
        cells=cells,
    )


def corridor_grid(spec: CorridorSpec) -> OccupancyGrid:
    """
    Generate a walled floor.

    The floor covers [0, length) x [0, width); its border cells are walls and
    every interior block is filled as wall. `margin` meters of unknown cells
    surround the floor.

    Raises:
        ConfigError: If the floor spans fewer than 3 cells in a direction.
    """
    res = spec.resolution
    margin_cells = int(round(spec.margin / res))
    floor_w = int(round(spec.length / res))
    floor_h = int(round(spec.width / res))
    if floor_w < 3 or floor_h < 3:
        raise ConfigError("corridor must span at least 3 cells in each direction")

    cells = np.full(
        (floor_h + 2 * margin_cells, floor_w + 2 * margin_cells), CellState.UNKNOWN, dtype=np.uint8
    )
    floor = cells[margin_cells:margin_cells + floor_h, margin_cells:margin_cells + floor_w]
    floor[:, :] = CellState.OCCUPIED
    floor[1:-1, 1:-1] = CellState.FREE

    origin = Pose2D(-margin_cells * res, -margin_cells * res)
    grid = OccupancyGrid(res, origin, cells)
    blocked = _fill_blocks(grid, spec.blocks)
    logger.debug("generated %dx%d corridor grid", grid.width, grid.height)
    return blocked


def _fill_blocks(grid: OccupancyGrid, blocks: Iterable) -> OccupancyGrid:
    blocks = list(blocks)
    if not blocks:
        return grid
    cells = grid.cells.copy()
    cols = np.arange(grid.width)
    rows = np.arange(grid.height)
    xs = grid.origin.x + (cols + 0.5) * grid.resolution
    ys = grid.origin.y + (rows + 0.5) * grid.resolution
    for block in blocks:
        in_x = (xs >= block.x_min) & (xs < block.x_max)
        in_y = (ys >= block.y_min) & (ys < block.y_max)
        cells[np.ix_(in_y, in_x)] = CellState.OCCUPIED
    return OccupancyGrid(grid.resolution, grid.origin, cells)
