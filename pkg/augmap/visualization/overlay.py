"""
Overlay Rendering

This module rasterizes an augmented map over its occupancy grid: one image
pixel per grid cell, each instance drawn as a square glyph in its class
color with a short tick along its orientation. Images are written as binary
P6 PPM.
"""

import logging
import math
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from augmap.maps.map_io import AugmentedMap
from augmap.maps.occupancy import CellState, OccupancyGrid
from augmap.schemas.domain import ObjectClass

logger = logging.getLogger(__name__)

Color = Tuple[int, int, int]

CLASS_COLORS: Dict[ObjectClass, Color] = {
    ObjectClass.DOOR: (0, 255, 0),
    ObjectClass.FIRE_EXTINGUISHER: (255, 0, 0),
    ObjectClass.TRASH_BIN: (255, 255, 0),
    ObjectClass.WATER_FOUNTAIN: (0, 255, 255),
    ObjectClass.BENCH: (0, 0, 139),
}

CELL_COLORS: Dict[CellState, Color] = {
    CellState.FREE: (255, 255, 255),
    CellState.OCCUPIED: (0, 0, 0),
    CellState.UNKNOWN: (205, 205, 205),
}

GLYPH_HALF = 2
TICK_LENGTH = 7


def render_overlay(augmented: AugmentedMap, grid: OccupancyGrid) -> Tuple[np.ndarray, int]:
    """
    Rasterize instances over a grid.

    Glyphs of instances outside the grid are clamped to the border.

    Args:
        augmented: The augmented map.
        grid: The occupancy grid, non-empty.

    Returns:
        The (height, width, 3) uint8 image with row 0 at the top, and the
        number of clamped glyphs.
    """
    image = np.zeros((grid.height, grid.width, 3), dtype=np.uint8)
    for state, color in CELL_COLORS.items():
        image[grid.cells == state.value] = color

    clamped = 0
    for inst in augmented.instances:
        color = CLASS_COLORS.get(inst.class_label)
        if color is None:
            continue
        col, row = grid.cell_of(inst.state.x, inst.state.y)
        if not grid.in_bounds(col, row):
            clamped += 1
        col = min(max(col, 0), grid.width - 1)
        row = min(max(row, 0), grid.height - 1)

        c0, c1 = max(col - GLYPH_HALF, 0), min(col + GLYPH_HALF, grid.width - 1)
        r0, r1 = max(row - GLYPH_HALF, 0), min(row + GLYPH_HALF, grid.height - 1)
        image[r0:r1 + 1, c0:c1 + 1] = color

        # Orientation relative to the grid axes
        heading = inst.state.theta - grid.origin.theta
        for k in range(1, TICK_LENGTH + 1):
            tc = col + int(round(k * math.cos(heading)))
            tr = row + int(round(k * math.sin(heading)))
            if grid.in_bounds(tc, tr):
                image[tr, tc] = color

    if clamped:
        logger.warning("%d instance glyphs lie outside the grid and were clamped", clamped)
    return np.flipud(image), clamped


def render(augmented: AugmentedMap, grid: OccupancyGrid, path: Union[str, Path]) -> int:
    """
    Write the overlay of an augmented map as a binary P6 PPM.

    Returns:
        The number of instance glyphs clamped to the grid border.
    """
    image, clamped = render_overlay(augmented, grid)
    header = f"P6\n{grid.width} {grid.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(image).tobytes())
    return clamped
