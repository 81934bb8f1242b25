"""
Maps Package

This package contains occupancy grids and the persistence of annotations,
augmented maps and frame logs.
"""

from augmap.maps.map_io import (
    AugmentedMap,
    load_annotations,
    load_augmented,
    load_events,
    load_log,
    save_annotations,
    save_augmented,
    save_events,
    save_log,
)
from augmap.maps.occupancy import CellState, OccupancyGrid, corridor_grid, load_grid, save_grid

__all__ = [
    "AugmentedMap",
    "load_annotations",
    "load_augmented",
    "load_events",
    "load_log",
    "save_annotations",
    "save_augmented",
    "save_events",
    "save_log",
    "CellState",
    "OccupancyGrid",
    "corridor_grid",
    "load_grid",
    "save_grid",
]
