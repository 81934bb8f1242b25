"""
Tests for the occupancy grid.
"""
# mypy: ignore-errors

import numpy as np
import pytest
import yaml

from augmap.core.geometry import Pose2D
from augmap.errors import ConfigError, GridFormatError
from augmap.maps.occupancy import (
    CellState,
    OccupancyGrid,
    corridor_grid,
    load_grid,
    save_grid,
    sidecar_path,
)
from augmap.schemas.config import CorridorSpec, Rect


@pytest.fixture
def small_grid():
    """Create a 3x4 grid with a wall row at the bottom and an unknown corner."""
    cells = np.full((3, 4), CellState.FREE, dtype=np.uint8)
    cells[0, :] = CellState.OCCUPIED
    cells[2, 3] = CellState.UNKNOWN
    return OccupancyGrid(0.05, Pose2D(1.0, -2.0, 0.0), cells)


def test_grid_rejects_bad_cells():
    """Test that cell bytes other than the three states are rejected."""
    with pytest.raises(ValueError):
        OccupancyGrid(0.05, Pose2D(0, 0), np.array([[0, 100]]))
    with pytest.raises(ValueError):
        OccupancyGrid(0.0, Pose2D(0, 0), np.zeros((2, 2)))


def test_cell_of_and_world_of():
    """Test that map points fall into the expected cells and cell centers map back."""
    grid = OccupancyGrid(0.05, Pose2D(0, 0), np.full((10, 10), CellState.FREE, dtype=np.uint8))
    assert grid.cell_of(0.12, 0.07) == (2, 1)
    x, y = grid.world_of(2, 1)
    assert (x, y) == pytest.approx((0.125, 0.075))
    assert grid.cell_of(-0.01, 0.0) == (-1, 0)


def test_out_of_bounds_is_unknown(small_grid):
    """Test that cells outside the grid read as unknown."""
    assert small_grid.state(-1, 0) == CellState.UNKNOWN
    assert small_grid.state(4, 0) == CellState.UNKNOWN
    assert small_grid.state(0, 0) == CellState.OCCUPIED


def test_save_load_round_trip(tmp_path, small_grid):
    """Test that a saved grid loads back with equal cells and metadata."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    assert sidecar_path(path).exists()
    loaded = load_grid(path)
    np.testing.assert_array_equal(loaded.cells, small_grid.cells)
    assert loaded.resolution == small_grid.resolution
    assert loaded.origin == small_grid.origin


def test_pgm_stores_top_row_first(tmp_path, small_grid):
    """Test that the first payload row is the grid row with the highest y."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    data = path.read_bytes()
    assert data.startswith(b"P5\n4 3\n255\n")
    payload = data[len(b"P5\n4 3\n255\n"):]
    assert list(payload[:4]) == [254, 254, 254, 205]
    assert list(payload[-4:]) == [0, 0, 0, 0]


def test_load_accepts_header_comments(tmp_path, small_grid):
    """Test that comment lines inside the PGM header are skipped."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    data = path.read_bytes().replace(b"P5\n", b"P5\n# written by hand\n", 1)
    path.write_bytes(data)
    np.testing.assert_array_equal(load_grid(path).cells, small_grid.cells)


@pytest.mark.parametrize(
    "content",
    [
        b"P2\n2 1\n255\n",
        b"P5\n2 2\n255\n\xfe\xfe\xfe",
        b"P5\n2 1\n255\n\xfe\x10",
        b"P5\n2 1\n15\n\xfe\xfe",
    ],
)
def test_load_rejects_malformed_pgm(tmp_path, small_grid, content):
    """Test that a wrong magic, payload size, cell byte or maxval raises GridFormatError."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    path.write_bytes(content)
    with pytest.raises(GridFormatError):
        load_grid(path)


def test_load_requires_sidecar(tmp_path, small_grid):
    """Test that missing or incomplete metadata raises GridFormatError."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    sidecar_path(path).write_text("resolution: 0.05\n")
    with pytest.raises(GridFormatError):
        load_grid(path)
    sidecar_path(path).unlink()
    with pytest.raises(GridFormatError):
        load_grid(path)


def test_sidecar_is_yaml(tmp_path, small_grid):
    """Test that the sidecar is a YAML mapping holding the four metadata keys in order."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    text = sidecar_path(path).read_text()
    assert list(yaml.safe_load(text)) == ["resolution", "origin_x", "origin_y", "origin_theta"]
    assert text.splitlines()[0] == "resolution: 0.05"


def test_load_accepts_commented_sidecar(tmp_path, small_grid):
    """Test that comments and extra keys in a hand-written sidecar are accepted."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    sidecar_path(path).write_text(
        "# written by hand\n"
        "image: map.pgm\n"
        "resolution: 0.05  # m/cell\n"
        "origin_x: 1\n"
        "origin_y: -2.0\n"
        "origin_theta: 0.0\n"
    )
    loaded = load_grid(path)
    assert loaded.resolution == 0.05
    assert loaded.origin == Pose2D(1.0, -2.0, 0.0)


@pytest.mark.parametrize(
    "content",
    [
        "resolution: [0.05\n",
        "- 0.05\n- 1.0\n",
        "resolution: fine\norigin_x: 0\norigin_y: 0\norigin_theta: 0\n",
        "resolution: true\norigin_x: 0\norigin_y: 0\norigin_theta: 0\n",
    ],
)
def test_load_rejects_malformed_sidecar(tmp_path, small_grid, content):
    """Test that invalid YAML, a non-mapping or a non-numeric value raises GridFormatError."""
    path = tmp_path / "map.pgm"
    save_grid(small_grid, path)
    sidecar_path(path).write_text(content)
    with pytest.raises(GridFormatError):
        load_grid(path)


def test_load_missing_file(tmp_path):
    """Test that a missing grid file raises GridFormatError."""
    with pytest.raises(GridFormatError):
        load_grid(tmp_path / "absent.pgm")


def test_corridor_grid_layout():
    """Test that the generated corridor has walls on its border, a free interior and an unknown margin."""
    grid = corridor_grid(CorridorSpec(length=2.0, width=1.0, margin=0.1))
    assert (grid.height, grid.width) == (24, 44)
    assert grid.origin == Pose2D(-0.1, -0.1, 0.0)
    assert grid.is_free(1.0, 0.5)
    assert not grid.is_free(0.01, 0.5)
    assert grid.state(*grid.cell_of(-0.05, 0.5)) == CellState.UNKNOWN


def test_corridor_grid_blocks():
    """Test that interior blocks are filled as walls."""
    spec = CorridorSpec(length=2.0, width=1.0, blocks=[Rect(x_min=0.5, y_min=0.2, x_max=1.0, y_max=0.8)])
    grid = corridor_grid(spec)
    assert not grid.is_free(0.75, 0.5)
    assert grid.is_free(1.5, 0.5)


def test_corridor_grid_too_small():
    """Test that a floor narrower than three cells is a configuration error."""
    with pytest.raises(ConfigError):
        corridor_grid(CorridorSpec(length=2.0, width=0.1))
