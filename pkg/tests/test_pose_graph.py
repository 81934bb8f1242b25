"""
Tests for the pose graph.
"""
# mypy: ignore-errors

import pytest

from augmap.core.geometry import Pose2D
from augmap.core.pose_graph import PoseGraph
from augmap.errors import UnknownAnchorError


@pytest.fixture
def chain():
    """Create a four-node chain moving 1 m along x per node."""
    graph = PoseGraph()
    for k in range(4):
        graph.add_pose(k, Pose2D(float(k), 0.0, 0.0))
    return graph


def test_add_pose_links_consecutive_nodes(chain):
    """Test that each node is linked to its predecessor with the relative motion."""
    assert chain.head == 3
    assert list(chain.edges) == [(0, 1), (1, 2), (2, 3)]
    assert chain.edges[1, 2]["delta"] == Pose2D(1.0, 0.0, 0.0)


def test_add_pose_rejects_duplicates(chain):
    """Test that a node id cannot be added twice."""
    with pytest.raises(ValueError):
        chain.add_pose(2, Pose2D(0, 0))


def test_unknown_node(chain):
    """Test that looking up or correcting a missing node raises UnknownAnchorError."""
    with pytest.raises(UnknownAnchorError):
        chain.pose(9)
    with pytest.raises(UnknownAnchorError):
        chain.apply_corrections({9: Pose2D(0, 0)})


def test_correction_propagates_to_descendants(chain):
    """Test that uncorrected descendants follow a corrected node along their edges."""
    previous = chain.apply_corrections({1: Pose2D(1.0, 0.5, 0.0)})
    assert chain.pose(0) == Pose2D(0.0, 0.0, 0.0)
    assert chain.pose(3).x == pytest.approx(3.0)
    assert chain.pose(3).y == pytest.approx(0.5)
    assert set(previous) == {1, 2, 3}
    assert previous[3] == Pose2D(3.0, 0.0, 0.0)


def test_rotation_correction_swings_the_tail(chain):
    """Test that rotating a node rotates the rest of the chain around it."""
    chain.apply_corrections({1: Pose2D(1.0, 0.0, 1.5707963267948966)})
    assert chain.pose(2).x == pytest.approx(1.0)
    assert chain.pose(2).y == pytest.approx(1.0)


def test_full_correction_overrides_every_node(chain):
    """Test that correcting every node sets exactly the given poses."""
    corrections = {k: Pose2D(float(k), 0.2, 0.0) for k in range(4)}
    chain.apply_corrections(corrections)
    assert chain.poses() == corrections
    assert chain.edges[0, 1]["delta"].y == pytest.approx(0.0)


def test_copy_is_independent(chain):
    """Test that corrections to a copy leave the original unchanged."""
    copy = chain.copy()
    copy.apply_corrections({0: Pose2D(5, 5)})
    assert chain.pose(0) == Pose2D(0, 0)
    assert copy.head == chain.head
