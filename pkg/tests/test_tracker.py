"""
Tests for the tracker.

This module contains tests for the Mahalanobis cost, the assignment solver,
the constant-state Kalman update, the per-frame step and re-anchoring.
"""
# flake8: noqa: E501
# mypy: ignore-errors

import itertools
import math

import numpy as np
import pytest

from augmap.core.geometry import Pose2D
from augmap.core.shape_fitting import Cluster, ObjectObservation
from augmap.core.tracker import (
    TrackedInstance,
    TrackerState,
    cost_matrix,
    hungarian,
    kalman_update,
    mahalanobis,
    reanchor,
    step,
)
from augmap.errors import CovarianceError, UnknownAnchorError
from augmap.schemas.config import AssociationConfig
from augmap.schemas.domain import COMPACT_CLASSES, ObjectClass


def observation(x, y, theta=0.0, cls=ObjectClass.DOOR, t=0.0, range_from_robot=1.0):
    shape = Cluster(np.arange(3), np.array([x, y, 0.0]), (0.0, 0.0, 0.0))
    return ObjectObservation(cls, Pose2D(x, y, theta), shape, t, range_from_robot)


def instance(x=0.0, y=0.0, theta=0.0, cov=None, anchor=0, ident=0, cls=ObjectClass.DOOR):
    state = Pose2D(x, y, theta)
    return TrackedInstance(
        id=ident,
        class_label=cls,
        state=state,
        covariance=np.eye(3) if cov is None else cov,
        observation_count=1,
        last_seen=0.0,
        anchor_node=anchor,
        offset_from_anchor=state,
    )


@pytest.fixture
def unit_config():
    """Create a configuration with unit noise and the default gating."""
    return AssociationConfig(
        measurement_noise=(1.0, 1.0, 1.0),
        initial_covariance=(1.0, 1.0, 1.0),
    ).with_delta(1.5)


def brute_force_cost(costs):
    rows, cols = costs.shape
    if rows <= cols:
        return min(sum(costs[r, p[r]] for r in range(rows)) for p in itertools.permutations(range(cols), rows))
    return min(sum(costs[p[c], c] for c in range(cols)) for p in itertools.permutations(range(rows), cols))


def test_mahalanobis_examples():
    """Test that the distance reduces to Euclidean and scaled-axis cases."""
    assert mahalanobis(Pose2D(0, 0), np.eye(3), Pose2D(3, 4)) == pytest.approx(5.0)
    assert mahalanobis(Pose2D(0, 0), np.diag([4.0, 4.0, 1.0]), Pose2D(2, 0)) == pytest.approx(1.0)


def test_mahalanobis_wraps_heading():
    """Test that the heading residual is taken along the short arc."""
    d = mahalanobis(Pose2D(0, 0, 3.1), np.eye(3), Pose2D(0, 0, -3.1))
    assert d == pytest.approx(2 * math.pi - 6.2, abs=1e-9)


def test_mahalanobis_identity_is_wrapped_euclidean():
    """Test that S = I gives the norm of the wrapped residual."""
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = Pose2D(*rng.uniform(-3, 3, 3))
        b = Pose2D(*rng.uniform(-3, 3, 3))
        r = np.array([b.x - a.x, b.y - a.y, math.remainder(b.theta - a.theta, 2 * math.pi)])
        assert mahalanobis(a, np.eye(3), b) == pytest.approx(float(np.linalg.norm(r)), abs=1e-12)


def test_mahalanobis_position_only():
    """Test that position-only gating ignores the heading."""
    assert mahalanobis(Pose2D(0, 0, 0), np.eye(3), Pose2D(3, 4, 2.0), position_only=True) == pytest.approx(5.0)


def test_mahalanobis_rejects_bad_covariance():
    """Test that asymmetric and indefinite covariances are rejected."""
    with pytest.raises(CovarianceError):
        mahalanobis(Pose2D(0, 0), np.array([[1, 0.5, 0], [0, 1, 0], [0, 0, 1]]), Pose2D(1, 0))
    with pytest.raises(CovarianceError):
        mahalanobis(Pose2D(0, 0), np.diag([1.0, -1.0, 1.0]), Pose2D(1, 0))


def test_hungarian_small_examples():
    """Test that trivial matrices assign as expected."""
    assert hungarian(np.array([[4.0]])) == [(0, 0)]
    assert hungarian(np.array([[1.0, 2.0], [2.0, 1.0]])) == [(0, 0), (1, 1)]
    assert hungarian(np.zeros((0, 3))) == []


def test_hungarian_rectangular():
    """Test that rectangular matrices match min(rows, cols) pairs without padding pairs."""
    wide = np.array([[5.0, 1.0, 3.0], [2.0, 4.0, 0.5]])
    assert hungarian(wide) == [(0, 1), (1, 2)]
    tall = wide.T
    assert hungarian(tall) == [(1, 0), (2, 1)]


def test_hungarian_lexicographic_ties():
    """Test that ties between optimal assignments pick the lowest (row, col) list."""
    assert hungarian(np.ones((3, 3))) == [(0, 0), (1, 1), (2, 2)]
    assert hungarian(np.ones((2, 4))) == [(0, 0), (1, 1)]
    assert hungarian(np.ones((4, 2))) == [(0, 0), (1, 1)]


def test_hungarian_matches_brute_force():
    """Test that the total cost equals the exhaustive minimum on random matrices."""
    rng = np.random.default_rng(42)
    for _ in range(200):
        rows, cols = rng.integers(1, 6, size=2)
        costs = rng.uniform(0, 10, size=(rows, cols))
        pairs = hungarian(costs)
        assert len(pairs) == min(rows, cols)
        assert len({c for _, c in pairs}) == len(pairs)
        total = sum(costs[r, c] for r, c in pairs)
        assert abs(total - brute_force_cost(costs)) < 1e-9


def test_hungarian_shift_invariant():
    """Test that adding a constant to every entry keeps the assignment."""
    costs = np.random.default_rng(1).uniform(0, 5, size=(4, 4))
    assert hungarian(costs) == hungarian(costs + 7.5)


def test_hungarian_rejects_non_finite():
    """Test that infinite costs are rejected."""
    with pytest.raises(ValueError):
        hungarian(np.array([[1.0, np.inf]]))


def test_kalman_update_closed_form(unit_config):
    """Test that equal prior and measurement covariances halve the covariance."""
    cfg = AssociationConfig(measurement_noise=(1.0, 1.0, 1.0))
    updated = kalman_update(instance(), observation(1.0, 0.0, t=2.0), cfg)
    assert (updated.state.x, updated.state.y, updated.state.theta) == pytest.approx((0.5, 0.0, 0.0))
    np.testing.assert_allclose(updated.covariance, 0.5 * np.eye(3), atol=1e-12)
    assert updated.observation_count == 2
    assert updated.last_seen == 2.0


def test_kalman_update_uninformative_measurement():
    """Test that a near-infinite measurement noise leaves the state in place."""
    cfg = AssociationConfig(measurement_noise=(1e9, 1e9, 1e9))
    updated = kalman_update(instance(), observation(1.0, 1.0, 1.0), cfg)
    assert updated.state.distance_to(Pose2D(0, 0)) < 1e-6
    assert abs(updated.state.theta) < 1e-6


def test_kalman_update_wraps_heading():
    """Test that the heading update follows the short arc across pi."""
    cfg = AssociationConfig(measurement_noise=(1.0, 1.0, 1.0))
    updated = kalman_update(instance(theta=3.0), observation(0.0, 0.0, -3.0), cfg)
    assert abs(updated.state.theta) == pytest.approx(math.pi, abs=1e-9)


def test_kalman_batch_equivalence():
    """Test that sequential updates equal the information-filter batch solution."""
    rng = np.random.default_rng(5)
    R = np.diag([0.04, 0.09, 0.01])
    P0 = np.diag([0.25, 0.25, 0.25])
    cfg = AssociationConfig(measurement_noise=tuple(np.diag(R)), initial_covariance=tuple(np.diag(P0)))
    measurements = rng.normal([1.0, 2.0, 0.3], [0.2, 0.3, 0.1], size=(50, 3))

    inst = instance(*measurements[0], cov=P0)
    for z in measurements[1:]:
        inst = kalman_update(inst, observation(*z), cfg)

    info = np.linalg.inv(P0) + 49 * np.linalg.inv(R)
    cov = np.linalg.inv(info)
    mean = cov @ (np.linalg.inv(P0) @ measurements[0] + np.linalg.inv(R) @ measurements[1:].sum(axis=0))
    np.testing.assert_allclose(inst.covariance, cov, atol=1e-9)
    np.testing.assert_allclose(inst.state.as_array(), mean, atol=1e-9)


def test_kalman_order_independence_and_shrinking_trace():
    """Test that the fused state does not depend on observation order and the trace shrinks."""
    cfg = AssociationConfig()
    zs = [(1.0, 0.1, 0.05), (1.2, -0.1, 0.0), (0.9, 0.0, -0.05), (1.1, 0.05, 0.02)]
    forward, backward = instance(1.0, 0.0), instance(1.0, 0.0)
    for z in zs:
        before = np.trace(forward.covariance)
        forward = kalman_update(forward, observation(*z), cfg)
        assert np.trace(forward.covariance) < before
    for z in reversed(zs):
        backward = kalman_update(backward, observation(*z), cfg)
    np.testing.assert_allclose(forward.state.as_array(), backward.state.as_array(), atol=1e-9)


def test_tracked_instance_rejects_invalid_covariance():
    """Test that instances need an SPD covariance and at least one observation."""
    with pytest.raises(CovarianceError):
        instance(cov=np.diag([1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        TrackedInstance(0, ObjectClass.DOOR, Pose2D(0, 0), np.eye(3), 0, 0.0, 0, Pose2D(0, 0))


def test_step_cold_start(unit_config):
    """Test that the first observation spawns an instance with the initial covariance."""
    state = step(TrackerState(), [observation(2.0, 1.0)], Pose2D(0, 0), 0, unit_config)
    (inst,) = state.all_instances()
    assert inst.state == Pose2D(2.0, 1.0)
    np.testing.assert_allclose(inst.covariance, np.eye(3))
    assert inst.anchor_node == 0
    assert state.next_id == 1


def test_step_associates_within_gate(unit_config):
    """Test that an observation inside the gate updates the instance."""
    state = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config)
    costs = cost_matrix(state.of_class(ObjectClass.DOOR), [observation(0.5, 0.0)], unit_config)
    assert costs[0, 0] == pytest.approx(0.5)
    state = step(state, [observation(0.5, 0.0)], Pose2D(0, 0), 1, unit_config)
    (inst,) = state.all_instances()
    assert 0.0 < inst.state.x < 0.5
    assert inst.observation_count == 2


def test_step_gates_out_far_observation(unit_config):
    """Test that an observation outside the gate spawns a second instance."""
    state = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config)
    state = step(state, [observation(10.0, 0.0, range_from_robot=5.0)], Pose2D(0, 0), 1, unit_config)
    assert len(state) == 2
    assert [i.id for i in state.all_instances()] == [0, 1]


def single(inst):
    return TrackerState(instances={inst.class_label: (inst,)}, next_id=1)


def test_step_gates_on_instance_covariance_by_default():
    """Test that the default gate measures the residual against the instance covariance alone."""
    cfg = AssociationConfig().with_delta(1.5)
    state = single(instance(cov=0.01 * np.eye(3)))
    assert cost_matrix(state.of_class(ObjectClass.DOOR), [observation(0.2, 0.0)], cfg)[0, 0] == pytest.approx(2.0)
    state = step(state, [observation(0.2, 0.0)], Pose2D(0, 0), 0, cfg)
    assert len(state) == 2


def test_step_innovation_gate_is_opt_in():
    """Test that gating on P + Q + R widens the gate enough to fuse the same observation."""
    cfg = AssociationConfig(gate_on="innovation").with_delta(1.5)
    state = step(single(instance(cov=0.01 * np.eye(3))), [observation(0.2, 0.0)], Pose2D(0, 0), 0, cfg)
    (inst,) = state.all_instances()
    assert inst.observation_count == 2


def test_step_gates_full_state_by_default(unit_config):
    """Test that a compact object seen from another bearing is gated on its heading too."""
    extinguisher = ObjectClass.FIRE_EXTINGUISHER
    state = single(instance(cls=extinguisher))
    state = step(state, [observation(0.1, 0.0, 3.0, cls=extinguisher)], Pose2D(0, 0), 0, unit_config)
    assert len(state.of_class(extinguisher)) == 2


def test_step_position_only_classes(unit_config):
    """Test that classes listed for position-only gating ignore the observed heading."""
    cfg = unit_config.model_copy(update={"position_only_classes": COMPACT_CLASSES})
    extinguisher = ObjectClass.FIRE_EXTINGUISHER
    state = single(instance(cls=extinguisher))
    state = step(state, [observation(0.1, 0.0, 3.0, cls=extinguisher)], Pose2D(0, 0), 0, cfg)
    assert len(state.of_class(extinguisher)) == 1
    door = step(single(instance()), [observation(0.1, 0.0, 3.0)], Pose2D(0, 0), 0, cfg)
    assert len(door) == 2


def test_step_discards_out_of_range(unit_config):
    """Test that observations beyond max_range are ignored."""
    state = step(TrackerState(), [observation(9.0, 0.0, range_from_robot=9.0)], Pose2D(0, 0), 0, unit_config)
    assert len(state) == 0


def test_step_never_tracks_people(unit_config):
    """Test that person observations never spawn instances."""
    state = step(TrackerState(), [observation(1.0, 0.0, cls=ObjectClass.PERSON)], Pose2D(0, 0), 0, unit_config)
    assert len(state) == 0


def test_step_one_observation_per_instance(unit_config):
    """Test that two observations near one instance update it once and spawn once."""
    state = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config)
    state = step(state, [observation(0.1, 0.0), observation(0.2, 0.0)], Pose2D(0, 0), 1, unit_config)
    assert len(state) == 2
    assert sorted(i.observation_count for i in state.all_instances()) == [1, 2]


def test_step_keeps_classes_apart(unit_config):
    """Test that observations only associate with instances of their class."""
    state = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config)
    state = step(state, [observation(0.0, 0.0, cls=ObjectClass.BENCH)], Pose2D(0, 0), 1, unit_config)
    assert len(state.of_class(ObjectClass.DOOR)) == 1
    assert len(state.of_class(ObjectClass.BENCH)) == 1


def test_step_does_not_mutate_input(unit_config):
    """Test that step returns a new snapshot and leaves the old one intact."""
    first = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config)
    step(first, [observation(0.2, 0.0)], Pose2D(0, 0), 1, unit_config)
    assert first.all_instances()[0].observation_count == 1
    assert 1 not in first.pose_graph


def test_step_extends_owned_graph_in_place(unit_config):
    """Test that an owner discarding old snapshots can grow one pose graph across frames."""
    first = step(TrackerState(), [observation(0.0, 0.0)], Pose2D(0, 0), 0, unit_config, copy_graph=False)
    second = step(first, [observation(0.2, 0.0)], Pose2D(0.1, 0, 0), 1, unit_config, copy_graph=False)
    assert second.pose_graph is first.pose_graph
    assert list(second.pose_graph.nodes) == [0, 1]
    moved = reanchor(second, {0: Pose2D(0, 0.5, 0)}, copy_graph=False)
    assert moved.pose_graph is first.pose_graph
    assert moved.pose_graph.pose(1).y == pytest.approx(0.5)


def test_step_anchor_offset(unit_config):
    """Test that spawned instances store their pose relative to the anchor frame."""
    robot = Pose2D(1.0, 1.0, math.pi / 2)
    state = step(TrackerState(), [observation(1.0, 3.0, math.pi / 2)], robot, 7, unit_config)
    inst = state.all_instances()[0]
    assert inst.anchor_node == 7
    assert inst.offset_from_anchor.x == pytest.approx(2.0)
    assert inst.offset_from_anchor.y == pytest.approx(0.0, abs=1e-12)


def anchored(offset, anchor_pose, anchor=0):
    state = anchor_pose.compose(offset)
    inst = TrackedInstance(0, ObjectClass.DOOR, state, np.eye(3), 1, 0.0, anchor, offset)
    return TrackerState(instances={ObjectClass.DOOR: (inst,)}, next_id=1)


def test_reanchor_translation():
    """Test that moving the anchor moves the instance rigidly."""
    state = anchored(Pose2D(1, 0, 0), Pose2D(0, 0, 0))
    moved = reanchor(state, {0: Pose2D(0, 0.5, 0)}, {0: Pose2D(0, 0, 0)})
    assert moved.all_instances()[0].state == Pose2D(1.0, 0.5, 0.0)


def test_reanchor_rotation():
    """Test that rotating the anchor swings the instance around it."""
    state = anchored(Pose2D(1, 0, 0), Pose2D(2, 3, 0))
    moved = reanchor(state, {0: Pose2D(2, 3, math.pi / 2)}, {0: Pose2D(2, 3, 0)})
    inst = moved.all_instances()[0]
    assert (inst.state.x, inst.state.y, inst.state.theta) == pytest.approx((2.0, 4.0, math.pi / 2))
    np.testing.assert_array_equal(inst.covariance, np.eye(3))


def test_reanchor_identity_and_inverse():
    """Test that identity corrections keep states and inverse corrections restore them."""
    state = anchored(Pose2D(1.5, -0.5, 0.3), Pose2D(1, 2, 0.4))
    a = state.all_instances()[0].state
    same = reanchor(state, {0: Pose2D(1, 2, 0.4)}, {0: Pose2D(1, 2, 0.4)}).all_instances()[0].state
    assert (same.x, same.y, same.theta) == pytest.approx((a.x, a.y, a.theta), abs=1e-12)

    there = reanchor(state, {0: Pose2D(0, 0, -1.0)}, {0: Pose2D(1, 2, 0.4)})
    back = reanchor(there, {0: Pose2D(1, 2, 0.4)}, {0: Pose2D(0, 0, -1.0)})
    b = back.all_instances()[0].state
    assert (b.x, b.y, b.theta) == pytest.approx((a.x, a.y, a.theta), abs=1e-9)


def test_reanchor_unknown_anchor():
    """Test that an anchor missing from the mappings raises UnknownAnchorError."""
    state = anchored(Pose2D(1, 0, 0), Pose2D(0, 0, 0), anchor=3)
    with pytest.raises(UnknownAnchorError):
        reanchor(state, {0: Pose2D(0, 0)}, {0: Pose2D(0, 0)})


def test_reanchor_through_pose_graph(unit_config):
    """Test that corrections applied to the tracker's pose graph move anchored instances."""
    state = TrackerState()
    for node in range(3):
        robot = Pose2D(float(node), 0.0, 0.0)
        obs = [observation(node + 1.0, 1.0)] if node == 1 else []
        state = step(state, obs, robot, node, unit_config)
    moved = reanchor(state, {1: Pose2D(1.0, 0.5, 0.0)})
    inst = moved.all_instances()[0]
    assert inst.state.x == pytest.approx(2.0)
    assert inst.state.y == pytest.approx(1.5)
    assert moved.pose_graph.pose(2).y == pytest.approx(0.5)
