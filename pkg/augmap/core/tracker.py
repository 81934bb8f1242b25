"""
Tracker

This module contains the per-class registry of tracked map objects: the
Mahalanobis association cost, rectangular assignment with deterministic
tie-breaking, gating, constant-state Kalman fusion, and re-anchoring of
instances after pose graph corrections.
"""
# flake8: noqa: E501

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import linear_sum_assignment

from augmap.core.geometry import Pose2D, wrap_angle
from augmap.core.pose_graph import PoseGraph
from augmap.core.shape_fitting import ObjectObservation
from augmap.errors import CovarianceError, UnknownAnchorError
from augmap.schemas.config import AssociationConfig
from augmap.schemas.domain import STATIC_CLASSES, ObjectClass

logger = logging.getLogger(__name__)

# Rows are instances, columns are observations
CostMatrix = np.ndarray

SYMMETRY_TOL = 1e-12


def _check_spd(S: np.ndarray) -> Tuple[np.ndarray, bool]:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise CovarianceError(f"covariance must be square, got shape {S.shape}")
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(S)))):
        raise CovarianceError("covariance is not symmetric")
    try:
        return cho_factor(S)
    except LinAlgError as err:
        raise CovarianceError("covariance is not positive-definite") from err


@dataclass(frozen=True, eq=False)
class TrackedInstance:
    """
    One persistent map object.

    `state` is the filtered pose and `covariance` its 3x3 covariance in
    (m², m², rad²). The instance is anchored to a pose graph node: `state`
    equals the anchor pose composed with `offset_from_anchor`.
    """

    id: int
    class_label: ObjectClass
    state: Pose2D
    covariance: np.ndarray
    observation_count: int
    last_seen: float
    anchor_node: int
    offset_from_anchor: Pose2D

    def __post_init__(self) -> None:
        cov = np.array(self.covariance, dtype=float)
        _check_spd(cov)
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)
        if self.observation_count < 1:
            raise ValueError("observation_count must be at least 1")

    @property
    def anchor_pose(self) -> Pose2D:
        """Anchor pose implied by the state and the offset."""
        return self.state.compose(self.offset_from_anchor.inverse())


@dataclass(frozen=True)
class TrackerState:
    """
    Immutable snapshot of the tracker.

    Attributes:
        instances: Tracked instances per class, in creation order.
        next_id: Id given to the next spawned instance.
        pose_graph: Poses of the frames instances are anchored to.
    """

    instances: Dict[ObjectClass, Tuple[TrackedInstance, ...]] = field(default_factory=dict)
    next_id: int = 0
    pose_graph: PoseGraph = field(default_factory=PoseGraph)

    def of_class(self, cls: ObjectClass) -> Tuple[TrackedInstance, ...]:
        return self.instances.get(cls, ())

    def all_instances(self) -> List[TrackedInstance]:
        """Every instance, ordered by id."""
        return sorted((i for group in self.instances.values() for i in group), key=lambda i: i.id)

    def __len__(self) -> int:
        return sum(len(group) for group in self.instances.values())


def _residual(x: Pose2D, y: Pose2D) -> np.ndarray:
    return np.array([y.x - x.x, y.y - x.y, wrap_angle(y.theta - x.theta)])


def mahalanobis(x: Pose2D, S: np.ndarray, y: Pose2D, position_only: bool = False) -> float:
    """
    Covariance-weighted distance between a state and an observation.

    Args:
        x: Filtered state.
        S: 3x3 symmetric positive-definite covariance.
        y: Observed pose.
        position_only: Use only the (x, y) block.

    Returns:
        sqrt(rᵀ S⁻¹ r) with the angular residual wrapped.

    Raises:
        CovarianceError: If S is not symmetric positive-definite.
    """
    r = _residual(x, y)
    S = np.asarray(S, dtype=float)
    if position_only:
        r, S = r[:2], S[:2, :2]
    factor = _check_spd(S)
    return float(np.sqrt(max(0.0, float(r @ cho_solve(factor, r)))))


def hungarian(costs: CostMatrix) -> List[Tuple[int, int]]:
    """
    Minimum-cost assignment of rows to columns.

    Rectangular matrices are padded to square with a constant above the
    largest entry; padded pairs are not returned. Among optimal assignments
    the lexicographically smallest (row, col) list is chosen.

    Args:
        costs: Finite cost matrix, possibly rectangular or empty.

    Returns:
        Assigned (row, col) pairs sorted by row.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.size == 0:
        return []
    if not np.all(np.isfinite(costs)):
        raise ValueError("assignment costs must be finite")

    rows, cols = costs.shape
    size = max(rows, cols)
    pad = float(costs.max()) + 1.0
    padded = np.full((size, size), pad)
    padded[:rows, :cols] = costs

    r_idx, c_idx = linear_sum_assignment(padded)
    best = float(padded[r_idx, c_idx].sum())
    tol = 1e-9 * max(1.0, abs(best))
    forbid = (float(np.abs(padded).max()) + 1.0) * (size + 1) * 4.0

    assign = dict(zip(r_idx.tolist(), c_idx.tolist()))
    work = padded.copy()
    for r in range(rows):
        current = assign[r]
        upper = current if current < cols else cols
        for c in range(upper):
            if work[r, c] >= forbid:
                continue
            trial = work.copy()
            trial[r, :] = forbid
            trial[:, c] = forbid
            trial[r, c] = work[r, c]
            tr, tc = linear_sum_assignment(trial)
            if float(padded[tr, tc].sum()) <= best + tol and np.all(trial[tr, tc] < forbid):
                assign = dict(zip(tr.tolist(), tc.tolist()))
                break
        # Fix this row to its chosen column
        chosen = assign[r]
        fixed = work[r, chosen]
        work[r, :] = forbid
        work[:, chosen] = forbid
        work[r, chosen] = fixed

    return [(r, assign[r]) for r in range(rows) if assign[r] < cols]


def kalman_update(inst: TrackedInstance, obs: ObjectObservation, cfg: AssociationConfig) -> TrackedInstance:
    """
    Fuse one observation into an instance with identity dynamics.

    Predict P = S + Q, then update with H = I using the wrapped angular
    residual. The anchor node is kept and the offset follows the state.

    Args:
        inst: The instance.
        obs: An observation already associated with the instance.
        cfg: Noise parameters.

    Returns:
        The updated instance.
    """
    P = inst.covariance + cfg.Q
    innovation_cov = P + cfg.R
    gain = np.linalg.solve(innovation_cov, P).T
    x = inst.state.as_array() + gain @ _residual(inst.state, obs.pose)
    cov = (np.eye(3) - gain) @ P
    cov = 0.5 * (cov + cov.T)

    state = Pose2D(float(x[0]), float(x[1]), float(x[2]))
    return replace(
        inst,
        state=state,
        covariance=cov,
        observation_count=inst.observation_count + 1,
        last_seen=max(inst.last_seen, obs.timestamp),
        offset_from_anchor=state.relative_to(inst.anchor_pose),
    )


def cost_matrix(
    instances: Sequence[TrackedInstance],
    observations: Sequence[ObjectObservation],
    cfg: AssociationConfig,
) -> CostMatrix:
    """Mahalanobis distances between instances (rows) and observations (columns)."""
    costs = np.zeros((len(instances), len(observations)))
    for i, inst in enumerate(instances):
        S = inst.covariance + cfg.Q + cfg.R if cfg.gate_on == "innovation" else inst.covariance
        position_only = cfg.gates_position_only(inst.class_label)
        for j, obs in enumerate(observations):
            costs[i, j] = mahalanobis(inst.state, S, obs.pose, position_only)
    return costs


def _spawn(obs: ObjectObservation, ident: int, anchor_node: int, anchor_pose: Pose2D, cfg: AssociationConfig) -> TrackedInstance:
    return TrackedInstance(
        id=ident,
        class_label=obs.class_label,
        state=obs.pose,
        covariance=cfg.P0,
        observation_count=1,
        last_seen=obs.timestamp,
        anchor_node=anchor_node,
        offset_from_anchor=obs.pose.relative_to(anchor_pose),
    )


def step(
    state: TrackerState,
    observations: Sequence[ObjectObservation],
    robot: Pose2D,
    current_anchor_node: int,
    cfg: Optional[AssociationConfig] = None,
    copy_graph: bool = True,
) -> TrackerState:
    """
    Integrate the observations of one frame.

    Per static class: drop observations beyond `max_range`, assign the rest
    to instances by minimum total Mahalanobis distance, fuse pairs closer
    than the class's delta, and spawn a new instance for every other
    observation. People are never tracked.

    Args:
        state: Tracker snapshot before the frame.
        observations: Observations sharing one capture time.
        robot: Robot pose estimate at the frame.
        current_anchor_node: Pose graph node of the frame.
        cfg: Association configuration.
        copy_graph: Copy the pose graph before adding the frame node. Owners
            that discard the old snapshot pass False to extend it in place.

    Returns:
        The tracker snapshot after the frame.
    """
    cfg = cfg or AssociationConfig()
    graph = state.pose_graph.copy() if copy_graph else state.pose_graph
    if current_anchor_node not in graph:
        graph.add_pose(current_anchor_node, robot)
    anchor_pose = graph.pose(current_anchor_node)

    instances = dict(state.instances)
    next_id = state.next_id
    for cls in STATIC_CLASSES:
        obs = [o for o in observations if o.class_label == cls and o.range_from_robot <= cfg.max_range]
        if not obs:
            continue
        current = list(instances.get(cls, ()))
        matched = set()
        if current:
            costs = cost_matrix(current, obs, cfg)
            delta = cfg.delta_for(cls)
            for row, col in hungarian(costs):
                if costs[row, col] < delta:
                    current[row] = kalman_update(current[row], obs[col], cfg)
                    matched.add(col)
                    logger.debug("%s %d <- observation (D=%.3f)", cls, current[row].id, costs[row, col])
                else:
                    logger.debug("%s %d gated out observation (D=%.3f)", cls, current[row].id, costs[row, col])
        for col, o in enumerate(obs):
            if col in matched:
                continue
            current.append(_spawn(o, next_id, current_anchor_node, anchor_pose, cfg))
            logger.debug("spawned %s %d at (%.2f, %.2f)", cls, next_id, o.pose.x, o.pose.y)
            next_id += 1
        instances[cls] = tuple(current)

    return TrackerState(instances=instances, next_id=next_id, pose_graph=graph)


def reanchor(
    state: TrackerState,
    corrections: Mapping[int, Pose2D],
    original: Optional[Mapping[int, Pose2D]] = None,
    copy_graph: bool = True,
) -> TrackerState:
    """
    Move instances with the corrected poses of their anchor nodes.

    Each state is expressed in its anchor's original frame and recomposed
    onto the corrected anchor; covariances are unchanged. Without
    `original`, the corrections are applied to the tracker's pose graph
    and the graph's poses before and after the update are used, so nodes
    downstream of a correction move with it.

    Args:
        state: Tracker snapshot.
        corrections: Corrected pose per node id.
        original: Pose per node id before the correction.
        copy_graph: Copy the pose graph before correcting it.

    Returns:
        The re-anchored snapshot.

    Raises:
        UnknownAnchorError: If an instance's anchor is missing from the mappings.
    """
    graph = state.pose_graph.copy() if copy_graph else state.pose_graph
    if original is None:
        before = graph.poses()
        graph.apply_corrections(corrections)
        after = graph.poses()
    else:
        before, after = dict(original), dict(corrections)
        known = {n: p for n, p in corrections.items() if n in graph}
        if known:
            graph.apply_corrections(known)

    instances: Dict[ObjectClass, Tuple[TrackedInstance, ...]] = {}
    for cls, group in state.instances.items():
        moved = []
        for inst in group:
            if inst.anchor_node not in before or inst.anchor_node not in after:
                raise UnknownAnchorError(
                    f"instance {inst.id} anchored to unknown node {inst.anchor_node}"
                )
            offset = inst.state.relative_to(before[inst.anchor_node])
            new_state = after[inst.anchor_node].compose(offset)
            moved.append(replace(inst, state=new_state, offset_from_anchor=offset))
        instances[cls] = tuple(moved)

    logger.debug("re-anchored %d instances", len(state))
    return TrackerState(instances=instances, next_id=state.next_id, pose_graph=graph)
