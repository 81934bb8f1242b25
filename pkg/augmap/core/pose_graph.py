"""
Pose Graph

This module contains the PoseGraph class, the trajectory representation that
tracked map objects are anchored to. Nodes are frames holding the robot pose
estimate; edges link consecutive frames and carry the relative motion
between them.
"""
# flake8: noqa: E501

import logging
from typing import Any, Dict, Iterator, Mapping, Optional

import networkx as nx

from augmap.core.geometry import Pose2D
from augmap.errors import UnknownAnchorError

logger = logging.getLogger(__name__)


class PoseGraph(nx.DiGraph):
    """
    A chain of robot poses, one node per frame.

    Node attribute `pose` holds the current estimate of the robot pose at that
    frame; edge attribute `delta` holds the motion from the parent node
    expressed in the parent's frame. The most recently added node is kept in
    `graph["head"]`.
    """

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        """Initialize a PoseGraph."""
        super().__init__(*args, **kwargs)
        self.graph.setdefault("head", None)

    @property
    def head(self) -> Optional[int]:
        return self.graph["head"]

    def add_pose(self, node: int, pose: Pose2D) -> None:
        """
        Append a frame to the chain.

        Args:
            node: Node id, unique within the graph.
            pose: Robot pose estimate at the frame.

        Raises:
            ValueError: If the node already exists.
        """
        if node in self:
            raise ValueError(f"pose graph node {node} already exists")
        parent = self.head
        self.add_node(node, pose=pose)
        if parent is not None:
            self.add_edge(parent, node, delta=pose.relative_to(self.pose(parent)))
        self.graph["head"] = node

    def pose(self, node: int) -> Pose2D:
        """
        Current pose estimate of a node.

        Raises:
            UnknownAnchorError: If the node is not in the graph.
        """
        try:
            return self.nodes[node]["pose"]
        except KeyError as err:
            raise UnknownAnchorError(f"unknown pose graph node {node}") from err

    def poses(self) -> Dict[int, Pose2D]:
        return {node: data["pose"] for node, data in self.nodes(data=True)}

    def apply_corrections(self, corrections: Mapping[int, Pose2D]) -> Dict[int, Pose2D]:
        """
        Overwrite corrected nodes and carry the change to their descendants.

        Nodes without a correction whose parent moved are re-propagated along
        their odometry edge, so the tail of the chain follows the correction.

        Args:
            corrections: Mapping of node id to corrected pose.

        Returns:
            The previous pose of every node whose pose changed.

        Raises:
            UnknownAnchorError: If a corrected node is not in the graph.
        """
        unknown = [n for n in corrections if n not in self]
        if unknown:
            raise UnknownAnchorError(f"corrections reference unknown nodes {sorted(unknown)}")

        previous: Dict[int, Pose2D] = {}
        for node in self._chain():
            old = self.nodes[node]["pose"]
            if node in corrections:
                new = corrections[node]
            else:
                parents = [p for p in self.predecessors(node) if p in previous]
                if not parents:
                    continue
                parent = parents[0]
                new = self.pose(parent).compose(self.edges[parent, node]["delta"])
            if new != old:
                previous[node] = old
                self.nodes[node]["pose"] = new

        # Corrected neighbours get new relative motions
        for u, v in self.edges:
            if u in corrections and v in corrections:
                self.edges[u, v]["delta"] = self.pose(v).relative_to(self.pose(u))

        logger.debug(
            "applied %d corrections, %d nodes moved", len(corrections), len(previous)
        )
        return previous

    def _chain(self) -> Iterator[int]:
        return iter(nx.topological_sort(self))
