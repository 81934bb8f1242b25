"""
Semantic Mapper

This module contains the SemanticMapper class, which replays a frame log
through back-projection, shape fitting and the tracker, applying loop-closure
correction events as they become available.

Replay runs in two stages: `extract` turns frames into per-frame observations
(the expensive geometric part), and `track_timeline` feeds them to the
tracker. Parameter sweeps over tracker settings reuse one extraction.
"""
# flake8: noqa: E501

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from augmap.core.geometry import (
    DEFAULT_BUFFER_CAPACITY,
    CameraIntrinsics,
    Pose2D,
    Pose3D,
    PoseBuffer,
    backproject_box,
    pose_at,
    transform_cloud,
)
from augmap.core.shape_fitting import ObjectObservation, extract_observation
from augmap.core.tracker import TrackerState, reanchor, step
from augmap.errors import FittingError
from augmap.schemas.config import AssociationConfig, PipelineConfig
from augmap.schemas.domain import ObjectClass
from augmap.schemas.records import CorrectionEvent, FrameRecord, LogHeader
from augmap.utils.rng import seed_sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameObservations:
    """
    The observations extracted from one frame.

    Attributes:
        anchor_node: Pose graph node of the frame.
        timestamp: Frame time in seconds.
        robot: Robot pose estimate at the frame.
        observations: Fitted observations in detection order.
    """

    anchor_node: int
    timestamp: float
    robot: Pose2D
    observations: Tuple[ObjectObservation, ...]


TimelineItem = Union[FrameObservations, CorrectionEvent]


def track_timeline(timeline: Iterable[TimelineItem], cfg: Optional[AssociationConfig] = None) -> TrackerState:
    """
    Run the tracker over extracted frames and correction events.

    The pose graph of the run is built in place, one node per frame.

    Args:
        timeline: Frames and events in processing order.
        cfg: Association configuration.

    Returns:
        The final tracker snapshot.
    """
    cfg = cfg or AssociationConfig()
    state = TrackerState()
    for item in timeline:
        if isinstance(item, CorrectionEvent):
            state = reanchor(state, item.corrections, copy_graph=False)
        else:
            state = step(state, item.observations, item.robot, item.anchor_node, cfg, copy_graph=False)
    return state


class SemanticMapper:
    """
    Replays frames into an augmented map.
    """

    def __init__(
        self,
        camera: CameraIntrinsics,
        mount_height: float,
        config: Optional[PipelineConfig] = None,
        buffer_capacity: int = DEFAULT_BUFFER_CAPACITY,
    ):
        """
        Initialize a SemanticMapper.

        Args:
            camera: Intrinsics of the camera the log was recorded with.
            mount_height: Camera height above the floor in meters.
            config: Pipeline configuration.
            buffer_capacity: Number of poses kept for capture-time lookups.
        """
        self.camera = camera
        self.mount_height = mount_height
        self.config = config or PipelineConfig()
        self.buffer_capacity = buffer_capacity
        self.buffer = PoseBuffer(buffer_capacity)
        self.state = TrackerState()
        self.dropped: Counter = Counter()
        self._poses: Dict[int, Tuple[float, Pose2D]] = {}

    @classmethod
    def from_header(cls, header: LogHeader, config: Optional[PipelineConfig] = None) -> "SemanticMapper":
        return cls(header.camera, header.mount_height, config)

    def observe(self, frame: FrameRecord) -> FrameObservations:
        """
        Fit every detection of a frame.

        Detections whose geometry cannot be fitted are dropped and counted
        in `dropped`. People are not fitted.

        Args:
            frame: The frame.

        Returns:
            The frame's observations.
        """
        self.buffer.append(frame.timestamp, frame.odom_pose)
        self._poses[frame.anchor_node] = (frame.timestamp, frame.odom_pose)
        while len(self._poses) > self.buffer_capacity:
            del self._poses[next(iter(self._poses))]

        fitting = self.config.fitting
        observations = []
        for index, sensed in enumerate(frame.detections):
            det = sensed.detection
            if det.class_label == ObjectClass.PERSON:
                continue
            robot = pose_at(self.buffer, det.timestamp) if self.config.compensate_latency else frame.odom_pose
            camera_pose = Pose3D.camera_from_robot(robot, self.mount_height)
            try:
                cloud = backproject_box(sensed.patch, self.camera, det.box, fitting.pixel_step)
                obs = extract_observation(
                    det,
                    transform_cloud(cloud, camera_pose),
                    robot,
                    fitting,
                    seed=seed_sequence(fitting.seed, "ransac", frame.anchor_node, index),
                )
            except (FittingError, ValueError) as err:
                self.dropped[type(err).__name__] += 1
                logger.debug("dropped %s detection at t=%.3f: %s", det.class_label, det.timestamp, err)
                continue
            observations.append(obs)
        return FrameObservations(frame.anchor_node, frame.timestamp, frame.odom_pose, tuple(observations))

    def _refresh_buffer(self, event: CorrectionEvent) -> None:
        for node, pose in event.corrections.items():
            if node in self._poses:
                self._poses[node] = (self._poses[node][0], pose)
        buffer = PoseBuffer(self.buffer_capacity)
        for t, pose in sorted(self._poses.values(), key=lambda s: s[0]):
            buffer.append(t, pose)
        self.buffer = buffer

    def extract(self, frames: Sequence[FrameRecord], events: Sequence[CorrectionEvent] = ()) -> List[TimelineItem]:
        """
        Extract observations from a log, interleaving correction events.

        An event is processed after the last frame not later than it.

        Args:
            frames: Frames with increasing timestamps.
            events: Correction events.

        Returns:
            The processing timeline.
        """
        pending = sorted(events, key=lambda e: e.timestamp)
        timeline: List[TimelineItem] = []

        def flush(until: float, inclusive: bool) -> None:
            while pending and (pending[0].timestamp < until or (inclusive and pending[0].timestamp == until)):
                event = pending.pop(0)
                self._refresh_buffer(event)
                timeline.append(event)

        for frame in frames:
            flush(frame.timestamp, inclusive=False)
            timeline.append(self.observe(frame))
            flush(frame.timestamp, inclusive=True)
        flush(float("inf"), inclusive=True)

        if self.dropped:
            logger.info("dropped detections: %s", dict(sorted(self.dropped.items())))
        return timeline

    def process_frame(self, frame: FrameRecord) -> TrackerState:
        """Fit and track one frame. The mapper's pose graph grows in place."""
        observations = self.observe(frame).observations
        self.state = step(self.state, observations, frame.odom_pose, frame.anchor_node, self.config.association, copy_graph=False)
        return self.state

    def apply_correction(self, event: CorrectionEvent) -> TrackerState:
        """Re-anchor tracked instances after a back-end correction."""
        self._refresh_buffer(event)
        self.state = reanchor(self.state, event.corrections, copy_graph=False)
        return self.state

    def replay(self, frames: Sequence[FrameRecord], events: Sequence[CorrectionEvent] = ()) -> TrackerState:
        """
        Replay a whole log.

        Args:
            frames: Frames with increasing timestamps.
            events: Correction events.

        Returns:
            The final tracker snapshot.
        """
        self.state = track_timeline(self.extract(frames, events), self.config.association)
        logger.info("replayed %d frames into %d instances", len(frames), len(self.state))
        return self.state
