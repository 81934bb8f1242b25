"""
Tests for the SemanticMapper.

This module contains tests for replaying frame logs into tracker states,
including dropped detections, correction events and latency compensation.
"""
# flake8: noqa: E501
# mypy: ignore-errors

import numpy as np
import pytest

from augmap.core.geometry import BoundingBox, DepthPatch, Pose2D
from augmap.core.mapper import FrameObservations, SemanticMapper, track_timeline
from augmap.schemas.config import AssociationConfig, PipelineConfig
from augmap.schemas.domain import Detection, ObjectClass
from augmap.schemas.records import CorrectionEvent, FrameRecord, SensedDetection
from augmap.simulation.scenarios import corridor_scenario, loop_scenario, scenario_pipeline
from augmap.simulation.simulator import run_scenario


@pytest.fixture(scope="module")
def corridor_run():
    """Simulate the noiseless corridor once for every test of this module."""
    return run_scenario(corridor_scenario())


def mapper_for(result, config=None):
    return SemanticMapper.from_header(result.header, config)


def blank_frame(t, node, cls=ObjectClass.DOOR):
    det = Detection(class_label=cls, box=BoundingBox.from_corners(100, 100, 140, 180), confidence=0.9, timestamp=t)
    patch = DepthPatch(u0=100, v0=100, stride=2, depth=np.zeros((41, 21)))
    pose = Pose2D(t, 1.0, 0.0)
    return FrameRecord(
        timestamp=t,
        true_pose=pose,
        odom_pose=pose,
        detections=[SensedDetection(detection=det, patch=patch)],
        anchor_node=node,
    )


def test_replay_noiseless_corridor(corridor_run):
    """Test that the noiseless corridor maps every door and extinguisher once."""
    state = mapper_for(corridor_run, scenario_pipeline()).replay(corridor_run.log, corridor_run.events)
    assert len(state.of_class(ObjectClass.DOOR)) == 3
    assert len(state.of_class(ObjectClass.FIRE_EXTINGUISHER)) == 2
    assert [i.id for i in state.all_instances()] == list(range(5))


def test_replay_empty_log(corridor_run):
    """Test that an empty log replays into an empty state."""
    state = mapper_for(corridor_run).replay([], [])
    assert len(state) == 0


def test_unfittable_detections_are_counted(corridor_run):
    """Test that detections without valid depth are dropped and counted by error type."""
    mapper = mapper_for(corridor_run)
    observed = mapper.observe(blank_frame(0.0, 0))
    assert observed.observations == ()
    assert mapper.dropped["EmptyCloudError"] == 1


def test_people_are_not_fitted(corridor_run):
    """Test that person detections are skipped without counting a drop."""
    mapper = mapper_for(corridor_run)
    observed = mapper.observe(blank_frame(0.0, 0, cls=ObjectClass.PERSON))
    assert observed.observations == ()
    assert not mapper.dropped


def test_extract_then_track_equals_replay(corridor_run):
    """Test that one extraction tracked with a config equals a replay with that config."""
    cfg = AssociationConfig().with_delta(0.9)
    timeline = mapper_for(corridor_run).extract(corridor_run.log, corridor_run.events)
    assert all(isinstance(item, FrameObservations) for item in timeline)
    tracked = track_timeline(timeline, cfg)
    replayed = mapper_for(corridor_run, PipelineConfig(association=cfg)).replay(corridor_run.log)
    assert [(i.id, i.class_label) for i in tracked.all_instances()] == [(i.id, i.class_label) for i in replayed.all_instances()]
    for a, b in zip(tracked.all_instances(), replayed.all_instances()):
        assert a.state == b.state


def test_pose_history_is_bounded(corridor_run):
    """Test that the mapper keeps only as many past poses as its buffer holds and still applies corrections."""
    mapper = SemanticMapper(corridor_run.header.camera, corridor_run.header.mount_height, buffer_capacity=8)
    frames = corridor_run.log[:20]
    for frame in frames:
        mapper.process_frame(frame)
    assert len(mapper._poses) == 8
    assert len(mapper.buffer) == 8
    assert len(mapper.state.pose_graph) == 20

    last = frames[-1]
    mapper.apply_correction(CorrectionEvent(timestamp=last.timestamp, corrections={last.anchor_node: Pose2D(last.odom_pose.x, 2.0, 0.0)}))
    assert mapper.buffer.latest == (last.timestamp, Pose2D(last.odom_pose.x, 2.0, 0.0))
    assert len(mapper.buffer) == 8

def test_events_follow_their_frame():
    """Test that a correction event is placed after the last frame not later than it."""
    result = run_scenario(corridor_scenario(n_doors=1, n_extinguishers=0, length=8.0))
    frames = result.log
    event = CorrectionEvent(timestamp=frames[3].timestamp + 0.01, corrections={0: frames[0].true_pose})
    timeline = mapper_for(result).extract(frames, [event])
    assert timeline[4] is event
    assert len(timeline) == len(frames) + 1


def test_streaming_matches_replay():
    """Test that frame-by-frame processing with corrections equals a full replay."""
    result = run_scenario(loop_scenario(drift_rate=0.01))
    replayed = mapper_for(result).replay(result.log, result.events)

    mapper = mapper_for(result)
    events = list(result.events)
    for frame in result.log:
        mapper.process_frame(frame)
        while events and events[0].timestamp <= frame.timestamp:
            mapper.apply_correction(events.pop(0))

    streamed = mapper.state.all_instances()
    assert len(streamed) == len(replayed)
    for a, b in zip(streamed, replayed.all_instances()):
        assert a.state.distance_to(b.state) < 1e-9


def test_correction_moves_instances():
    """Test that the loop closure moves instances toward their true positions."""
    result = run_scenario(loop_scenario(drift_rate=0.01))
    with_events = mapper_for(result).replay(result.log, result.events)
    without = mapper_for(result).replay(result.log, [])
    moved = [a.state.distance_to(b.state) for a, b in zip(with_events.all_instances(), without.all_instances())]
    assert max(moved) > 0.1
