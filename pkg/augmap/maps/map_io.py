"""
Map IO

This module contains the persistence of everything around the occupancy
grid: ground truth annotations and their observed-mask, augmented maps of
tracked instances, and the frame logs and correction events produced by the
simulator.

Structured files are line-delimited JSON: a header record followed by one
record per item, each serialized with sorted keys so that equal content is
byte-identical.
"""
# flake8: noqa: E501

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from augmap.core.geometry import Pose2D
from augmap.core.tracker import TrackedInstance, TrackerState
from augmap.errors import (
    AnnotationParseError,
    CovarianceError,
    LogFormatError,
    MapFormatError,
)
from augmap.schemas.domain import STATIC_CLASSES, GroundTruthAnnotation, ObjectClass
from augmap.schemas.records import (
    CorrectionEvent,
    FrameRecord,
    InstanceRecord,
    LogHeader,
    MapHeader,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
M = TypeVar("M", bound=BaseModel)

_UPPER = np.triu_indices(3)


def _dump(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def _write_lines(path: PathLike, models: Iterable[BaseModel]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for model in models:
            fh.write(_dump(model))
            fh.write("\n")


def _read_lines(path: PathLike) -> List[Tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        return [(n, line) for n, line in enumerate(fh, start=1) if line.strip()]


def _parse(model: Type[M], line: str, where: str, error: Type[Exception]) -> M:
    try:
        return model.model_validate_json(line)
    except ValidationError as err:
        raise error(f"{where}: {err}") from err


# Annotations


def format_annotation(annotation: GroundTruthAnnotation) -> str:
    p = annotation.pose
    return f"{annotation.class_label.value} {p.x!r} {p.y!r} {p.theta!r}"


def save_annotations(annotations: Iterable[GroundTruthAnnotation], path: PathLike) -> None:
    Path(path).write_text("".join(format_annotation(a) + "\n" for a in annotations))


def load_annotations(path: PathLike) -> List[GroundTruthAnnotation]:
    """
    Read ground truth annotations, one `class x y theta` record per line.

    Blank lines and lines starting with '#' are skipped.

    Args:
        path: Annotation file.

    Returns:
        The annotations in file order.

    Raises:
        AnnotationParseError: On a malformed line, with its line number.
    """
    annotations = []
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if len(tokens) != 4:
            raise AnnotationParseError(f"expected 'class x y theta', got {line!r}", number)
        try:
            cls = ObjectClass(tokens[0])
        except ValueError as err:
            raise AnnotationParseError(f"unknown class {tokens[0]!r}", number) from err
        if cls not in STATIC_CLASSES:
            raise AnnotationParseError(f"class {cls.value!r} cannot be annotated", number)
        try:
            x, y, theta = (float(t) for t in tokens[1:])
            pose = Pose2D(x, y, theta)
        except ValueError as err:
            raise AnnotationParseError(f"bad pose in {line!r}: {err}", number) from err
        annotations.append(GroundTruthAnnotation(class_label=cls, pose=pose))
    return annotations


def save_mask(observed: Sequence[bool], path: PathLike) -> None:
    """Write an observed-mask, one 0/1 line per annotation."""
    Path(path).write_text("".join(("1" if o else "0") + "\n" for o in observed))


def load_mask(path: PathLike) -> List[bool]:
    """
    Read an observed-mask written by save_mask.

    Raises:
        AnnotationParseError: On a line other than 0 or 1.
    """
    mask = []
    for number, line in enumerate(Path(path).read_text().splitlines(), start=1):
        token = line.strip()
        if not token:
            continue
        if token not in ("0", "1"):
            raise AnnotationParseError(f"mask entries must be 0 or 1, got {token!r}", number)
        mask.append(token == "1")
    return mask


# Augmented maps


@dataclass(frozen=True)
class AugmentedMap:
    """
    A metric map augmented with tracked object instances.

    Attributes:
        instances: Instance snapshots ordered by id.
        grid: File name of the occupancy grid the instances refer to.
    """

    instances: Tuple[TrackedInstance, ...] = ()
    grid: Optional[str] = None

    def __post_init__(self) -> None:
        for inst in self.instances:
            s = inst.state
            if not all(math.isfinite(v) for v in (s.x, s.y, s.theta)):
                raise ValueError(f"instance {inst.id} has a non-finite pose")

    @classmethod
    def from_state(cls, state: TrackerState, grid: Optional[str] = None) -> "AugmentedMap":
        return cls(tuple(state.all_instances()), grid)

    def of_class(self, cls: ObjectClass) -> List[TrackedInstance]:
        return [i for i in self.instances if i.class_label == cls]


def instance_record(inst: TrackedInstance) -> InstanceRecord:
    cov = inst.covariance[_UPPER]
    return InstanceRecord(
        id=inst.id,
        class_label=inst.class_label,
        x=inst.state.x,
        y=inst.state.y,
        theta=inst.state.theta,
        cov=tuple(float(c) for c in cov),
        observation_count=inst.observation_count,
        last_seen=inst.last_seen,
        anchor_node=inst.anchor_node,
        offset=inst.offset_from_anchor,
    )


def instance_from_record(record: InstanceRecord) -> TrackedInstance:
    cov = np.zeros((3, 3))
    cov[_UPPER] = record.cov
    cov = cov + np.triu(cov, 1).T
    return TrackedInstance(
        id=record.id,
        class_label=record.class_label,
        state=Pose2D(record.x, record.y, record.theta),
        covariance=cov,
        observation_count=record.observation_count,
        last_seen=record.last_seen,
        anchor_node=record.anchor_node,
        offset_from_anchor=record.offset,
    )


def save_augmented(augmented: AugmentedMap, path: PathLike) -> None:
    """Write an augmented map: a header record, then one record per instance."""
    header = MapHeader(grid=augmented.grid, instance_count=len(augmented.instances))
    records = [instance_record(i) for i in sorted(augmented.instances, key=lambda i: i.id)]
    _write_lines(path, [header, *records])


def load_augmented(path: PathLike) -> AugmentedMap:
    """
    Read an augmented map written by save_augmented.

    Raises:
        MapFormatError: On a missing header, a record violating its schema,
            an instance count mismatch or duplicate ids.
    """
    lines = _read_lines(path)
    if not lines:
        raise MapFormatError(f"{path}: missing header record")
    header = _parse(MapHeader, lines[0][1], f"{path}:{lines[0][0]}", MapFormatError)

    instances = []
    for number, line in lines[1:]:
        record = _parse(InstanceRecord, line, f"{path}:{number}", MapFormatError)
        try:
            instances.append(instance_from_record(record))
        except (CovarianceError, ValueError) as err:
            raise MapFormatError(f"{path}:{number}: {err}") from err

    if len(instances) != header.instance_count:
        raise MapFormatError(
            f"{path}: header announces {header.instance_count} instances, found {len(instances)}"
        )
    if len({i.id for i in instances}) != len(instances):
        raise MapFormatError(f"{path}: duplicate instance ids")
    return AugmentedMap(tuple(instances), header.grid)


# Frame logs and correction events


def save_log(header: LogHeader, frames: Sequence[FrameRecord], path: PathLike) -> None:
    _write_lines(path, [header, *frames])


def load_log(path: PathLike) -> Tuple[LogHeader, List[FrameRecord]]:
    """
    Read a frame log: a header record followed by frame records.

    Raises:
        LogFormatError: On a schema violation or non-increasing timestamps.
    """
    lines = _read_lines(path)
    if not lines:
        raise LogFormatError(f"{path}: missing header record")
    header = _parse(LogHeader, lines[0][1], f"{path}:{lines[0][0]}", LogFormatError)
    frames = [_parse(FrameRecord, line, f"{path}:{n}", LogFormatError) for n, line in lines[1:]]
    for prev, frame in zip(frames, frames[1:]):
        if frame.timestamp <= prev.timestamp:
            raise LogFormatError(f"{path}: timestamps not increasing at t={frame.timestamp}")
    if len(frames) != header.frame_count:
        raise LogFormatError(
            f"{path}: header announces {header.frame_count} frames, found {len(frames)}"
        )
    return header, frames


def save_events(events: Sequence[CorrectionEvent], path: PathLike) -> None:
    _write_lines(path, events)


def load_events(path: PathLike) -> List[CorrectionEvent]:
    """
    Read correction events; a missing file means no events.

    Raises:
        LogFormatError: On a schema violation.
    """
    if not Path(path).exists():
        return []
    return [_parse(CorrectionEvent, line, f"{path}:{n}", LogFormatError) for n, line in _read_lines(path)]
