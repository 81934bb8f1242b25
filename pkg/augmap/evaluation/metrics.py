"""
Evaluation Metrics

This module scores an augmented map against ground truth annotations. Per
class, tracked instances are matched one-to-one to the ground truth objects
the robot actually sensed, minimizing the total position distance; matches
farther apart than a radius are discarded. Unmatched instances are false
positives and unmatched sensed objects are false negatives.
"""
# flake8: noqa: E501

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from augmap.core.tracker import TrackedInstance, hungarian
from augmap.maps.map_io import AugmentedMap
from augmap.schemas.domain import STATIC_CLASSES, GroundTruthAnnotation, ObjectClass

DEFAULT_RADIUS = 2.0


@dataclass
class Matching:
    """
    Result of matching instances to ground truth.

    Attributes:
        matches: (instance index, truth index, distance) triples.
        false_positives: Indices of unmatched instances.
        false_negatives: Indices of unmatched observed truths.
    """

    matches: List[Tuple[int, int, float]] = field(default_factory=list)
    false_positives: List[int] = field(default_factory=list)
    false_negatives: List[int] = field(default_factory=list)

    @property
    def errors(self) -> List[float]:
        return [d for _, _, d in self.matches]


def match_instances(
    instances: Sequence[TrackedInstance],
    truth: Sequence[GroundTruthAnnotation],
    radius: float = DEFAULT_RADIUS,
    observed: Optional[Sequence[bool]] = None,
) -> Matching:
    """
    Match instances to ground truth objects class by class.

    Args:
        instances: Tracked instances.
        truth: Ground truth annotations.
        radius: Largest distance in meters at which a pair counts as a match.
        observed: Per annotation, whether it entered sensing range. All
            annotations count when omitted; unobserved ones are ignored.

    Returns:
        The matching, with indices into `instances` and `truth`.
    """
    if radius <= 0:
        raise ValueError(f"matching radius must be positive, got {radius}")
    if observed is not None and len(observed) != len(truth):
        raise ValueError(f"mask has {len(observed)} entries for {len(truth)} annotations")

    result = Matching()
    for cls in STATIC_CLASSES:
        inst_idx = [i for i, inst in enumerate(instances) if inst.class_label == cls]
        truth_idx = [
            j for j, ann in enumerate(truth) if ann.class_label == cls and (observed is None or observed[j])
        ]
        if not inst_idx or not truth_idx:
            result.false_positives.extend(inst_idx)
            result.false_negatives.extend(truth_idx)
            continue

        a = np.array([[instances[i].state.x, instances[i].state.y] for i in inst_idx])
        b = np.array([[truth[j].pose.x, truth[j].pose.y] for j in truth_idx])
        distances = cdist(a, b)

        matched_inst, matched_truth = set(), set()
        for r, c in hungarian(distances):
            if distances[r, c] <= radius:
                result.matches.append((inst_idx[r], truth_idx[c], float(distances[r, c])))
                matched_inst.add(r)
                matched_truth.add(c)
        result.false_positives.extend(i for k, i in enumerate(inst_idx) if k not in matched_inst)
        result.false_negatives.extend(j for k, j in enumerate(truth_idx) if k not in matched_truth)
    return result


class ClassReport(BaseModel):
    """
    Scores of one class, or of all classes pooled when `class_label` is None.

    Rates are relative to the number of observed ground truth objects.
    """

    model_config = ConfigDict(frozen=True)

    class_label: Optional[ObjectClass] = None
    detections: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)
    avg_error: float = Field(ge=0)
    std_error: float = Field(ge=0)
    instance_count: int = Field(ge=0)
    truth_count: int = Field(ge=0)
    fp_rate: float = Field(ge=0)
    fn_rate: float = Field(ge=0)

    @classmethod
    def build(cls, class_label: Optional[ObjectClass], errors: Sequence[float], fp: int, fn: int) -> "ClassReport":
        detections = len(errors)
        truth_count = detections + fn
        denominator = max(truth_count, 1)
        return cls(
            class_label=class_label,
            detections=detections,
            fp=fp,
            fn=fn,
            avg_error=float(np.mean(errors)) if errors else 0.0,
            std_error=float(np.std(errors)) if errors else 0.0,
            instance_count=detections + fp,
            truth_count=truth_count,
            fp_rate=fp / denominator,
            fn_rate=fn / denominator,
        )


class EvalReport(BaseModel):
    """
    Scores of an augmented map.

    Attributes:
        radius: Matching radius in meters.
        classes: One report per static class.
        overall: All classes pooled.
    """

    model_config = ConfigDict(frozen=True)

    radius: float
    classes: List[ClassReport]
    overall: ClassReport

    def for_class(self, cls: ObjectClass) -> ClassReport:
        for report in self.classes:
            if report.class_label == cls:
                return report
        raise KeyError(cls)

    def to_jsonl(self) -> str:
        """One JSON record per class followed by the pooled record."""
        lines = []
        for report in [*self.classes, self.overall]:
            record = {"radius": self.radius, **report.model_dump(mode="json")}
            lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
        return "".join(line + "\n" for line in lines)

    def table(self) -> str:
        """
        Aligned plain-text table with one row per class present in the map
        or the ground truth, plus a total row.
        """
        header = f"{'class':<18} {'detection':>9} {'FP':>4} {'FN':>4} {'avg. error [m]':>15}"
        rows = [header, "-" * len(header)]
        shown = [r for r in self.classes if r.instance_count or r.truth_count]
        for report in [*shown, self.overall]:
            name = report.class_label.value if report.class_label else "total"
            error = f"{report.avg_error:.2f}" if report.detections else "-"
            rows.append(f"{name:<18} {report.detections:>9d} {report.fp:>4d} {report.fn:>4d} {error:>15}")
        return "\n".join(rows) + "\n"


def evaluate(
    augmented: AugmentedMap,
    truth: Sequence[GroundTruthAnnotation],
    observed: Optional[Sequence[bool]] = None,
    radius: float = DEFAULT_RADIUS,
) -> EvalReport:
    """
    Score an augmented map.

    Args:
        augmented: The augmented map.
        truth: Ground truth annotations.
        observed: Per annotation, whether the robot sensed it; false
            negatives are counted among sensed objects only.
        radius: Matching radius in meters.

    Returns:
        Per-class and pooled scores.
    """
    instances = augmented.instances
    matching = match_instances(instances, truth, radius, observed)

    reports = []
    for cls in STATIC_CLASSES:
        errors = [d for i, _, d in matching.matches if instances[i].class_label == cls]
        fp = sum(1 for i in matching.false_positives if instances[i].class_label == cls)
        fn = sum(1 for j in matching.false_negatives if truth[j].class_label == cls)
        reports.append(ClassReport.build(cls, errors, fp, fn))

    overall = ClassReport.build(None, matching.errors, len(matching.false_positives), len(matching.false_negatives))
    return EvalReport(radius=radius, classes=reports, overall=overall)
