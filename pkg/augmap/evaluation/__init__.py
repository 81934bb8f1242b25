"""
Evaluation Package

This package contains the scoring of augmented maps against ground truth and
the parameter sweeps built on it.
"""

from augmap.evaluation.metrics import ClassReport, EvalReport, Matching, evaluate, match_instances
from augmap.evaluation.sweep import SweepPoint, SweepResult, SweepSummary, sweep

__all__ = [
    "ClassReport",
    "EvalReport",
    "Matching",
    "evaluate",
    "match_instances",
    "SweepPoint",
    "SweepResult",
    "SweepSummary",
    "sweep",
]
