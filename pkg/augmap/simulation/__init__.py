"""
Simulation Package

This package contains the scenario engine that stands in for the camera,
the detector and the SLAM back end, and the standard scenario factories.
"""

from augmap.simulation.scenarios import (
    SCENARIOS,
    clustered_doors_scenario,
    corridor_scenario,
    loop_scenario,
    building_scale_scenario,
    scenario_pipeline,
)
from augmap.simulation.simulator import (
    ScenarioSimulator,
    SimulationResult,
    generate_trajectory,
    run_scenario,
    visible,
)

__all__ = [
    "ScenarioSimulator",
    "SimulationResult",
    "generate_trajectory",
    "run_scenario",
    "visible",
    "SCENARIOS",
    "corridor_scenario",
    "clustered_doors_scenario",
    "loop_scenario",
    "building_scale_scenario",
    "scenario_pipeline",
]
