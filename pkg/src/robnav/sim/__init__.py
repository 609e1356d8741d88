"""Deterministic scenario synthesis: truth, sensor streams and fault injections."""

from robnav.sim.config import ConfigError, FaultInjection, Satellite, ScenarioConfig, Segment
from robnav.sim.sensors import Streams, export_csv, simulate
from robnav.sim.truth import Trajectory, Truth, generate_truth

__all__ = [
    "ConfigError",
    "FaultInjection",
    "Satellite",
    "ScenarioConfig",
    "Segment",
    "Streams",
    "Trajectory",
    "Truth",
    "export_csv",
    "generate_truth",
    "simulate",
]
