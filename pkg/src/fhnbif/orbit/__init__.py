"""Periodic orbits: detection, collocation, Floquet analysis and cycle events."""

from fhnbif.orbit.basin import Attractor, Inventory, ProbeConfig, basin_probe, classify_ic, random_ics
from fhnbif.orbit.bvp import BVPConfig, CycleBVP, cycle_from_hopf, cycle_from_samples, solve_cycle_bvp
from fhnbif.orbit.continuation import ContinuationConfig, CyclePoint, continue_cycles, push_period
from fhnbif.orbit.detect import (
    DetectConfig,
    NonPeriodic,
    OrbitSummary,
    Quiescent,
    Stability,
    classify_sync,
    detect_orbit,
    phase_shift,
)
from fhnbif.orbit.events import CycleEvent, CycleEventKind, detect_cycle_bifurcations
from fhnbif.orbit.floquet import floquet_multipliers, monodromy_matrix

__all__ = [
    "Attractor",
    "Inventory",
    "ProbeConfig",
    "basin_probe",
    "classify_ic",
    "random_ics",
    "BVPConfig",
    "CycleBVP",
    "cycle_from_hopf",
    "cycle_from_samples",
    "solve_cycle_bvp",
    "ContinuationConfig",
    "CyclePoint",
    "continue_cycles",
    "push_period",
    "DetectConfig",
    "NonPeriodic",
    "OrbitSummary",
    "Quiescent",
    "Stability",
    "classify_sync",
    "detect_orbit",
    "phase_shift",
    "CycleEvent",
    "CycleEventKind",
    "detect_cycle_bifurcations",
    "floquet_multipliers",
    "monodromy_matrix",
]
