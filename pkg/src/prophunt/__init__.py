"""Automated syndrome-measurement circuit optimization for CSS codes.

The toolkit detects decoding ambiguity in circuit-level error models and
removes it through targeted CNOT reorderings and reschedulings, plus a
Monte Carlo evaluator and a zero-noise-extrapolation study harness.
"""

__version__ = "0.1.0"

from .codes import CssCode, compute_logicals, load_code, make_rotated_surface, save_code
from .scheduling import (
    LayeredCircuit,
    PropagationGraph,
    SmSchedule,
    coloration_schedule,
    extract_layers,
    load_schedule,
    nz_schedule,
    save_schedule,
    validate_schedule,
)
from .circuits import MemoryCircuit, memory_circuit
from .dem import (
    DetectorErrorModel,
    FaultMechanism,
    NoiseModel,
    build_dem,
    is_hook,
    propagate_fault,
)
from .ambiguity import Subgraph, is_ambiguous, sample_subgraph
from .minweight import (
    EffectiveDistance,
    MinWeightResult,
    WcnfModel,
    effective_distance,
    encode_wcnf,
    export_wcnf,
    min_weight_logical,
)
from .mutate import CandidateChange, apply_changes, enumerate_changes, prune_changes
from .optimizer import IterationReport, OptimizerConfig, optimize, trajectory_circuits
from .sim import LerEstimate, ShotBatch, decode_shot, logical_error_rate, sample_shots
from .zne import NoiseLadder, ZneResult, compare, extrapolate, ladder, simulate_expectation

__all__ = [
    "CssCode",
    "compute_logicals",
    "load_code",
    "make_rotated_surface",
    "save_code",
    "LayeredCircuit",
    "PropagationGraph",
    "SmSchedule",
    "coloration_schedule",
    "extract_layers",
    "load_schedule",
    "nz_schedule",
    "save_schedule",
    "validate_schedule",
    "MemoryCircuit",
    "memory_circuit",
    "DetectorErrorModel",
    "FaultMechanism",
    "NoiseModel",
    "build_dem",
    "is_hook",
    "propagate_fault",
    "Subgraph",
    "is_ambiguous",
    "sample_subgraph",
    "EffectiveDistance",
    "MinWeightResult",
    "WcnfModel",
    "effective_distance",
    "encode_wcnf",
    "export_wcnf",
    "min_weight_logical",
    "CandidateChange",
    "apply_changes",
    "enumerate_changes",
    "prune_changes",
    "IterationReport",
    "OptimizerConfig",
    "optimize",
    "trajectory_circuits",
    "LerEstimate",
    "ShotBatch",
    "decode_shot",
    "logical_error_rate",
    "sample_shots",
    "NoiseLadder",
    "ZneResult",
    "compare",
    "extrapolate",
    "ladder",
    "simulate_expectation",
]
