"""Anyon models, anyonic density matrices and measurement-only topological quantum computation."""

from .anyon_model import AnyonModel, ProbeSpec, build_model, validate
from .compiler import MeasurementSchedule, compile_word, direct_circuit, encode_qubits, execute, readout
from .fusion_space import CCW, CW, AnyonicDensityMatrix, apply_braid, tensor, trace_distance
from .measurement import MeasurementTarget, decohere, interferometry, project
from .protocols import (
    ForcedMeasurementRecord,
    direct_braid,
    forced_teleport_interferometric,
    forced_teleport_projective,
    measurement_braid,
)

__version__ = "0.1.0"

__all__ = [
    "CCW",
    "CW",
    "AnyonModel",
    "AnyonicDensityMatrix",
    "ForcedMeasurementRecord",
    "MeasurementSchedule",
    "MeasurementTarget",
    "ProbeSpec",
    "apply_braid",
    "build_model",
    "compile_word",
    "decohere",
    "direct_braid",
    "direct_circuit",
    "encode_qubits",
    "execute",
    "forced_teleport_interferometric",
    "forced_teleport_projective",
    "interferometry",
    "measurement_braid",
    "project",
    "readout",
    "tensor",
    "trace_distance",
    "validate",
]
