"""Space-time rotation of Floquet circuits and simulation of the rotated duals."""

from dualcirc.circuits import (
    CircuitSpec,
    Coupling,
    GateClass,
    Layer,
    LayerKind,
    SpecError,
    classify_gate,
    dual_coupling_x_from_zz,
    dual_coupling_zz_from_x,
    rotate_circuit_1d,
    rotate_circuit_2d,
)

__all__ = [
    "CircuitSpec",
    "Coupling",
    "GateClass",
    "Layer",
    "LayerKind",
    "SpecError",
    "classify_gate",
    "dual_coupling_x_from_zz",
    "dual_coupling_zz_from_x",
    "rotate_circuit_1d",
    "rotate_circuit_2d",
]

__version__ = "0.1.0"
