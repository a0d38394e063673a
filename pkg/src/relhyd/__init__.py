"""Cartesian-grid special relativistic hydrodynamics.

Single-stage high-order flux-reconstruction solver with four equations of
state, admissibility-preserving subcell blending, and a self-contained
validation harness (reference solver, error norms, convergence studies,
benchmark problems).
"""

from .driver import RunConfig, RunResult, run
from .eos import (
    ConservedState,
    EosKind,
    EosModel,
    PrimitiveState,
    cons_to_prim,
    ideal,
    prim_to_cons,
)

__all__ = [
    "ConservedState", "EosKind", "EosModel", "PrimitiveState", "RunConfig",
    "RunResult", "cons_to_prim", "ideal", "prim_to_cons", "run",
]

__version__ = "0.1.0"
