"""Conservation-law kernel: physical flux, wave speeds, Rusanov flux,
and the admissibility constraints shared by every scheme.

Array layout used throughout the solver: component axis first, so a state
field has shape (ncomp, ...) with components (D, m_1[, m_2], E).
"""

from __future__ import annotations

import enum
import math

import numpy as np

from . import eos as eos_mod
from .eos import ConservedState, EosModel, PrimitiveState


class Direction(enum.Enum):
    X = 0
    Y = 1


def n_components(dim: int) -> int:
    return dim + 2


def state_to_vector(u: ConservedState) -> np.ndarray:
    return np.concatenate(([u.dens], u.mom, [u.energy]))


def vector_to_state(vec: np.ndarray) -> ConservedState:
    vec = np.asarray(vec, dtype=float)
    return ConservedState(dens=float(vec[0]), mom=vec[1:-1], energy=float(vec[-1]))


def prim_to_vector(prim: PrimitiveState) -> np.ndarray:
    return np.concatenate(([prim.rho], prim.v, [prim.p]))


def admissibility(u) -> tuple:
    """Both constraint values (D, E - sqrt(D^2 + |m|^2)) of a state.

    Accepts a ConservedState or a component-first array; the state is
    admissible iff both values are positive.
    """
    if isinstance(u, ConservedState):
        return u.dens, u.energy_excess
    u = np.asarray(u, dtype=float)
    dens = u[0]
    energy = u[-1]
    mom_sq = np.sum(u[1:-1] ** 2, axis=0)
    return dens, energy - np.sqrt(dens ** 2 + mom_sq)


def is_admissible(u) -> bool:
    dens, excess = admissibility(u)
    return bool(np.all(dens > 0.0) and np.all(excess > 0.0))


def physical_flux(eos: EosModel, u: ConservedState, prim: PrimitiveState,
                  direction: Direction = Direction.X) -> np.ndarray:
    """Flux vector along one axis: (D v, m v + p e_axis, m_axis).

    The primitives must describe the same state as `u`; callers control the
    (expensive) recovery cadence.
    """
    axis = direction.value
    if axis >= len(prim.v):
        raise ValueError(f"direction {direction} invalid for {len(prim.v)}-D state")
    vax = float(prim.v[axis])
    flux = np.empty(2 + len(prim.v))
    flux[0] = u.dens * vax
    flux[1:-1] = u.mom * vax
    flux[1 + axis] += prim.p
    flux[-1] = u.mom[axis]
    return flux


def flux_arrays(dens, moms, energy, rho, vs, p, axis: int):
    """Array flux along `axis` from conserved components and primitives."""
    vax = vs[axis]
    out = [dens * vax]
    for a, m in enumerate(moms):
        out.append(m * vax + p if a == axis else m * vax)
    out.append(moms[axis])
    return out


def max_wave_speed(eos: EosModel, prim: PrimitiveState,
                   direction: Direction = Direction.X) -> float:
    """Spectral radius (|v_axis| + c_s) / (1 + c_s |v_axis|); always < 1."""
    cs = math.sqrt(float(eos_mod.sound_speed_sq(eos, prim.p, prim.rho)))
    vax = abs(float(prim.v[direction.value]))
    return (vax + cs) / (1.0 + cs * vax)


def wave_speed_arrays(eos: EosModel, rho, v_axis, p):
    cs = np.sqrt(eos_mod.sound_speed_sq(eos, p, rho))
    va = np.abs(v_axis)
    return (va + cs) / (1.0 + cs * va)


def rusanov_flux(eos: EosModel, u_left: ConservedState, u_right: ConservedState,
                 direction: Direction = Direction.X,
                 prim_left: PrimitiveState = None,
                 prim_right: PrimitiveState = None) -> np.ndarray:
    """Central flux plus spectral-radius jump dissipation.

    Consistent by construction: coincident arguments return the physical
    flux.  Primitives are recovered on demand if not supplied.
    """
    if prim_left is None:
        prim_left = eos_mod.cons_to_prim(eos, u_left).prim
    if prim_right is None:
        prim_right = eos_mod.cons_to_prim(eos, u_right).prim
    lam = max(max_wave_speed(eos, prim_left, direction),
              max_wave_speed(eos, prim_right, direction))
    fl = physical_flux(eos, u_left, prim_left, direction)
    fr = physical_flux(eos, u_right, prim_right, direction)
    jump = state_to_vector(u_right) - state_to_vector(u_left)
    return 0.5 * (fl + fr) - 0.5 * lam * jump


def rusanov_flux_arrays(ul, fl, laml, ur, fr, lamr):
    """Array Rusanov flux from precomputed one-sided fluxes and radii.

    `ul`, `ur`, `fl`, `fr` are component-first arrays; `laml`, `lamr` the
    one-sided spectral radii.
    """
    lam = np.maximum(laml, lamr)
    return 0.5 * (fl + fr) - 0.5 * lam * (ur - ul)
