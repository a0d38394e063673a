"""First-order finite-volume reference solver.

Plain Rusanov finite volumes on a fine uniform 1-D mesh, used to produce
reference curves for the shock problems.  Deliberately independent of the
high-order machinery: cell means, two-point fluxes, forward Euler.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import eos as eos_mod
from . import rhd
from .eos import EosModel
from .problems import PROBLEMS, BcKind, ProblemSpec

REFERENCE_CFL = 0.9


@dataclass
class ReferenceSolution:
    x: np.ndarray
    rho: np.ndarray
    v1: np.ndarray
    p: np.ndarray

    def sample(self, x_query: np.ndarray):
        """Nearest-cell lookup of the piecewise-constant solution."""
        idx = np.clip(np.searchsorted(self.x, x_query), 1, len(self.x) - 1)
        idx = np.where(np.abs(x_query - self.x[idx - 1])
                       <= np.abs(self.x[idx] - x_query), idx - 1, idx)
        return self.rho[idx], self.v1[idx], self.p[idx]


def reference_solution(problem, eos: EosModel, fine_cells: int,
                       t_final: float = None) -> ReferenceSolution:
    """Run the first-order scheme on `fine_cells` uniform cells."""
    prob = PROBLEMS[problem] if isinstance(problem, str) else problem
    if prob.dim != 1:
        raise ValueError("reference solver is one-dimensional")
    (xlo, xhi), = prob.bounds
    t_final = prob.t_final if t_final is None else t_final
    dx = (xhi - xlo) / fine_cells
    x = xlo + dx * (np.arange(fine_cells) + 0.5)

    rho, vs, p = prob.init(x, eos, dict(prob.params))
    rho = np.asarray(rho, dtype=float)
    v1 = np.broadcast_to(np.asarray(vs[0], dtype=float), rho.shape).copy()
    p = np.broadcast_to(np.asarray(p, dtype=float), rho.shape).copy()
    dens, moms, energy = eos_mod.prim_to_cons_arrays(eos, rho, [v1], p)
    u = np.stack([dens, moms[0], energy])

    (bc_lo, bc_hi), = prob.bcs
    periodic = bc_lo.kind is BcKind.PERIODIC

    t = 0.0
    while t < t_final * (1.0 - 1e-12):
        rho, vxs, p = eos_mod.recover_primitives(
            eos, u[0], [u[1]], u[2], context="reference solver")
        v1 = vxs[0]
        lam = rhd.wave_speed_arrays(eos, rho, v1, p)
        dt = min(REFERENCE_CFL * dx / float(lam.max()), t_final - t)

        flux = np.stack(rhd.flux_arrays(u[0], [u[1]], u[2], rho, [v1], p, 0))
        if periodic:
            ul = np.concatenate([u[:, -1:], u], axis=1)
            ur = np.concatenate([u, u[:, :1]], axis=1)
            fl = np.concatenate([flux[:, -1:], flux], axis=1)
            fr = np.concatenate([flux, flux[:, :1]], axis=1)
            ll = np.concatenate([lam[-1:], lam])
            lr = np.concatenate([lam, lam[:1]])
        else:
            ul = np.concatenate([u[:, :1], u], axis=1)
            ur = np.concatenate([u, u[:, -1:]], axis=1)
            fl = np.concatenate([flux[:, :1], flux], axis=1)
            fr = np.concatenate([flux, flux[:, -1:]], axis=1)
            ll = np.concatenate([lam[:1], lam])
            lr = np.concatenate([lam, lam[-1:]])
        face = rhd.rusanov_flux_arrays(ul, fl, ll, ur, fr, lr)
        u = u - (dt / dx) * (face[:, 1:] - face[:, :-1])
        t += dt

    rho, vxs, p = eos_mod.recover_primitives(eos, u[0], [u[1]], u[2],
                                             context="reference output")
    return ReferenceSolution(x=x, rho=rho, v1=vxs[0], p=p)
