"""Single-stage high-order kernel.

Builds the time-averaged flux at the solution points by replacing temporal
flux derivatives with finite-difference combinations of flux evaluations at
perturbed states, scales those perturbed states into the admissible region,
assembles inter-element flux traces by extrapolate-and-average, and applies
the corrected-flux element update.

Everything operates on whole fields at once: 1-D arrays are
(ncomp, nelem, nnode), 2-D arrays (ncomp, nex, ney, nnode, nnode), with
ghost elements included along the element axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import eos as eos_mod
from . import rhd
from .basis import BasisData

# Finite-difference combinations for the r-th scaled temporal flux
# derivative, per polynomial degree: (offsets, weights, center weight).
# The argument at offset a is sum_{k<=r} a^k/k! u^(k); the center (a = 0)
# argument is the unperturbed solution.
_W4 = [-1.0 / 12.0, 8.0 / 12.0, -8.0 / 12.0, 1.0 / 12.0]
ALW_STAGES = {
    1: [(np.array([1, -1]), np.array([0.5, -0.5]), 0.0)],
    2: [
        (np.array([1, -1]), np.array([0.5, -0.5]), 0.0),
        (np.array([1, -1]), np.array([1.0, 1.0]), -2.0),
    ],
    3: [
        (np.array([2, 1, -1, -2]), np.array(_W4), 0.0),
        (np.array([1, -1]), np.array([1.0, 1.0]), -2.0),
        (np.array([2, 1, -1, -2]), np.array([0.5, -1.0, 1.0, -0.5]), 0.0),
    ],
    4: [
        (np.array([2, 1, -1, -2]), np.array(_W4), 0.0),
        (np.array([2, 1, -1, -2]),
         np.array([-1.0 / 12.0, 16.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0]), -30.0 / 12.0),
        (np.array([2, 1, -1, -2]), np.array([0.5, -1.0, 1.0, -0.5]), 0.0),
        (np.array([2, 1, -1, -2]), np.array([1.0, -4.0, -4.0, 1.0]), 6.0),
    ],
}

EPS_CAP = 1e-13  # absolute cap of the admissibility floors


@dataclass
class RhdFluxModel:
    """RHD physics bundle used by the kernels: recovery plus fluxes."""

    eos: eos_mod.EosModel
    dim: int = 1
    tol: float = eos_mod.DEFAULT_TOL
    max_iter: int = eos_mod.DEFAULT_MAX_ITER

    @property
    def ncomp(self) -> int:
        return self.dim + 2

    def recover(self, u, context: str = ""):
        return eos_mod.recover_primitives(
            self.eos, u[0], list(u[1:-1]), u[-1],
            tol=self.tol, max_iter=self.max_iter, context=context)

    def fluxes(self, u, prims):
        """All directional fluxes from one recovery; list of (ncomp, ...) arrays."""
        rho, vs, p = prims
        out = []
        for axis in range(self.dim):
            out.append(np.stack(
                rhd.flux_arrays(u[0], list(u[1:-1]), u[-1], rho, vs, p, axis)))
        return out

    def flux_of(self, u, context: str = ""):
        return self.fluxes(u, self.recover(u, context))

    def wave_speeds(self, prims):
        rho, vs, p = prims
        return [rhd.wave_speed_arrays(self.eos, rho, vs[a], p) for a in range(self.dim)]


@dataclass
class LinearModel:
    """Constant-velocity advection stand-in used by kernel tests."""

    speeds: tuple
    dim: int = 1

    def __post_init__(self):
        self.dim = len(self.speeds)

    @property
    def ncomp(self) -> int:
        return 1

    def recover(self, u, context: str = ""):
        return None

    def fluxes(self, u, prims=None):
        return [c * u for c in self.speeds]

    def flux_of(self, u, context: str = ""):
        return self.fluxes(u)

    def wave_speeds(self, prims=None, shape=None):
        return [abs(c) for c in self.speeds]


def _elem_reduce_min(values: np.ndarray, node_ndim: int) -> np.ndarray:
    """Minimum over the family axis (0) and the trailing node axes."""
    axes = (0,) + tuple(range(values.ndim - node_ndim, values.ndim))
    return values.min(axis=axes)


def scale_flux_arguments(family: np.ndarray, ref_mean: np.ndarray,
                         node_ndim: int, counters: dict = None) -> np.ndarray:
    """Pull perturbed states into the admissible region.

    `family` has shape (A, ncomp, *elem, *nodes); `ref_mean` (ncomp, *elem)
    must be admissible.  Within each element, if any family member violates
    a constraint, the whole family is contracted toward the reference mean
    just enough to lift the worst member to the constraint floor
    min(ref/10, 1e-13).  Runs the density constraint first, then the energy
    excess on the updated family.  Untouched elements come back bitwise
    identical.
    """
    expand = (np.s_[None],) + (np.s_[:],) * ref_mean.ndim + (np.s_[None],) * node_ndim
    ref = ref_mean[expand]

    dens = family[:, 0]
    d_min = _elem_reduce_min(dens, node_ndim)
    if np.any(d_min <= 0.0):
        d_ref = ref_mean[0]
        eps_d = np.minimum(0.1 * d_ref, EPS_CAP)
        theta = np.where(
            d_min <= 0.0,
            np.minimum(1.0, np.abs(eps_d - d_ref) / np.abs(d_min - d_ref)),
            1.0,
        )
        t = theta[(np.s_[None], np.s_[None]) + (np.s_[...],) + (np.s_[None],) * node_ndim]
        family = t * family + (1.0 - t) * ref
        if counters is not None:
            counters["scale_dens"] = counters.get("scale_dens", 0) + int((theta < 1.0).sum())

    _, q_fam = rhd.admissibility(np.moveaxis(family, 1, 0))
    q_min = _elem_reduce_min(q_fam, node_ndim)
    if np.any(q_min <= 0.0):
        _, q_ref = rhd.admissibility(ref_mean)
        eps_q = np.minimum(0.1 * q_ref, EPS_CAP)
        theta = np.where(
            q_min <= 0.0,
            np.minimum(1.0, np.abs(eps_q - q_ref) / np.abs(q_min - q_ref)),
            1.0,
        )
        t = theta[(np.s_[None], np.s_[None]) + (np.s_[...],) + (np.s_[None],) * node_ndim]
        family = t * family + (1.0 - t) * ref
        if counters is not None:
            counters["scale_excess"] = counters.get("scale_excess", 0) + int((theta < 1.0).sum())

    return family


def element_mean(u: np.ndarray, basis: BasisData, dim: int) -> np.ndarray:
    """Quadrature-weighted element average; drops the node axes."""
    w = basis.weights
    if dim == 1:
        return np.einsum("c...n,n->c...", u, w)
    return np.einsum("c...ij,i,j->c...", u, w, w)


def _stage_coefficients(offsets: np.ndarray, r: int) -> np.ndarray:
    k = np.arange(r + 1)
    return offsets[:, None].astype(float) ** k[None, :] / np.array(
        [math.factorial(int(kk)) for kk in k])


@dataclass
class Workspace:
    """Per-field single-stage intermediates shared by face and volume work.

    `u_time_derivs[r]` holds the scaled r-th temporal derivative of the
    solution; `flux_avg[a]` the nodal time-averaged flux along axis a;
    `face_flux`/`face_sol` the extrapolate-and-average traces, indexed
    [axis][side] with side 0 = low face, 1 = high face of each element.
    """

    u_time_derivs: np.ndarray
    flux_avg: list
    face_flux: list
    face_sol: list
    stage_refs: list
    prims: tuple
    counters: dict = field(default_factory=dict)


def _face_extrapolate(values: np.ndarray, basis: BasisData, axis_from_end: int):
    """Contract one node axis with the face extrapolation vectors.

    The contracted axis disappears; remaining axes keep their order, so for
    2-D fields the trace along x keeps the y-node axis last and vice versa.
    Evaluated relative to the first node value so that constant data comes
    back bitwise unchanged (the extrapolation weights only sum to 1 up to
    round-off); uniform states must be exact fixed points of the scheme.
    """
    axis = values.ndim - axis_from_end
    base = np.take(values, [0], axis=axis)
    rel = values - base
    base = np.squeeze(base, axis=axis)
    lo = base + np.tensordot(rel, basis.extrap_left, axes=([axis], [0]))
    hi = base + np.tensordot(rel, basis.extrap_right, axes=([axis], [0]))
    return lo, hi


def _deriv_along(values: np.ndarray, basis: BasisData, axis_from_end: int):
    # Differentiate relative to the first node value: exact zeros for
    # constant data regardless of BLAS summation order.
    moved = np.moveaxis(values, -axis_from_end, -1)
    out = (moved - moved[..., :1]) @ basis.diff_matrix.T
    return np.moveaxis(out, -1, -axis_from_end)


def build_workspace(u: np.ndarray, model, basis: BasisData, dt_over_dx,
                    scaling: bool = True) -> Workspace:
    """Run the local single-stage phase on every element of a field.

    `dt_over_dx` is a scalar (1-D) or a pair (dt/dx, dt/dy).  The returned
    workspace contains everything the face-flux assembly and the element
    update need; no inter-element coupling happens here.
    """
    dim = model.dim
    n = basis.degree
    ratios = np.atleast_1d(np.asarray(dt_over_dx, dtype=float))
    node_ndim = dim

    counters: dict = {}
    uk = np.empty((n + 1,) + u.shape)
    uk[0] = u
    prims = model.recover(u, context="nodal solution") if model.ncomp > 1 else None
    flux0 = model.fluxes(u, prims)
    flux_avg = [f.copy() for f in flux0]
    flux_r = flux0

    refs = [element_mean(u, basis, dim)]
    stages = ALW_STAGES[n]

    for r in range(1, n + 1):
        deriv = -ratios[0] * _deriv_along(flux_r[0], basis, node_ndim)
        if dim == 2:
            deriv -= ratios[1] * _deriv_along(flux_r[1], basis, 1)
        uk[r] = deriv

        offsets, weights, w_center = stages[r - 1]
        coefs = _stage_coefficients(offsets, r)
        args = np.einsum("ak,k...->a...", coefs, uk[: r + 1])
        if scaling and model.ncomp > 1:
            args = scale_flux_arguments(args, refs[r - 1], node_ndim, counters)
            fam_mean = element_mean(args.mean(axis=0), basis, dim)
            refs.append(fam_mean)
        else:
            refs.append(refs[0])

        arg_fluxes = model.flux_of(np.moveaxis(args, 1, 0),
                                   context=f"stage {r} flux argument")
        flux_r = []
        for a in range(dim):
            fr = np.einsum("a,ca...->c...", weights, arg_fluxes[a])
            if w_center:
                fr += w_center * flux0[a]
            flux_r.append(fr)
            flux_avg[a] += flux_r[a] / math.factorial(r + 1)

    face_flux, face_sol = _face_traces(uk, model, basis, refs, scaling, counters)

    return Workspace(u_time_derivs=uk, flux_avg=flux_avg, face_flux=face_flux,
                     face_sol=face_sol, stage_refs=refs, prims=prims,
                     counters=counters)


def _face_traces(uk, model, basis, refs, scaling, counters):
    """Extrapolate-and-average traces of the time-averaged flux and solution.

    The temporal-derivative approximations are extrapolated to each face and
    the same finite-difference flux combinations are evaluated there, so the
    trace converges at the order of the volume flux.  Face arguments are
    scaled against the parent element's stage references.
    """
    dim = model.dim
    n = basis.degree
    stages = ALW_STAGES[n]
    inv_fact = np.array([1.0 / math.factorial(r + 1) for r in range(n + 1)])

    face_flux = []
    face_sol = []
    for axis in range(dim):
        axis_from_end = dim - axis  # x-nodes are the first node axis
        uk_lo, uk_hi = _face_extrapolate(uk, basis, axis_from_end)
        # time-averaged solution traces (linear in the derivatives)
        sol_lo = np.einsum("k,k...->...", inv_fact, uk_lo)
        sol_hi = np.einsum("k,k...->...", inv_fact, uk_hi)

        u_faces = np.stack([uk_lo[0], uk_hi[0]])
        if scaling and model.ncomp > 1:
            u_faces = scale_flux_arguments(u_faces, refs[0], dim - 1, counters)
        f0 = model.flux_of(np.moveaxis(u_faces, 1, 0),
                           context=f"axis {axis} face solution")[axis]
        favg_lo = f0[:, 0].copy()
        favg_hi = f0[:, 1].copy()

        for r in range(1, n + 1):
            offsets, weights, w_center = stages[r - 1]
            coefs = _stage_coefficients(offsets, r)
            args_lo = np.einsum("ak,k...->a...", coefs, uk_lo[: r + 1])
            args_hi = np.einsum("ak,k...->a...", coefs, uk_hi[: r + 1])
            args = np.concatenate([args_lo, args_hi])
            if scaling and model.ncomp > 1:
                args = scale_flux_arguments(args, refs[r - 1], dim - 1, counters)
            arg_flux = model.flux_of(np.moveaxis(args, 1, 0),
                                     context=f"axis {axis} face stage {r}")[axis]
            na = len(offsets)
            fr_lo = np.einsum("a,ca...->c...", weights, arg_flux[:, :na])
            fr_hi = np.einsum("a,ca...->c...", weights, arg_flux[:, na:])
            if w_center:
                fr_lo += w_center * f0[:, 0]
                fr_hi += w_center * f0[:, 1]
            favg_lo += fr_lo * inv_fact[r]
            favg_hi += fr_hi * inv_fact[r]

        face_flux.append((favg_lo, favg_hi))
        face_sol.append((sol_lo, sol_hi))
    return face_flux, face_sol


def ea_face_fluxes(ws: Workspace, lam_elem: np.ndarray, axis: int = 0):
    """Central-plus-dissipation combination of the one-sided face traces.

    Faces along `axis` sit between element e and e+1 of the extended field;
    face index f couples elements (f, f+1).  `lam_elem` holds per-element
    spectral radii along the axis (from element-mean states); the face
    coefficient takes the larger neighbor value.  Returns the high-order
    face flux array with the face index in the element slot.
    """
    flux_lo, flux_hi = ws.face_flux[axis]
    sol_lo, sol_hi = ws.face_sol[axis]
    if axis == 0:
        left = np.s_[:, :-1]
        right = np.s_[:, 1:]
        lam = np.maximum(lam_elem[:-1], lam_elem[1:])
    else:
        left = np.s_[:, :, :-1]
        right = np.s_[:, :, 1:]
        lam = np.maximum(lam_elem[:, :-1], lam_elem[:, 1:])
    trailing = flux_lo.ndim - 1 - lam.ndim
    lam = lam[(np.s_[None],) + (np.s_[:],) * lam.ndim + (np.s_[None],) * trailing]
    return 0.5 * (flux_hi[left] + flux_lo[right]) - 0.5 * lam * (sol_lo[right] - sol_hi[left])


def lifted_flux_derivative(flux_nodal: np.ndarray, face_lo: np.ndarray,
                           face_hi: np.ndarray, basis: BasisData,
                           axis_from_end: int) -> np.ndarray:
    """Derivative of the face-corrected continuous flux at the nodes.

    The discontinuous nodal flux polynomial is lifted so its face values
    match the numerical fluxes; the lifting uses the correction-function
    derivatives.  Quadrature of the result telescopes to the face-flux
    difference, which is what makes the element mean evolve conservatively.
    """
    own_lo, own_hi = _face_extrapolate(flux_nodal, basis, axis_from_end)
    out = _deriv_along(flux_nodal, basis, axis_from_end)
    shape_l = [np.s_[None]] * out.ndim
    shape_l[out.ndim - axis_from_end] = np.s_[:]
    sl = tuple(shape_l)
    jump_shape = list(np.s_[:] for _ in range(own_lo.ndim)) + [np.s_[None]]
    if axis_from_end == 2:
        jump_shape = jump_shape[:-1]
        jump_shape.insert(own_lo.ndim - 1, np.s_[None])
    js = tuple(jump_shape)
    out += (face_lo - own_lo)[js] * basis.corr_deriv_left[sl]
    out += (face_hi - own_hi)[js] * basis.corr_deriv_right[sl]
    return out


def high_order_update(u: np.ndarray, ws: Workspace, face_flux_by_axis: list,
                      basis: BasisData, dt_over_dx, dim: int) -> np.ndarray:
    """One single-stage update of the interior elements.

    `face_flux_by_axis[a]` holds the final (blended, corrected) numerical
    fluxes on the faces along axis a of the *extended* field; interior
    element e sees faces e and e+1.
    """
    ratios = np.atleast_1d(np.asarray(dt_over_dx, dtype=float))
    if dim == 1:
        interior = np.s_[:, 1:-1]
        flux = ws.flux_avg[0][interior]
        faces = face_flux_by_axis[0]
        dflux = lifted_flux_derivative(flux, faces[:, :-1], faces[:, 1:], basis, 1)
        return u[interior] - ratios[0] * dflux

    interior = np.s_[:, 1:-1, 1:-1]
    fx = ws.flux_avg[0][interior]
    fy = ws.flux_avg[1][interior]
    faces_x = face_flux_by_axis[0][:, :, 1:-1]
    faces_y = face_flux_by_axis[1][:, 1:-1, :]
    dfx = lifted_flux_derivative(fx, faces_x[:, :-1], faces_x[:, 1:], basis, 2)
    dfy = lifted_flux_derivative(fy, faces_y[:, :, :-1], faces_y[:, :, 1:], basis, 1)
    return u[interior] - ratios[0] * dfx - ratios[1] * dfy
