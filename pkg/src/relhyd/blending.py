"""Shock capturing and admissibility enforcement.

Blends the single-stage high-order update with a first-order finite-volume
update on subcells, driven by a modal smoothness indicator; corrects the
inter-element fluxes so the low-order update stays admissible; scales nodal
values toward the element mean as a final guard; and owns the time-step
controller.  The `step_1d` / `step_2d` functions run one full time step in
the order: indicator, local single-stage phase, face fluxes (high, low,
blended, corrected), both updates, blend, final scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import lwfr, rhd
from .basis import BasisData
from .eos import AdmissibilityError
from .lwfr import RhdFluxModel, element_mean

# Largest stable time-step multipliers for the single-stage scheme,
# N = 1..4, from linear stability analysis of the flux-reconstruction
# update with time-averaged dissipation.
DEFAULT_CFL = {1: 0.259, 2: 0.170, 3: 0.103, 4: 0.069}

CORRECTION_MARGIN = 0.1  # keep this fraction of the provably safe update


@dataclass(frozen=True)
class IndicatorConfig:
    """Modal smoothness indicator constants (all overridable).

    The energy measure is the top-mode fraction of the modal content.  The
    optional secondary ratio (next-to-top mode against the lower modes) is
    scale-invariant and permanently flags smooth profiles whose element mean
    nearly vanishes (density troughs), so it is off by default.
    """

    amplitude: float = 0.5
    decay: float = 1.8
    sharpness: float = 9.21024
    clip: float = 1e-3
    alpha_max: float = 0.5
    use_secondary_ratio: bool = False

    def threshold(self, degree: int) -> float:
        return self.amplitude * 10.0 ** (-self.decay * (degree + 1.0) ** 0.25)


@dataclass(frozen=True)
class BlendConfig:
    indicator: IndicatorConfig = field(default_factory=IndicatorConfig)
    cfl_table: dict = field(default_factory=lambda: dict(DEFAULT_CFL))
    safety_factor: float = 0.95

    def with_alpha_max(self, alpha_max: float) -> "BlendConfig":
        return replace(self, indicator=replace(self.indicator, alpha_max=alpha_max))


@dataclass
class StepStats:
    """Per-step diagnostics used by the validation harness."""

    alpha_max: float = 0.0
    troubled_elements: int = 0
    scale_activations: int = 0
    flux_corrections: int = 0
    zhang_shu_activations: int = 0
    mean_equivalence_residual: float = 0.0

    def absorb(self, other: "StepStats"):
        self.alpha_max = max(self.alpha_max, other.alpha_max)
        self.troubled_elements += other.troubled_elements
        self.scale_activations += other.scale_activations
        self.flux_corrections += other.flux_corrections
        self.zhang_shu_activations += other.zhang_shu_activations
        self.mean_equivalence_residual = max(
            self.mean_equivalence_residual, other.mean_equivalence_residual)


# ---------------------------------------------------------------------------
# Smoothness indicator


def smoothness_alpha(prims, basis: BasisData, dim: int,
                     config: IndicatorConfig) -> np.ndarray:
    """Blending coefficient per element from the modal content of rho*p*Gamma.

    Vanishes on well-resolved polynomial data and saturates at `alpha_max`
    on an in-element step; raw sigmoid responses below `clip` are zeroed.
    Neighbor smoothing is a separate pass (`smooth_alpha`).
    """
    rho, vs, p = prims
    vsq = sum(v ** 2 for v in vs)
    kq = rho * p / np.sqrt(np.maximum(1.0 - vsq, np.finfo(float).tiny))
    proj = basis.modal_project
    tiny = np.finfo(float).tiny
    if dim == 1:
        sq = np.einsum("mn,en->em", proj, kq) ** 2
        total = sq.sum(axis=-1)
        energy = sq[..., -1] / np.maximum(total, tiny)
        if config.use_secondary_ratio and basis.degree >= 2:
            sub = sq[..., -2] / np.maximum(total - sq[..., -1], tiny)
            energy = np.maximum(energy, sub)
    else:
        sq = np.einsum("mi,nj,xyij->xymn", proj, proj, kq) ** 2
        n = basis.degree
        total = sq.sum(axis=(-2, -1))
        ring_top = (sq[..., n, :].sum(axis=-1) + sq[..., :, n].sum(axis=-1)
                    - sq[..., n, n])
        energy = ring_top / np.maximum(total, tiny)
        if config.use_secondary_ratio and n >= 2:
            ring_sub = (sq[..., n - 1, :n].sum(axis=-1)
                        + sq[..., :n, n - 1].sum(axis=-1) - sq[..., n - 1, n - 1])
            sub = ring_sub / np.maximum(total - ring_top, tiny)
            energy = np.maximum(energy, sub)
    thresh = config.threshold(basis.degree)
    alpha = 1.0 / (1.0 + np.exp(-config.sharpness / thresh * (energy - thresh)))
    alpha = np.where(alpha < config.clip, 0.0, alpha)
    return np.minimum(alpha, config.alpha_max)


def smooth_alpha(alpha: np.ndarray, dim: int) -> np.ndarray:
    """One max-with-half-neighbor pass; operates on the extended array."""
    out = alpha.copy()
    if dim == 1:
        out[1:] = np.maximum(out[1:], 0.5 * alpha[:-1])
        out[:-1] = np.maximum(out[:-1], 0.5 * alpha[1:])
        return out
    out[1:, :] = np.maximum(out[1:, :], 0.5 * alpha[:-1, :])
    out[:-1, :] = np.maximum(out[:-1, :], 0.5 * alpha[1:, :])
    out[:, 1:] = np.maximum(out[:, 1:], 0.5 * alpha[:, :-1])
    out[:, :-1] = np.maximum(out[:, :-1], 0.5 * alpha[:, 1:])
    return out


# ---------------------------------------------------------------------------
# Face-flux blending and correction


def blend_face_flux_initial(flux_high: np.ndarray, flux_low: np.ndarray,
                            alpha_face: np.ndarray) -> np.ndarray:
    """Convex combination of the high- and low-order inter-element fluxes."""
    a = np.asarray(alpha_face)
    a = a[(np.s_[None],) + (np.s_[:],) * a.ndim
          + (np.s_[None],) * (flux_high.ndim - 1 - a.ndim)]
    return (1.0 - a) * flux_high + a * flux_low


def admissibility_flux_correction(flux_cand: np.ndarray, flux_low: np.ndarray,
                                  u_left: np.ndarray, f_int_left: np.ndarray,
                                  rate_left, u_right: np.ndarray,
                                  f_int_right: np.ndarray, rate_right,
                                  stats: StepStats = None) -> np.ndarray:
    """Pull the face flux toward the provably admissible low-order flux.

    The low-order updates of the two solution points adjacent to each face
    are affine in the face flux.  For each constraint in turn, the corrected
    flux keeps the fraction theta of the candidate that leaves both updates
    above one tenth of their value under the pure low-order flux;
    theta = 1 (flux unchanged) wherever the candidate updates already clear
    that bound.  `rate_*` is dt / (beta * w * dx) of the adjacent subcell,
    beta being the directional time-step share (1 in one dimension).
    """
    hat_left = u_left - rate_left * (flux_low - f_int_left)
    hat_right = u_right - rate_right * (f_int_right - flux_low)
    old_left = u_left - rate_left * (flux_cand - f_int_left)
    old_right = u_right - rate_right * (f_int_right - flux_cand)

    flux = flux_cand
    for hat_l, hat_r, old_l, old_r in zip(
            rhd.admissibility(hat_left), rhd.admissibility(hat_right),
            rhd.admissibility(old_left), rhd.admissibility(old_right)):
        target_l = CORRECTION_MARGIN * hat_l
        target_r = CORRECTION_MARGIN * hat_r
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio_l = np.where(old_l >= target_l, 1.0,
                               np.abs((target_l - hat_l) / (old_l - hat_l)))
            ratio_r = np.where(old_r >= target_r, 1.0,
                               np.abs((target_r - hat_r) / (old_r - hat_r)))
        theta = np.minimum(np.minimum(ratio_l, ratio_r), 1.0)
        if stats is not None:
            stats.flux_corrections += int((theta < 1.0).sum())
        if np.all(theta == 1.0):
            continue
        t = theta[None]
        flux = t * flux + (1.0 - t) * flux_low
        old_left = t * old_left + (1.0 - t) * hat_left
        old_right = t * old_right + (1.0 - t) * hat_right
    return flux


def blend_solutions(high: np.ndarray, low: np.ndarray,
                    alpha: np.ndarray) -> np.ndarray:
    """Per-element convex combination of the two updates."""
    a = np.asarray(alpha)
    a = a[(np.s_[None],) + (np.s_[:],) * a.ndim
          + (np.s_[None],) * (high.ndim - 1 - a.ndim)]
    return (1.0 - a) * high + a * low


def zhang_shu_scale(u: np.ndarray, basis: BasisData, dim: int,
                    stats: StepStats = None) -> np.ndarray:
    """Scale nodal values toward the element mean onto the admissible set.

    Element means are unchanged; each constraint gets the floor
    min(mean/10, 1e-13).  An inadmissible element mean cannot be repaired
    here; it indicates an upstream bug and raises a fatal error.
    """
    mean = element_mean(u, basis, dim)
    d_mean, q_mean = rhd.admissibility(mean)
    if not (np.all(d_mean > 0.0) and np.all(q_mean > 0.0)):
        bad = tuple(np.argwhere(~((d_mean > 0.0) & (q_mean > 0.0)))[0])
        raise AdmissibilityError(
            f"element mean inadmissible at {bad}: D={d_mean[bad]}, q={q_mean[bad]}")

    node_axes = tuple(range(-dim, 0))
    mean_x = mean[(np.s_[:],) * mean.ndim + (np.s_[None],) * dim]

    eps_d = np.minimum(0.1 * d_mean, lwfr.EPS_CAP)
    d_min = u[0].min(axis=node_axes)
    theta = np.where(d_min < eps_d, (d_mean - eps_d) / (d_mean - d_min), 1.0)
    if np.any(theta < 1.0):
        t = theta[(np.s_[None],) + (np.s_[:],) * theta.ndim + (np.s_[None],) * dim]
        u = mean_x + t * (u - mean_x)
        if stats is not None:
            stats.zhang_shu_activations += int((theta < 1.0).sum())

    eps_q = np.minimum(0.1 * q_mean, lwfr.EPS_CAP)
    _, q_nodes = rhd.admissibility(u)
    q_min = q_nodes.min(axis=node_axes)
    theta = np.where(q_min < eps_q, (q_mean - eps_q) / (q_mean - q_min), 1.0)
    if np.any(theta < 1.0):
        t = theta[(np.s_[None],) + (np.s_[:],) * theta.ndim + (np.s_[None],) * dim]
        u = mean_x + t * (u - mean_x)
        if stats is not None:
            stats.zhang_shu_activations += int((theta < 1.0).sum())
    return u


def compute_dt(mean_lambdas: list, spacings: tuple, degree: int,
               config: BlendConfig) -> float:
    """Stable time step from element-mean spectral radii.

    dt = safety * CFL(N) / max_e sum_axes(lambda_axis / dx_axis); the caller
    clips the result to land exactly on the final time.
    """
    cfl = config.cfl_table[degree]
    rate = sum(lam / dx for lam, dx in zip(mean_lambdas, spacings))
    return config.safety_factor * cfl / float(np.max(rate))


# ---------------------------------------------------------------------------
# Full steps


def _subcell_interior_fluxes(u, prims, model, axis: int):
    """Rusanov fluxes on the interior subfaces along one axis."""
    rho, vs, p = prims
    flux = np.stack(rhd.flux_arrays(u[0], list(u[1:-1]), u[-1], rho, vs, p, axis))
    lam = rhd.wave_speed_arrays(model.eos, rho, vs[axis], p)
    ax = u.ndim - (model.dim - axis)  # node axis for this direction
    sll = [np.s_[:]] * u.ndim
    slr = [np.s_[:]] * u.ndim
    sll[ax] = np.s_[:-1]
    slr[ax] = np.s_[1:]
    sll, slr = tuple(sll), tuple(slr)
    return rhd.rusanov_flux_arrays(u[sll], flux[sll], lam[sll[1:]],
                                   u[slr], flux[slr], lam[slr[1:]])


def _assert_admissible(u: np.ndarray):
    dens, excess = rhd.admissibility(u)
    if not (np.all(dens > 0.0) and np.all(excess > 0.0)):
        bad = tuple(np.argwhere(~((dens > 0.0) & (excess > 0.0)))[0])
        raise AdmissibilityError(f"nodal state inadmissible after full step at {bad}")


def step_1d(u: np.ndarray, extend, model: RhdFluxModel, basis: BasisData,
            dx: float, dt: float, config: BlendConfig) -> tuple:
    """Advance a 1-D field by one blended time step.

    `extend` maps the interior field to the ghost-extended field (boundary
    conditions).  Returns (new field, StepStats).
    """
    stats = StepStats()
    w = basis.weights
    ue = extend(u)
    ws = lwfr.build_workspace(ue, model, basis, dt / dx)

    alpha = smooth_alpha(smoothness_alpha(ws.prims, basis, 1, config.indicator), 1)
    stats.alpha_max = float(alpha[1:-1].max(initial=0.0))
    stats.troubled_elements = int((alpha[1:-1] > 0.0).sum())

    mean = element_mean(ue, basis, 1)
    mean_prims = model.recover(mean, context="element means")
    lam_mean = model.wave_speeds(mean_prims)[0]
    flux_high = lwfr.ea_face_fluxes(ws, lam_mean, axis=0)

    rho, vs, p = ws.prims
    nodal_flux = np.stack(rhd.flux_arrays(ue[0], [ue[1]], ue[2], rho, vs, p, 0))
    lam_nodes = rhd.wave_speed_arrays(model.eos, rho, vs[0], p)
    flux_low = rhd.rusanov_flux_arrays(
        ue[:, :-1, -1], nodal_flux[:, :-1, -1], lam_nodes[:-1, -1],
        ue[:, 1:, 0], nodal_flux[:, 1:, 0], lam_nodes[1:, 0])

    alpha_face = 0.5 * (alpha[:-1] + alpha[1:])
    face = blend_face_flux_initial(flux_high, flux_low, alpha_face)

    sub_flux = _subcell_interior_fluxes(ue, ws.prims, model, axis=0)
    face = admissibility_flux_correction(
        face, flux_low,
        ue[:, :-1, -1], sub_flux[:, :-1, -1], dt / (dx * w[-1]),
        ue[:, 1:, 0], sub_flux[:, 1:, 0], dt / (dx * w[0]),
        stats)

    high = lwfr.high_order_update(ue, ws, [face], basis, dt / dx, dim=1)

    inner = np.s_[:, 1:-1]
    sub_all = np.concatenate(
        [face[:, :-1, None], sub_flux[inner], face[:, 1:, None]], axis=2)
    low = ue[inner] - (dt / dx) * (sub_all[:, :, 1:] - sub_all[:, :, :-1]) / w

    stats.scale_activations = sum(ws.counters.values())
    mh = element_mean(high, basis, 1)
    ml = element_mean(low, basis, 1)
    fv = element_mean(u, basis, 1) - (dt / dx) * (face[:, 1:] - face[:, :-1])
    scale = np.abs(fv).max() + 1e-300
    stats.mean_equivalence_residual = float(
        max(np.abs(mh - fv).max(), np.abs(ml - fv).max()) / scale)

    final = zhang_shu_scale(blend_solutions(high, low, alpha[1:-1]), basis, 1, stats)
    _assert_admissible(final)
    return final, stats


def step_2d(u: np.ndarray, extend, model: RhdFluxModel, basis: BasisData,
            spacings: tuple, dt: float, config: BlendConfig) -> tuple:
    """Advance a 2-D field by one blended time step (tensor-product form)."""
    stats = StepStats()
    w = basis.weights
    dx, dy = spacings
    ratios = (dt / dx, dt / dy)
    ue = extend(u)
    ws = lwfr.build_workspace(ue, model, basis, ratios)

    alpha = smooth_alpha(smoothness_alpha(ws.prims, basis, 2, config.indicator), 2)
    stats.alpha_max = float(alpha[1:-1, 1:-1].max(initial=0.0))
    stats.troubled_elements = int((alpha[1:-1, 1:-1] > 0.0).sum())

    mean = element_mean(ue, basis, 2)
    mean_prims = model.recover(mean, context="element means")
    lam_means = model.wave_speeds(mean_prims)
    flux_high_x = lwfr.ea_face_fluxes(ws, lam_means[0], axis=0)
    flux_high_y = lwfr.ea_face_fluxes(ws, lam_means[1], axis=1)

    # directional time-step shares used by the flux-correction rates
    rx = lam_means[0] / dx
    ry = lam_means[1] / dy
    beta_x = rx / (rx + ry)
    beta_y = 1.0 - beta_x

    rho, vs, p = ws.prims
    fx = np.stack(rhd.flux_arrays(ue[0], [ue[1], ue[2]], ue[3], rho, vs, p, 0))
    fy = np.stack(rhd.flux_arrays(ue[0], [ue[1], ue[2]], ue[3], rho, vs, p, 1))
    lam_x = rhd.wave_speed_arrays(model.eos, rho, vs[0], p)
    lam_y = rhd.wave_speed_arrays(model.eos, rho, vs[1], p)

    flux_low_x = rhd.rusanov_flux_arrays(
        ue[:, :-1, :, -1, :], fx[:, :-1, :, -1, :], lam_x[:-1, :, -1, :],
        ue[:, 1:, :, 0, :], fx[:, 1:, :, 0, :], lam_x[1:, :, 0, :])
    flux_low_y = rhd.rusanov_flux_arrays(
        ue[:, :, :-1, :, -1], fy[:, :, :-1, :, -1], lam_y[:, :-1, :, -1],
        ue[:, :, 1:, :, 0], fy[:, :, 1:, :, 0], lam_y[:, 1:, :, 0])

    face_x = blend_face_flux_initial(
        flux_high_x, flux_low_x, 0.5 * (alpha[:-1, :] + alpha[1:, :]))
    face_y = blend_face_flux_initial(
        flux_high_y, flux_low_y, 0.5 * (alpha[:, :-1] + alpha[:, 1:]))

    sub_x = _subcell_interior_fluxes(ue, ws.prims, model, axis=0)
    sub_y = _subcell_interior_fluxes(ue, ws.prims, model, axis=1)

    face_x = admissibility_flux_correction(
        face_x, flux_low_x,
        ue[:, :-1, :, -1, :], sub_x[:, :-1, :, -1, :],
        (dt / (dx * w[-1]) / beta_x[:-1, :])[:, :, None],
        ue[:, 1:, :, 0, :], sub_x[:, 1:, :, 0, :],
        (dt / (dx * w[0]) / beta_x[1:, :])[:, :, None],
        stats)
    face_y = admissibility_flux_correction(
        face_y, flux_low_y,
        ue[:, :, :-1, :, -1], sub_y[:, :, :-1, :, -1],
        (dt / (dy * w[-1]) / beta_y[:, :-1])[:, :, None],
        ue[:, :, 1:, :, 0], sub_y[:, :, 1:, :, 0],
        (dt / (dy * w[0]) / beta_y[:, 1:])[:, :, None],
        stats)

    high = lwfr.high_order_update(ue, ws, [face_x, face_y], basis, ratios, dim=2)

    inner = np.s_[:, 1:-1, 1:-1]
    fxa = np.concatenate([face_x[:, :-1, 1:-1][:, :, :, None, :],
                          sub_x[inner],
                          face_x[:, 1:, 1:-1][:, :, :, None, :]], axis=3)
    fya = np.concatenate([face_y[:, 1:-1, :-1][:, :, :, :, None],
                          sub_y[inner],
                          face_y[:, 1:-1, 1:][:, :, :, :, None]], axis=4)
    low = ue[inner] \
        - ratios[0] * (fxa[:, :, :, 1:, :] - fxa[:, :, :, :-1, :]) / w[None, None, None, :, None] \
        - ratios[1] * (fya[:, :, :, :, 1:] - fya[:, :, :, :, :-1]) / w[None, None, None, None, :]

    stats.scale_activations = sum(ws.counters.values())
    mh = element_mean(high, basis, 2)
    ml = element_mean(low, basis, 2)
    net_x = np.einsum("c...j,j->c...", face_x[:, 1:, 1:-1] - face_x[:, :-1, 1:-1], w)
    net_y = np.einsum("c...j,j->c...", face_y[:, 1:-1, 1:] - face_y[:, 1:-1, :-1], w)
    fv = element_mean(u, basis, 2) - ratios[0] * net_x - ratios[1] * net_y
    scale = np.abs(fv).max() + 1e-300
    stats.mean_equivalence_residual = float(
        max(np.abs(mh - fv).max(), np.abs(ml - fv).max()) / scale)

    final = zhang_shu_scale(
        blend_solutions(high, low, alpha[1:-1, 1:-1]), basis, 2, stats)
    _assert_admissible(final)
    return final, stats
