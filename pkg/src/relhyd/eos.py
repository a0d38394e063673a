"""Equations of state and conservative <-> primitive conversions.

Four closures for the specific enthalpy h(p, rho) are supported: the
constant-heat-ratio ideal gas (ID), the Mathews approximation (TM), the
Sokolov interpolation (IP), and the Ryu-Chattopadhyay kinetic-theory fit
(RC).  Each comes with its sound speed and a pressure-recovery routine that
inverts (D, m, E) -> (rho, v, p):

* ID uses a Newton solve on the lab-frame pressure residual,
* TM and IP use a bracket-guarded Newton on the energy residual,
* RC uses a Newton solve on a quadratic residual in E + p whose iterates
  start at E and increase monotonically toward the unique admissible root.

Scalar entry points below are the readable reference implementations; the
solver hot path uses the compiled batch routines (`recover_primitives`),
which are tested against the scalar path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import FLAG_INADMISSIBLE, FLAG_NO_CONVERGENCE, FLAG_OK

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100


class EosDomainError(ValueError):
    """Inputs outside the physical domain of a thermodynamic function."""


class AdmissibilityError(ValueError):
    """A conserved state violates D > 0 or E - sqrt(D^2 + |m|^2) > 0."""


class ConvergenceError(RuntimeError):
    """A primitive-recovery iteration exhausted its budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EosKind(enum.Enum):
    ID = "id"
    TM = "tm"
    IP = "ip"
    RC = "rc"


_KERNEL_KIND = {
    EosKind.ID: _kernels.EOS_ID,
    EosKind.TM: _kernels.EOS_TM,
    EosKind.IP: _kernels.EOS_IP,
    EosKind.RC: _kernels.EOS_RC,
}


@dataclass(frozen=True)
class EosModel:
    """Tagged equation-of-state choice; `gamma` is meaningful only for ID."""

    kind: EosKind
    gamma: float = 5.0 / 3.0

    def __post_init__(self):
        if self.kind is EosKind.ID and not 1.0 < self.gamma <= 2.0:
            raise ValueError(
                f"heat ratio must lie in (1, 2], got {self.gamma}; larger "
                "values give a superluminal sound speed"
            )

    @classmethod
    def parse(cls, name: str, gamma: float = 5.0 / 3.0) -> "EosModel":
        return cls(kind=EosKind(name.lower()), gamma=gamma)


def ideal(gamma: float = 5.0 / 3.0) -> EosModel:
    return EosModel(EosKind.ID, gamma)


@dataclass(frozen=True)
class PrimitiveState:
    """Rest-frame variables (rho, v, p) with c = 1."""

    rho: float
    v: np.ndarray
    p: float

    def __post_init__(self):
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        if not (self.rho > 0.0 and self.p > 0.0 and self.speed < 1.0):
            raise ValueError(
                f"primitive state must have rho > 0, p > 0, |v| < 1; got "
                f"rho={self.rho}, p={self.p}, |v|={self.speed}"
            )

    @property
    def speed(self) -> float:
        return float(np.sqrt(np.sum(self.v ** 2)))

    @property
    def lorentz(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.speed ** 2)


@dataclass(frozen=True)
class ConservedState:
    """Laboratory-frame variables (D, m, E)."""

    dens: float
    mom: np.ndarray
    energy: float

    def __post_init__(self):
        object.__setattr__(self, "mom", np.atleast_1d(np.asarray(self.mom, dtype=float)))

    @property
    def mom_sq(self) -> float:
        return float(np.sum(self.mom ** 2))

    @property
    def energy_excess(self) -> float:
        """E - sqrt(D^2 + |m|^2); positive iff the state is admissible."""
        return self.energy - math.sqrt(self.dens ** 2 + self.mom_sq)

    @property
    def admissible(self) -> bool:
        return self.dens > 0.0 and self.energy_excess > 0.0


class RecoveryMethod(enum.Enum):
    PRESSURE_NEWTON = "pressure_newton"      # lab-frame pressure residual (ID)
    ENERGY_NEWTON = "energy_newton"          # energy residual (TM, IP)
    EPP_NEWTON = "epp_newton"                # residual in E + p (RC)
    VELOCITY_QUARTIC = "velocity_quartic"    # test-only oracle for ID


@dataclass(frozen=True)
class RecoveryReport:
    """Result of one conservative-to-primitive conversion.

    `residual` is the final relative Newton increment; on success it is at
    most the configured tolerance.  `iterates` traces the Newton unknown
    (pressure, or E + p for the RC route) when tracing was requested.
    """

    prim: PrimitiveState
    iterations: int
    residual: float
    method: RecoveryMethod
    damped_steps: int = 0
    iterates: tuple = field(default=())


# ---------------------------------------------------------------------------
# Thermodynamics


def _check_thermo_domain(p, rho, allow_zero_p):
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(rho))):
        raise EosDomainError("non-finite pressure or density")
    if np.any(rho <= 0.0):
        raise EosDomainError("density must be positive")
    if np.any(p < 0.0) or (not allow_zero_p and np.any(p == 0.0)):
        raise EosDomainError("pressure out of domain")
    return p, rho


def enthalpy(eos: EosModel, p, rho):
    """Specific enthalpy h(p, rho); vectorizes over array inputs."""
    p, rho = _check_thermo_domain(p, rho, allow_zero_p=True)
    x = p / rho
    if eos.kind is EosKind.ID:
        return 1.0 + eos.gamma / (eos.gamma - 1.0) * x
    if eos.kind is EosKind.TM:
        return 2.5 * x + np.sqrt(2.25 * x ** 2 + 1.0)
    if eos.kind is EosKind.IP:
        return 2.0 * x + np.sqrt(4.0 * x ** 2 + 1.0)
    return 2.0 * (6.0 * x ** 2 + 4.0 * x + 1.0) / (3.0 * x + 2.0)


def enthalpy_partials(eos: EosModel, p, rho):
    """(h, dh/dp, dh/drho); the slopes follow from h = h(p/rho)."""
    p, rho = _check_thermo_domain(p, rho, allow_zero_p=True)
    x = p / rho
    if eos.kind is EosKind.ID:
        dh_dx = np.broadcast_to(eos.gamma / (eos.gamma - 1.0), x.shape).astype(float)
        h = 1.0 + dh_dx * x
    elif eos.kind is EosKind.TM:
        s = np.sqrt(2.25 * x ** 2 + 1.0)
        h = 2.5 * x + s
        dh_dx = 2.5 + 2.25 * x / s
    elif eos.kind is EosKind.IP:
        s = np.sqrt(4.0 * x ** 2 + 1.0)
        h = 2.0 * x + s
        dh_dx = 2.0 + 4.0 * x / s
    else:
        den = 3.0 * x + 2.0
        h = 2.0 * (6.0 * x ** 2 + 4.0 * x + 1.0) / den
        dh_dx = (2.0 * (12.0 * x + 4.0) - 3.0 * h) / den
    return h, dh_dx / rho, -dh_dx * x / rho


def specific_internal_energy(eos: EosModel, p, rho):
    """eps = h - 1 - p/rho, computed on demand from the enthalpy."""
    return enthalpy(eos, p, rho) - 1.0 - np.asarray(p, dtype=float) / np.asarray(rho, dtype=float)


def sound_speed_sq(eos: EosModel, p, rho):
    """Squared sound speed; strictly inside (0, 1) for valid inputs."""
    p, rho = _check_thermo_domain(p, rho, allow_zero_p=False)
    if eos.kind is EosKind.ID:
        h = enthalpy(eos, p, rho)
        return eos.gamma * p / (h * rho)
    if eos.kind is EosKind.TM:
        s = np.sqrt(9.0 * p ** 2 + 4.0 * rho ** 2)
        return (5.0 * p * s + 9.0 * p ** 2) / (12.0 * p * s + 36.0 * p ** 2 + 6.0 * rho ** 2)
    if eos.kind is EosKind.IP:
        s = np.sqrt(4.0 * p ** 2 + rho ** 2)
        return 2.0 * p * s / (4.0 * p * s + 4.0 * p ** 2 + rho ** 2)
    num = p * (3.0 * p + 2.0 * rho) * (18.0 * p ** 2 + 24.0 * p * rho + 5.0 * rho ** 2)
    den = 3.0 * (6.0 * p ** 2 + 4.0 * p * rho + rho ** 2) * (9.0 * p ** 2 + 12.0 * p * rho + 2.0 * rho ** 2)
    return num / den


def check_taub(eos: EosModel, p, rho):
    """Kinetic-theory lower bound h >= sqrt(1 + (p/rho)^2) + p/rho."""
    p, rho = _check_thermo_domain(p, rho, allow_zero_p=True)
    h = enthalpy(eos, p, rho)
    x = p / rho
    bound = np.sqrt(1.0 + x ** 2) + x
    return np.all(h >= bound - 1e-14 * h)


# ---------------------------------------------------------------------------
# Primitive -> conserved


def prim_to_cons(eos: EosModel, prim: PrimitiveState) -> ConservedState:
    """Map (rho, v, p) to (D, m, E)."""
    h = float(enthalpy(eos, prim.p, prim.rho))
    gam = prim.lorentz
    whg = prim.rho * h * gam * gam
    return ConservedState(
        dens=prim.rho * gam,
        mom=whg * prim.v,
        energy=whg - prim.p,
    )


def prim_to_cons_arrays(eos: EosModel, rho, vs, p):
    """Array variant: `vs` is a sequence of velocity-component arrays."""
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    vsq = sum(np.asarray(v, dtype=float) ** 2 for v in vs)
    gam_sq = 1.0 / (1.0 - vsq)
    h = enthalpy(eos, p, rho)
    whg = rho * h * gam_sq
    dens = rho * np.sqrt(gam_sq)
    moms = [whg * np.asarray(v, dtype=float) for v in vs]
    return dens, moms, whg - p


# ---------------------------------------------------------------------------
# Conserved -> primitive: scalar reference implementations


def pressure_residual_id(p: float, u: ConservedState, gamma: float) -> float:
    """Pressure residual of the constant-heat-ratio recovery.

    Monotone increasing in p on the admissible branch; its unique positive
    root is the physical pressure.
    """
    ep = u.energy + p
    arg = 1.0 - u.mom_sq / ep ** 2
    if arg < 0.0:
        raise EosDomainError("E + p must exceed |m| on the admissible branch")
    return (p / (gamma - 1.0) - u.energy + u.mom_sq / ep
            + u.dens * math.sqrt(arg))


def velocity_quartic_id(v: float, u: ConservedState, gamma: float) -> float:
    """Quartic whose root in (0, 1) is the speed; test-only cross-check.

    Both the velocity and the momentum enter as magnitudes; the coefficients
    are odd in the momentum, so the signed form would reflect the root.
    """
    m1 = abs(float(u.mom[0]))
    e = u.energy
    g1 = gamma - 1.0
    den = g1 ** 2 * (m1 ** 2 + u.dens ** 2)
    a3 = -2.0 * gamma * g1 * m1 * e / den
    a2 = (gamma ** 2 * e ** 2 + 2.0 * g1 * m1 ** 2 - g1 ** 2 * u.dens ** 2) / den
    a1 = -2.0 * gamma * m1 * e / den
    a0 = m1 ** 2 / den
    av = abs(v)
    return av ** 4 + a3 * av ** 3 + a2 * av ** 2 + a1 * av + a0


def rc_pressure_ratio(h):
    """p/rho of the kinetic-theory fit as a function of the enthalpy.

    This is the positive-pressure branch of the inverted enthalpy relation;
    the other branch gives negative pressure for h > 1.
    """
    h = np.asarray(h, dtype=float)
    t = 3.0 * h + 8.0
    return ((3.0 * h - 8.0) + np.sqrt(t ** 2 - 96.0)) / 24.0


def rc_pressure_ratio_deriv(h):
    h = np.asarray(h, dtype=float)
    t = 3.0 * h + 8.0
    return 0.125 * (1.0 + t / np.sqrt(t ** 2 - 96.0))


def rc_newton_slope(h):
    """Coefficient R(h) in the residual derivative R(h)*(E+p) - E.

    Decreases from 8/5 at h = 1 toward 3/2, hence stays above 1: the
    residual is increasing wherever the iteration lives.
    """
    h = np.asarray(h, dtype=float)
    return 2.0 - rc_pressure_ratio(h) / h - rc_pressure_ratio_deriv(h)


def rc_residual(epp: float, u: ConservedState) -> float:
    """The root function of the RC recovery, in the variable E + p."""
    h = math.sqrt(epp ** 2 - u.mom_sq) / u.dens
    return epp ** 2 - epp * u.energy - u.dens ** 2 * h * float(rc_pressure_ratio(h))


def _require_admissible(u: ConservedState):
    if not u.admissible:
        raise AdmissibilityError(
            f"state (D={u.dens}, |m|={math.sqrt(u.mom_sq)}, E={u.energy}) has "
            f"D or E - sqrt(D^2 + |m|^2) non-positive"
        )


def _prim_from_pressure(u: ConservedState, p: float) -> PrimitiveState:
    v = u.mom / (u.energy + p)
    vsq = float(np.sum(v ** 2))
    rho = u.dens * math.sqrt(max(1.0 - vsq, 0.0))
    return PrimitiveState(rho=rho, v=v, p=p)


def cons_to_prim_rc(u: ConservedState, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> RecoveryReport:
    """Recovery for the kinetic-theory fit via Newton on E + p.

    The iteration starts at E, where the residual is negative, and increases
    strictly while the iterate stays below the unique root above E.  Where
    the residual is locally convex the first full step can overshoot the
    root once, after which Newton descends to it monotonically from above.
    A damped step (repeated halving) is a safety net used only if a full
    step leaves the h > 1 branch or produces non-finite values.
    """
    _require_admissible(u)
    epp = u.energy
    iterates = [epp]
    damped = 0
    residual = math.inf
    for it in range(1, max_iter + 1):
        h = math.sqrt(epp ** 2 - u.mom_sq) / u.dens
        th = float(rc_pressure_ratio(h))
        s_val = epp ** 2 - epp * u.energy - u.dens ** 2 * h * th
        s_deriv = float(rc_newton_slope(h)) * epp - u.energy
        step = -s_val / s_deriv
        epp_new = epp + step
        k = 1.0
        while k > 1e-8:
            arg = epp_new ** 2 - u.mom_sq
            if math.isfinite(epp_new) and arg > 0.0 and math.sqrt(arg) / u.dens > 1.0 + 1e-14:
                break
            k *= 0.5
            damped += 1
            epp_new = epp + k * step
        residual = abs(epp_new - epp) / epp_new
        epp = epp_new
        iterates.append(epp)
        if residual <= tol:
            prim = _prim_from_pressure(u, epp - u.energy)
            return RecoveryReport(prim=prim, iterations=it, residual=residual,
                                  method=RecoveryMethod.EPP_NEWTON,
                                  damped_steps=damped, iterates=tuple(iterates))
    raise ConvergenceError(
        f"recovery did not converge in {max_iter} iterations", residual=residual)


def _cons_to_prim_id(u: ConservedState, gamma: float, tol: float,
                     max_iter: int) -> RecoveryReport:
    p = max((gamma - 1.0) * u.energy_excess, 1e-12)
    lo, hi = 0.0, math.inf
    iterates = [p]
    residual = math.inf
    for it in range(1, max_iter + 1):
        res = pressure_residual_id(p, u, gamma)
        if res > 0.0:
            hi = p
        else:
            lo = p
        ep = u.energy + p
        arg = max(1.0 - u.mom_sq / ep ** 2, 1e-300)
        deriv = (1.0 / (gamma - 1.0) - u.mom_sq / ep ** 2
                 + u.dens * u.mom_sq / (ep ** 3 * math.sqrt(arg)))
        p_new = p - res / deriv
        if not (lo < p_new < hi) or not math.isfinite(p_new):
            p_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * max(p, 1e-300)
        residual = abs(p_new - p) / p_new
        p = p_new
        iterates.append(p)
        if residual <= tol:
            return RecoveryReport(prim=_prim_from_pressure(u, p), iterations=it,
                                  residual=residual,
                                  method=RecoveryMethod.PRESSURE_NEWTON,
                                  iterates=tuple(iterates))
    raise ConvergenceError(
        f"recovery did not converge in {max_iter} iterations", residual=residual)


def _cons_to_prim_energy(u: ConservedState, eos: EosModel, tol: float,
                         max_iter: int) -> RecoveryReport:
    # Generic route: for trial p set |v| = |m|/(E+p) and match the energy
    # definition D*Gamma*h - p = E.  Newton with a bisection bracket that
    # contains the root (the root lies below E for these closures).
    p = max(0.5 * u.energy_excess, 1e-12 * u.energy)
    lo, hi = 1e-16 * u.energy, 2.0 * u.energy
    iterates = [p]
    residual = math.inf
    for it in range(1, max_iter + 1):
        ep = u.energy + p
        vsq = min(u.mom_sq / ep ** 2, 1.0 - 1e-16)
        gam = 1.0 / math.sqrt(1.0 - vsq)
        rho = u.dens / gam
        h, dh_dp, dh_drho = (float(a) for a in enthalpy_partials(eos, p, rho))
        res = u.dens * gam * h - p - u.energy
        if res > 0.0:
            hi = p
        else:
            lo = p
        dgam = -gam ** 3 * vsq / ep
        drho = u.dens * gam * vsq / ep
        deriv = u.dens * (dgam * h + gam * (dh_dp + dh_drho * drho)) - 1.0
        p_new = p - res / deriv
        if not (lo < p_new < hi) or not math.isfinite(p_new):
            p_new = 0.5 * (lo + hi)
        residual = abs(p_new - p) / p_new
        p = p_new
        iterates.append(p)
        if residual <= tol:
            return RecoveryReport(prim=_prim_from_pressure(u, p), iterations=it,
                                  residual=residual,
                                  method=RecoveryMethod.ENERGY_NEWTON,
                                  iterates=tuple(iterates))
    raise ConvergenceError(
        f"recovery did not converge in {max_iter} iterations", residual=residual)


def cons_to_prim(eos: EosModel, u: ConservedState, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> RecoveryReport:
    """Recover (rho, v, p) from an admissible conserved state."""
    _require_admissible(u)
    if eos.kind is EosKind.ID:
        return _cons_to_prim_id(u, eos.gamma, tol, max_iter)
    if eos.kind is EosKind.RC:
        return cons_to_prim_rc(u, tol, max_iter)
    return _cons_to_prim_energy(u, eos, tol, max_iter)


# ---------------------------------------------------------------------------
# Batch recovery (solver hot path)


def recover_pressure(eos: EosModel, dens, mom_sq, energy,
                     tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                     context: str = ""):
    """Vectorized pressure recovery; raises on any per-entry failure."""
    dens = np.ascontiguousarray(dens, dtype=float)
    mom_sq = np.ascontiguousarray(mom_sq, dtype=float)
    energy = np.ascontiguousarray(energy, dtype=float)
    shape = dens.shape
    p = np.empty(shape)
    iters = np.empty(shape, dtype=np.int64)
    flags = np.empty(shape, dtype=np.uint8)
    bad = _kernels.recover_pressure_kernel(
        _KERNEL_KIND[eos.kind], eos.gamma,
        dens.ravel(), mom_sq.ravel(), energy.ravel(),
        tol, max_iter, p.reshape(-1), iters.reshape(-1), flags.reshape(-1))
    if bad:
        _raise_batch_failure(flags, dens, mom_sq, energy, context)
    return p


def _raise_batch_failure(flags, dens, mom_sq, energy, context):
    where = context or "recovery"
    idx = int(np.flatnonzero(flags.reshape(-1) != FLAG_OK)[0])
    d = dens.reshape(-1)[idx]
    m2 = mom_sq.reshape(-1)[idx]
    e = energy.reshape(-1)[idx]
    detail = (f"{where}: entry {idx} with D={d!r}, |m|^2={m2!r}, E={e!r}, "
              f"q={e - math.sqrt(d * d + m2)!r}")
    if flags.reshape(-1)[idx] == FLAG_INADMISSIBLE:
        raise AdmissibilityError(detail)
    raise ConvergenceError(detail)


def recover_primitives(eos: EosModel, dens, moms, energy,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       context: str = ""):
    """Vectorized full recovery: returns (rho, [v...], p) arrays.

    All four closures share the reconstruction v = m / (E + p) and
    rho = D / Gamma once the pressure is known.
    """
    mom_sq = sum(np.asarray(m, dtype=float) ** 2 for m in moms)
    p = recover_pressure(eos, dens, mom_sq, energy, tol, max_iter, context)
    ep = np.asarray(energy, dtype=float) + p
    vs = [np.asarray(m, dtype=float) / ep for m in moms]
    vsq = mom_sq / ep ** 2
    rho = np.asarray(dens, dtype=float) * np.sqrt(np.maximum(1.0 - vsq, 0.0))
    return rho, vs, p


def rc_newton_batch(dens, mom_sq, energy, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> dict:
    """RC recovery over arrays with per-state iteration diagnostics."""
    dens = np.ascontiguousarray(dens, dtype=float).ravel()
    mom_sq = np.ascontiguousarray(mom_sq, dtype=float).ravel()
    energy = np.ascontiguousarray(energy, dtype=float).ravel()
    n = dens.shape[0]
    p = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    flags = np.empty(n, dtype=np.uint8)
    increasing = np.empty(n, dtype=np.bool_)
    above = np.empty(n, dtype=np.bool_)
    damped = np.empty(n, dtype=np.int64)
    failures = _kernels.rc_newton_stats_kernel(
        dens, mom_sq, energy, tol, max_iter, p, iters, flags,
        increasing, above, damped)
    return {
        "pressure": p,
        "iterations": iters,
        "flags": flags,
        "increasing": increasing,
        "above_start": above,
        "damped_steps": damped,
        "failures": int(failures),
    }
