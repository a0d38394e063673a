"""Compiled inner loops for conservative-to-primitive recovery.

One scalar Newton solve per entry; the surrounding package calls these on
flattened arrays.  Flags: 0 converged, 1 iteration budget exhausted,
2 inadmissible input.
"""

import numpy as np
from numba import njit

EOS_ID = 0
EOS_TM = 1
EOS_IP = 2
EOS_RC = 3

FLAG_OK = 0
FLAG_NO_CONVERGENCE = 1
FLAG_INADMISSIBLE = 2


@njit(cache=True, fastmath=False)
def _phi_id(p, dens, msq, energy, gamma):
    ep = energy + p
    arg = 1.0 - msq / (ep * ep)
    if arg < 0.0:
        arg = 0.0
    return p / (gamma - 1.0) - energy + msq / ep + dens * np.sqrt(arg)


@njit(cache=True, fastmath=False)
def _phi_id_deriv(p, dens, msq, energy, gamma):
    ep = energy + p
    arg = 1.0 - msq / (ep * ep)
    if arg < 1e-300:
        arg = 1e-300
    return (1.0 / (gamma - 1.0) - msq / (ep * ep)
            + dens * msq / (ep * ep * ep * np.sqrt(arg)))


@njit(cache=True, fastmath=False)
def _newton_id(dens, msq, energy, gamma, tol, max_iter, p_init):
    """Pressure of the constant-heat-ratio gas from (D, |m|^2, E).

    `p_init > 0` warm-starts the iteration (solver fast path); otherwise the
    guess (gamma - 1) * q is used.
    """
    if p_init > 0.0:
        p = p_init
    else:
        q = energy - np.sqrt(dens * dens + msq)
        p = (gamma - 1.0) * q
        if p < 1e-12:
            p = 1e-12
    lo = 0.0
    hi = np.inf
    for it in range(1, max_iter + 1):
        res = _phi_id(p, dens, msq, energy, gamma)
        if res > 0.0:
            hi = p
        else:
            lo = p
        step = -res / _phi_id_deriv(p, dens, msq, energy, gamma)
        p_new = p + step
        if not (lo < p_new < hi) or not np.isfinite(p_new):
            p_new = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * max(p, 1e-300)
        if abs(p_new - p) <= tol * p_new:
            return p_new, it, FLAG_OK
        p = p_new
    return p, max_iter, FLAG_NO_CONVERGENCE


@njit(cache=True, fastmath=False)
def _enthalpy_x(kind, gamma, x):
    """Specific enthalpy and its slope as functions of x = p/rho."""
    if kind == EOS_ID:
        g1 = gamma / (gamma - 1.0)
        return 1.0 + g1 * x, g1
    if kind == EOS_TM:
        s = np.sqrt(2.25 * x * x + 1.0)
        return 2.5 * x + s, 2.5 + 2.25 * x / s
    if kind == EOS_IP:
        s = np.sqrt(4.0 * x * x + 1.0)
        return 2.0 * x + s, 2.0 + 4.0 * x / s
    # RC
    num = 2.0 * (6.0 * x * x + 4.0 * x + 1.0)
    den = 3.0 * x + 2.0
    h = num / den
    dh = (2.0 * (12.0 * x + 4.0) - 3.0 * h) / den
    return h, dh


@njit(cache=True, fastmath=False)
def _newton_energy(kind, dens, msq, energy, gamma, tol, max_iter, p_init):
    """Pressure via the lab-frame energy residual D*Gamma*h(p) - p - E.

    Used for the equations of state without a dedicated closed-form route.
    Newton guarded by a bisection bracket that provably contains the root;
    `p_init > 0` warm-starts the iteration.
    """
    if p_init > 0.0:
        p = p_init
    else:
        q = energy - np.sqrt(dens * dens + msq)
        p = 0.5 * q
        floor = 1e-12 * energy
        if p < floor:
            p = floor
    lo = 1e-16 * energy
    hi = 2.0 * energy
    for it in range(1, max_iter + 1):
        ep = energy + p
        vsq = msq / (ep * ep)
        if vsq >= 1.0:
            vsq = 1.0 - 1e-16
        gam = 1.0 / np.sqrt(1.0 - vsq)
        rho = dens / gam
        x = p / rho
        h, dh_dx = _enthalpy_x(kind, gamma, x)
        res = dens * gam * h - p - energy
        if res > 0.0:
            hi = p
        else:
            lo = p
        # d(D*Gamma*h)/dp with v = |m|/(E+p), rho = D/Gamma:
        dgam = -gam * gam * gam * vsq / ep
        drho = dens * gam * vsq / ep
        dh = dh_dx * (1.0 / rho - x / rho * drho)
        deriv = dens * (dgam * h + gam * dh) - 1.0
        p_new = p - res / deriv
        if not (lo < p_new < hi) or not np.isfinite(p_new):
            p_new = 0.5 * (lo + hi)
        if abs(p_new - p) <= tol * p_new:
            return p_new, it, FLAG_OK
        p = p_new
    return p, max_iter, FLAG_NO_CONVERGENCE


@njit(cache=True, fastmath=False)
def _rc_ratio(h):
    """Pressure-to-density ratio of the kinetic-theory fit, as T(h)."""
    t = 3.0 * h + 8.0
    return ((3.0 * h - 8.0) + np.sqrt(t * t - 96.0)) / 24.0


@njit(cache=True, fastmath=False)
def _rc_ratio_deriv(h):
    t = 3.0 * h + 8.0
    return 0.125 * (1.0 + t / np.sqrt(t * t - 96.0))


@njit(cache=True, fastmath=False)
def _newton_rc(dens, msq, energy, tol, max_iter):
    """Root of the quadratic-in-(E+p) residual for the kinetic-theory fit.

    Iterates start at E where the residual is negative; while the residual
    stays negative (iterate below the root) every step increases the
    iterate.  A single overshoot past the root is possible, after which
    Newton descends toward the root from above.  The `increasing` flag
    reports the below-the-root monotonicity; steps already below the
    convergence tolerance are round-off noise and are not flagged.  A damped
    step is taken only if a full step leaves the valid branch (h > 1).
    Returns (p, iterations, flag, increasing, above_start, damped_steps).
    A positive `p_init` warm-starts at E + p_init, still above E where the
    residual derivative is provably positive.
    """
    epp = energy + p_init if p_init > 0.0 else energy
    increasing = True
    above_start = True
    damped = 0
    for it in range(1, max_iter + 1):
        h = np.sqrt(epp * epp - msq) / dens
        th = _rc_ratio(h)
        s_val = epp * epp - epp * energy - dens * dens * h * th
        slope = 2.0 - th / h - _rc_ratio_deriv(h)
        s_deriv = slope * epp - energy
        step = -s_val / s_deriv
        epp_new = epp + step
        k = 1.0
        while k > 1e-8:
            h_new = np.sqrt(max(epp_new * epp_new - msq, 0.0)) / dens
            if np.isfinite(epp_new) and h_new > 1.0 + 1e-14:
                break
            k *= 0.5
            damped += 1
            epp_new = epp + k * step
        converged = abs(epp_new - epp) <= tol * epp_new
        if not converged:
            if s_val < 0.0 and epp_new <= epp:
                increasing = False
            if epp_new <= energy:
                above_start = False
        epp = epp_new
        if converged:
            return epp - energy, it, FLAG_OK, increasing, above_start, damped
    return epp - energy, max_iter, FLAG_NO_CONVERGENCE, increasing, above_start, damped


@njit(cache=True, fastmath=False)
def recover_pressure_kernel(kind, gamma, dens, msq, energy, tol, max_iter,
                            out_p, out_iters, out_flags):
    """Pressure recovery over flattened arrays; returns the failure count."""
    n = dens.shape[0]
    bad = 0
    for i in range(n):
        d = dens[i]
        m2 = msq[i]
        e = energy[i]
        if not (d > 0.0 and e - np.sqrt(d * d + m2) > 0.0):
            out_p[i] = np.nan
            out_iters[i] = 0
            out_flags[i] = FLAG_INADMISSIBLE
            bad += 1
            continue
        if kind == EOS_ID:
            p, it, flag = _newton_id(d, m2, e, gamma, tol, max_iter)
        elif kind == EOS_RC:
            p, it, flag, _, _, _ = _newton_rc(d, m2, e, tol, max_iter)
        else:
            p, it, flag = _newton_energy(kind, d, m2, e, gamma, tol, max_iter)
        out_p[i] = p
        out_iters[i] = it
        out_flags[i] = flag
        if flag != FLAG_OK:
            bad += 1
    return bad


@njit(cache=True, fastmath=False)
def rc_newton_stats_kernel(dens, msq, energy, tol, max_iter,
                           out_p, out_iters, out_flags,
                           out_increasing, out_above, out_damped):
    """Recovery for the kinetic-theory fit with per-state iteration diagnostics."""
    n = dens.shape[0]
    bad = 0
    for i in range(n):
        d = dens[i]
        m2 = msq[i]
        e = energy[i]
        if not (d > 0.0 and e - np.sqrt(d * d + m2) > 0.0):
            out_p[i] = np.nan
            out_iters[i] = 0
            out_flags[i] = FLAG_INADMISSIBLE
            out_increasing[i] = False
            out_above[i] = False
            out_damped[i] = 0
            bad += 1
            continue
        p, it, flag, inc, above, damped = _newton_rc(d, m2, e, tol, max_iter)
        out_p[i] = p
        out_iters[i] = it
        out_flags[i] = flag
        out_increasing[i] = inc
        out_above[i] = above
        out_damped[i] = damped
        if flag != FLAG_OK:
            bad += 1
    return bad
