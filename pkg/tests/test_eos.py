import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ALL_EOS, random_conserved, random_primitives
from relhyd import eos as eos_mod
from relhyd.eos import (
    AdmissibilityError,
    ConservedState,
    ConvergenceError,
    EosDomainError,
    EosKind,
    EosModel,
    PrimitiveState,
    check_taub,
    cons_to_prim,
    cons_to_prim_rc,
    enthalpy,
    enthalpy_partials,
    ideal,
    pressure_residual_id,
    prim_to_cons,
    prim_to_cons_arrays,
    rc_newton_batch,
    rc_newton_slope,
    rc_pressure_ratio,
    rc_residual,
    recover_primitives,
    sound_speed_sq,
    velocity_quartic_id,
)

ID53 = ideal(5.0 / 3.0)
TM = EosModel(EosKind.TM)
IP = EosModel(EosKind.IP)
RC = EosModel(EosKind.RC)

# Golden conversions: conserved state -> primitives, cross-checked against
# the residual functions at tight absolute thresholds.
GOLDEN_ID53 = [
    ((0.001, 25.0, 25.001),
     (1.9913276960883976e-5, 0.999801711041084, 0.003958207130631426)),
    ((0.26215012530349685, 42.10522585617847, 42.10705317285818),
     (0.003097928215833704, 0.999930172301406, 0.001112999656126819)),
    ((0.1, 50.0, 50.01),
     (0.004084552892614892, 0.9991654731658531, 0.03176119254315)),
]


# ---------------------------------------------------------------------------
# Thermodynamic functions


def test_enthalpy_ideal_direct():
    assert enthalpy(ID53, 1.0, 1.0) == pytest.approx(3.5, abs=1e-15)


def test_enthalpy_tm_zero_pressure_limit():
    assert enthalpy(TM, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_enthalpy_rc_direct():
    # 2(6 + 4 + 1) / (1 * 5)
    assert enthalpy(RC, 1.0, 1.0) == pytest.approx(4.4, abs=1e-14)


def test_enthalpy_rejects_bad_inputs():
    with pytest.raises(EosDomainError):
        enthalpy(ID53, 1.0, -1.0)
    with pytest.raises(EosDomainError):
        enthalpy(ID53, np.nan, 1.0)
    with pytest.raises(EosDomainError):
        enthalpy(ID53, -0.5, 1.0)


def test_sound_speed_examples():
    assert sound_speed_sq(ID53, 1.0, 1.0) == pytest.approx((5.0 / 3.0) / 3.5, rel=1e-13)
    assert sound_speed_sq(RC, 1.0, 1.0) == pytest.approx(235.0 / 759.0, rel=1e-13)
    assert sound_speed_sq(TM, 1e-12, 1.0) < 1e-11


def test_sound_speed_rejects_zero_pressure():
    with pytest.raises(EosDomainError):
        sound_speed_sq(TM, 0.0, 1.0)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_sound_speed_bounds_random(eos):
    rng = np.random.default_rng(11)
    rho, _, p = random_primitives(rng, 10_000, log_uniform=True)
    cs2 = sound_speed_sq(eos, p, rho)
    assert np.all(cs2 > 0.0) and np.all(cs2 < 1.0)


def test_sound_speed_matches_thermodynamic_definition(any_eos):
    # Independent route: cs^2 = -(rho / (n h)) dh/drho with n = rho dh/dp - 1.
    rng = np.random.default_rng(3)
    rho, _, p = random_primitives(rng, 2000, log_uniform=True)
    h, dh_dp, dh_drho = enthalpy_partials(any_eos, p, rho)
    n = rho * dh_dp - 1.0
    generic = -rho * dh_drho / (n * h)
    assert sound_speed_sq(any_eos, p, rho) == pytest.approx(generic, rel=1e-10)


def test_enthalpy_partials_match_finite_differences(any_eos):
    p, rho = 0.37, 2.1
    h, dh_dp, dh_drho = (float(v) for v in enthalpy_partials(any_eos, p, rho))
    eps = 1e-6
    fd_p = (enthalpy(any_eos, p + eps, rho) - enthalpy(any_eos, p - eps, rho)) / (2 * eps)
    fd_r = (enthalpy(any_eos, p, rho + eps) - enthalpy(any_eos, p, rho - eps)) / (2 * eps)
    assert h == pytest.approx(float(enthalpy(any_eos, p, rho)), rel=1e-14)
    assert dh_dp == pytest.approx(float(fd_p), rel=1e-8)
    assert dh_drho == pytest.approx(float(fd_r), rel=1e-7)


def test_taub_examples():
    assert check_taub(ID53, 0.0, 1.0)
    assert check_taub(ID53, 1.0, 1.0)  # 3.5 >= sqrt(2) + 1
    assert check_taub(TM, 10.0, 0.1)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_taub_random_grid(eos):
    rng = np.random.default_rng(5)
    rho, _, p = random_primitives(rng, 10_000, log_uniform=True)
    assert check_taub(eos, p, rho)


@given(logp=st.floats(-6, 3), logrho=st.floats(-6, 3))
@settings(max_examples=200, deadline=None)
def test_taub_and_sound_speed_property(logp, logrho):
    p, rho = 10.0 ** logp, 10.0 ** logrho
    for eos in (ID53, TM, IP, RC):
        assert check_taub(eos, p, rho)
        assert 0.0 < float(sound_speed_sq(eos, p, rho)) < 1.0


# ---------------------------------------------------------------------------
# prim -> cons


def test_prim_to_cons_rest_state():
    u = prim_to_cons(ID53, PrimitiveState(1.0, [0.0], 1.0))
    assert u.dens == pytest.approx(1.0)
    assert u.mom[0] == pytest.approx(0.0)
    assert u.energy == pytest.approx(2.5)


def test_prim_to_cons_moving_state():
    u = prim_to_cons(ID53, PrimitiveState(1.0, [0.6], 1.0))
    assert u.dens == pytest.approx(1.25, rel=1e-14)
    assert u.mom[0] == pytest.approx(3.28125, rel=1e-14)
    assert u.energy == pytest.approx(4.46875, rel=1e-14)


def test_prim_to_cons_rc_rest_state():
    u = prim_to_cons(RC, PrimitiveState(1.0, [0.0], 1.0))
    assert u.energy == pytest.approx(3.4, rel=1e-14)


def test_prim_to_cons_outputs_admissible(any_eos):
    rng = np.random.default_rng(13)
    rho, vs, p = random_primitives(rng, 5000)
    dens, moms, energy = prim_to_cons_arrays(any_eos, rho, vs, p)
    excess = energy - np.sqrt(dens ** 2 + moms[0] ** 2)
    assert np.all(dens > 0.0) and np.all(excess > 0.0)


def test_primitive_state_validation():
    with pytest.raises(ValueError):
        PrimitiveState(-1.0, [0.0], 1.0)
    with pytest.raises(ValueError):
        PrimitiveState(1.0, [1.0], 1.0)
    with pytest.raises(ValueError):
        PrimitiveState(1.0, [0.0], 0.0)


def test_eos_model_validation():
    with pytest.raises(ValueError):
        ideal(2.5)
    with pytest.raises(ValueError):
        ideal(1.0)
    assert EosModel.parse("rc").kind is EosKind.RC
    assert EosModel.parse("ID", 1.4).gamma == 1.4


# ---------------------------------------------------------------------------
# cons -> prim golden values and residual oracles


@pytest.mark.parametrize("u_vals,prim_vals", GOLDEN_ID53)
def test_id_recovery_golden(u_vals, prim_vals):
    u = ConservedState(u_vals[0], [u_vals[1]], u_vals[2])
    rep = cons_to_prim(ID53, u)
    rho, v1, p = prim_vals
    assert rep.prim.rho == pytest.approx(rho, rel=1e-9)
    assert rep.prim.v[0] == pytest.approx(v1, rel=1e-9)
    assert rep.prim.p == pytest.approx(p, rel=1e-9)
    assert abs(pressure_residual_id(rep.prim.p, u, 5.0 / 3.0)) <= 1e-10
    assert abs(velocity_quartic_id(rep.prim.v[0], u, 5.0 / 3.0)) <= 1e-13


def test_id_residual_at_printed_values():
    u = ConservedState(0.001, [25.0], 25.001)
    assert abs(pressure_residual_id(0.003958207130631426, u, 5.0 / 3.0)) <= 1e-12
    assert abs(velocity_quartic_id(0.999801711041084, u, 5.0 / 3.0)) <= 1e-14
    u3 = ConservedState(0.1, [50.0], 50.01)
    assert abs(velocity_quartic_id(0.9991654731658531, u3, 5.0 / 3.0)) <= 1e-14


def test_id_residual_hand_values():
    u = ConservedState(1.0, [0.0], 2.5)
    assert pressure_residual_id(1.0, u, 5.0 / 3.0) == pytest.approx(0.0, abs=1e-15)
    # p/(gamma-1) - E + 0 + D = 3 - 2.5 + 1
    assert pressure_residual_id(2.0, u, 5.0 / 3.0) == pytest.approx(1.5, rel=1e-14)


def test_id_quartic_zero_momentum():
    u = ConservedState(1.0, [0.0], 2.5)
    assert velocity_quartic_id(0.0, u, 5.0 / 3.0) == 0.0


def test_id_zero_velocity_inverse():
    rep = cons_to_prim(ID53, ConservedState(1.0, [0.0], 2.5))
    assert rep.prim.rho == pytest.approx(1.0, rel=1e-12)
    assert rep.prim.p == pytest.approx(1.0, rel=1e-12)
    assert rep.prim.v[0] == pytest.approx(0.0, abs=1e-14)


def test_id_quartic_agrees_with_pressure_route():
    # Independent oracle: solve the quartic for |v|, reconstruct primitives.
    rng = np.random.default_rng(17)
    for _ in range(200):
        rho, vs, p = random_primitives(rng, 1, vmax=0.999)
        u = prim_to_cons(ID53, PrimitiveState(rho[0], [vs[0][0]], p[0]))
        rep = cons_to_prim(ID53, u)
        g1 = 5.0 / 3.0 - 1.0
        m1 = abs(u.mom[0])
        den = g1 ** 2 * (m1 ** 2 + u.dens ** 2)
        coeffs = [
            1.0,
            -2.0 * (5.0 / 3.0) * g1 * m1 * u.energy / den,
            ((5.0 / 3.0) ** 2 * u.energy ** 2 + 2.0 * g1 * m1 ** 2
             - g1 ** 2 * u.dens ** 2) / den,
            -2.0 * (5.0 / 3.0) * m1 * u.energy / den,
            m1 ** 2 / den,
        ]
        roots = np.roots(coeffs)
        speed = abs(rep.prim.v[0])
        real = roots[np.abs(roots.imag) < 1e-9].real
        best = real[np.argmin(np.abs(real - speed))]
        if speed > 1e-3:
            assert best == pytest.approx(speed, rel=1e-9)
        else:
            assert best == pytest.approx(speed, abs=1e-9)


def test_rc_round_trip_unit_state():
    rep = cons_to_prim_rc(ConservedState(1.0, [0.0], 3.4))
    assert rep.prim.p == pytest.approx(1.0, rel=1e-12)
    assert rep.prim.rho == pytest.approx(1.0, rel=1e-12)
    assert rep.iterates[0] == 3.4
    assert rep.iterates[-1] == pytest.approx(4.4, rel=1e-12)


def test_rc_residual_negative_at_start():
    # S(E) = -D sqrt(E^2 - |m|^2) T(...) < 0 for any admissible state.
    rng = np.random.default_rng(23)
    dens, moms, energy = random_conserved(rng, RC, 500)
    for d, m, e in zip(dens[:100], moms[0][:100], energy[:100]):
        assert rc_residual(e, ConservedState(d, [m], e)) < 0.0


def test_rc_iterates_increase_until_crossing():
    # The Lemma property: strictly increasing while the residual is negative;
    # after the single possible crossing the sequence descends to the root.
    rng = np.random.default_rng(29)
    dens, moms, energy = random_conserved(rng, RC, 300, log_uniform=True)
    for d, m, e in zip(dens, moms[0], energy):
        u = ConservedState(d, [m], e)
        rep = cons_to_prim_rc(u)
        seq = rep.iterates
        assert all(x > e for x in seq[1:])
        peak = seq.index(max(seq))
        rising = seq[:peak + 1]
        falling = seq[peak:]
        assert all(b > a for a, b in zip(rising, rising[1:]))
        # descent monotone to within the convergence tolerance
        assert all(b <= a * (1 + 1e-11) for a, b in zip(falling, falling[1:]))


def test_rc_recovery_mean_iterations_in_band():
    rng = np.random.default_rng(31)
    dens, moms, energy = random_conserved(rng, RC, 4000, log_uniform=True)
    stats = rc_newton_batch(dens, moms[0] ** 2, energy)
    assert stats["failures"] == 0
    mean_iters = stats["iterations"].mean()
    assert 3.0 <= mean_iters <= 8.0
    assert np.all(stats["increasing"])
    assert np.all(stats["above_start"])


def test_rc_slope_function_properties():
    # R decreases from exactly 8/5 at h=1 toward 3/2.
    assert float(rc_newton_slope(1.0)) == pytest.approx(1.6, abs=1e-12)
    h = np.linspace(1.0, 100.0, 10_000)
    r = rc_newton_slope(h)
    assert np.all(np.diff(r) < 0.0)
    assert r.min() > 1.5


def test_rc_residual_slope_positive_on_random_states():
    # S'(Pi) > 0 for Pi >= E on admissible states.
    rng = np.random.default_rng(37)
    dens, moms, energy = random_conserved(rng, RC, 2000, log_uniform=True)
    for scale in (1.0, 1.5, 4.0, 10.0):
        epp = energy * scale
        h = np.sqrt(epp ** 2 - moms[0] ** 2) / dens
        s_deriv = rc_newton_slope(h) * epp - energy
        assert np.all(s_deriv > 0.0)


def test_rc_pressure_ratio_zero_at_unit_enthalpy():
    assert float(rc_pressure_ratio(1.0)) == pytest.approx(0.0, abs=1e-15)


# ---------------------------------------------------------------------------
# Round trips and batch equivalence


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_round_trip_random(eos):
    rng = np.random.default_rng(41)
    n = 10_000
    rho, vs, p = random_primitives(rng, n)
    dens, moms, energy = prim_to_cons_arrays(eos, rho, vs, p)
    rho2, vs2, p2 = recover_primitives(eos, dens, moms, energy)
    assert rho2 == pytest.approx(rho, rel=1e-9)
    assert p2 == pytest.approx(p, rel=1e-9)
    small = np.abs(vs[0]) < 1e-3
    np.testing.assert_allclose(vs2[0][small], vs[0][small], atol=1e-9)
    np.testing.assert_allclose(vs2[0][~small], vs[0][~small], rtol=1e-9)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_round_trip_2d(eos):
    rng = np.random.default_rng(43)
    rho, vs, p = random_primitives(rng, 2000, dim=2)
    dens, moms, energy = prim_to_cons_arrays(eos, rho, vs, p)
    rho2, vs2, p2 = recover_primitives(eos, dens, moms, energy)
    assert rho2 == pytest.approx(rho, rel=1e-9)
    assert p2 == pytest.approx(p, rel=1e-9)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_scalar_and_batch_recovery_agree(eos):
    rng = np.random.default_rng(47)
    dens, moms, energy = random_conserved(rng, eos, 300)
    _, _, p_batch = recover_primitives(eos, dens, moms, energy)
    for i in range(0, 300, 7):
        rep = cons_to_prim(eos, ConservedState(dens[i], [moms[0][i]], energy[i]))
        assert rep.prim.p == pytest.approx(p_batch[i], rel=1e-12)


def test_recovery_report_residual_below_tolerance(any_eos):
    u = prim_to_cons(any_eos, PrimitiveState(2.0, [0.3], 0.7))
    rep = cons_to_prim(any_eos, u, tol=1e-12)
    assert rep.residual <= 1e-12
    assert prim_to_cons(any_eos, rep.prim).energy == pytest.approx(u.energy, rel=1e-11)


def test_round_trip_reproduces_conserved(any_eos):
    # post-condition: prim_to_cons(recovered) matches within 10 * tol.
    rng = np.random.default_rng(53)
    rho, vs, p = random_primitives(rng, 200)
    for i in range(200):
        u = prim_to_cons(any_eos, PrimitiveState(rho[i], [vs[0][i]], p[i]))
        rep = cons_to_prim(any_eos, u, tol=1e-12)
        u2 = prim_to_cons(any_eos, rep.prim)
        assert u2.dens == pytest.approx(u.dens, rel=1e-11)
        assert u2.energy == pytest.approx(u.energy, rel=1e-11)
        if abs(u.mom[0]) > 1e-12:
            assert u2.mom[0] == pytest.approx(u.mom[0], rel=1e-11)


# ---------------------------------------------------------------------------
# Error paths


def test_recovery_rejects_inadmissible_state(any_eos):
    with pytest.raises(AdmissibilityError):
        cons_to_prim(any_eos, ConservedState(1.0, [3.0], 3.0))
    with pytest.raises(AdmissibilityError):
        cons_to_prim(any_eos, ConservedState(-1.0, [0.0], 3.0))


def test_recovery_budget_exhaustion_raises():
    u = prim_to_cons(ID53, PrimitiveState(1.0, [0.9], 5.0))
    with pytest.raises(ConvergenceError) as err:
        cons_to_prim(ID53, u, tol=1e-12, max_iter=2)
    assert err.value.residual is not None


def test_batch_recovery_reports_offender():
    dens = np.array([1.0, 1.0])
    msq = np.array([0.0, 9.0])
    energy = np.array([2.5, 3.0])
    with pytest.raises(AdmissibilityError) as err:
        eos_mod.recover_pressure(ID53, dens, msq, energy, context="unit test")
    assert "unit test" in str(err.value)
    assert "entry 1" in str(err.value)
