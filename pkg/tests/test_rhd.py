import math

import numpy as np
import pytest

from conftest import ALL_EOS, random_conserved, random_primitives
from relhyd import eos as eos_mod
from relhyd import rhd
from relhyd.eos import ConservedState, EosKind, EosModel, PrimitiveState, ideal
from relhyd.rhd import (
    Direction,
    admissibility,
    is_admissible,
    max_wave_speed,
    physical_flux,
    rusanov_flux,
    state_to_vector,
)

ID53 = ideal(5.0 / 3.0)


def test_flux_at_rest_is_pressure_only():
    prim = PrimitiveState(1.0, [0.0], 1.0)
    u = eos_mod.prim_to_cons(ID53, prim)
    assert physical_flux(ID53, u, prim) == pytest.approx([0.0, 1.0, 0.0])


def test_flux_moving_state():
    prim = PrimitiveState(1.0, [0.6], 1.0)
    u = eos_mod.prim_to_cons(ID53, prim)
    f = physical_flux(ID53, u, prim)
    assert f == pytest.approx([0.75, 3.28125 * 0.6 + 1.0, 3.28125], rel=1e-14)


def test_flux_2d_rest_state_y():
    prim = PrimitiveState(1.0, [0.0, 0.0], 1.0)
    u = eos_mod.prim_to_cons(ID53, prim)
    fy = physical_flux(ID53, u, prim, Direction.Y)
    assert fy == pytest.approx([0.0, 0.0, 1.0, 0.0])
    fx = physical_flux(ID53, u, prim, Direction.X)
    assert fx == pytest.approx([0.0, 1.0, 0.0, 0.0])


def test_flux_direction_guard():
    prim = PrimitiveState(1.0, [0.0], 1.0)
    u = eos_mod.prim_to_cons(ID53, prim)
    with pytest.raises(ValueError):
        physical_flux(ID53, u, prim, Direction.Y)


def test_wave_speed_at_rest_is_sound_speed():
    prim = PrimitiveState(1.0, [0.0], 1.0)
    cs = math.sqrt(float(eos_mod.sound_speed_sq(ID53, 1.0, 1.0)))
    assert max_wave_speed(ID53, prim) == pytest.approx(cs, rel=1e-14)


def test_wave_speed_moving_state():
    prim = PrimitiveState(1.0, [0.6], 1.0)
    cs = math.sqrt(10.0 / 21.0)
    expect = (0.6 + cs) / (1.0 + 0.6 * cs)
    assert max_wave_speed(ID53, prim) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(0.9123265, abs=1e-7)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_wave_speed_subluminal(eos):
    rng = np.random.default_rng(61)
    rho, vs, p = random_primitives(rng, 5000, log_uniform=True)
    lam = rhd.wave_speed_arrays(eos, rho, vs[0], p)
    assert np.all(lam < 1.0) and np.all(lam >= 0.0)


def test_wave_speed_near_light_limit():
    prim = PrimitiveState(1.0, [1.0 - 1e-12], 1.0)
    lam = max_wave_speed(ID53, prim)
    assert lam < 1.0
    assert lam > 0.999


def test_rusanov_consistency_single():
    u = ConservedState(1.0, [0.0], 2.5)
    f = rusanov_flux(ID53, u, u)
    assert f == pytest.approx([0.0, 1.0, 0.0], abs=1e-14)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_rusanov_consistency_random(eos):
    rng = np.random.default_rng(67)
    dens, moms, energy = random_conserved(rng, eos, 1000)
    rho, vs, p = eos_mod.recover_primitives(eos, dens, moms, energy)
    flux = rhd.flux_arrays(dens, moms, energy, rho, vs, p, axis=0)
    lam = rhd.wave_speed_arrays(eos, rho, vs[0], p)
    u = np.stack([dens, moms[0], energy])
    f = np.stack(flux)
    same = rhd.rusanov_flux_arrays(u, f, lam, u, f, lam)
    np.testing.assert_allclose(same, f, rtol=0, atol=1e-15)


def test_rusanov_hand_example():
    ul = ConservedState(1.0, [0.0], 2.5)
    ur = ConservedState(2.0, [0.0], 5.0)
    f = rusanov_flux(ID53, ul, ur)
    lam = math.sqrt(10.0 / 21.0)
    assert f == pytest.approx([-0.5 * lam, 1.5, -0.5 * lam * 2.5], rel=1e-10)
    assert f == pytest.approx([-0.345033, 1.5, -0.862582], abs=1e-6)


def test_rusanov_swap_structure():
    ul = ConservedState(1.0, [0.1], 2.6)
    ur = ConservedState(1.5, [-0.2], 4.0)
    f_lr = rusanov_flux(ID53, ul, ur)
    f_rl = rusanov_flux(ID53, ur, ul)
    pl = eos_mod.cons_to_prim(ID53, ul).prim
    pr = eos_mod.cons_to_prim(ID53, ur).prim
    central = 0.5 * (physical_flux(ID53, ul, pl) + physical_flux(ID53, ur, pr))
    # central part symmetric, dissipation flips sign under exchange
    assert f_lr + f_rl == pytest.approx(2.0 * central, rel=1e-12)


def test_admissibility_values():
    assert admissibility(ConservedState(1.0, [0.0], 2.5)) == pytest.approx((1.0, 1.5))
    d, q = admissibility(ConservedState(1.0, [3.0], 3.0))
    assert d == 1.0 and q < 0.0
    d, q = admissibility(ConservedState(0.001, [25.0], 25.001))
    assert q == pytest.approx(25.001 - math.sqrt(1e-6 + 625.0), rel=1e-9)
    assert 0.0 < q < 1e-3


def test_admissibility_array_form():
    u = np.array([[1.0, 1.0], [0.0, 3.0], [2.5, 3.0]])
    dens, excess = admissibility(u)
    assert dens == pytest.approx([1.0, 1.0])
    assert excess[0] == pytest.approx(1.5)
    assert excess[1] < 0.0
    assert not is_admissible(u)


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_characteristic_shift_states_admissible(eos):
    # u +/- f(u)/Lambda stays admissible: the building block of the
    # first-order positivity proof.
    rng = np.random.default_rng(71)
    dens, moms, energy = random_conserved(rng, eos, 10_000, log_uniform=True)
    rho, vs, p = eos_mod.recover_primitives(eos, dens, moms, energy)
    flux = np.stack(rhd.flux_arrays(dens, moms, energy, rho, vs, p, axis=0))
    lam = rhd.wave_speed_arrays(eos, rho, vs[0], p)
    u = np.stack([dens, moms[0], energy])
    mag_in = energy + np.sqrt(dens ** 2 + moms[0] ** 2)
    for sign in (+1.0, -1.0):
        shifted = u + sign * flux / lam
        dd, qq = admissibility(shifted)
        # The true margin can sit below eps*E (verified against exact
        # arithmetic), so admissibility is asserted up to the round-off
        # floor of the recovery/flux/shift chain whose operands are ~E.
        floor = 8.0 * np.finfo(float).eps * (
            mag_in + shifted[-1] + np.sqrt(shifted[0] ** 2 + shifted[1] ** 2))
        assert np.all(dd > 0.0), f"D violation, worst {dd.min()}"
        assert np.all(qq > -floor), f"q violation, worst {(qq / mag_in).min()}"


@pytest.mark.parametrize("eos", ALL_EOS, ids=str)
def test_first_order_step_admissible(eos):
    # One explicit FV step with Rusanov fluxes from random admissible triples
    # at 0.9x the positivity time-step bound.
    rng = np.random.default_rng(73)
    n = 10_000
    dens, moms, energy = random_conserved(rng, eos, 3 * n, log_uniform=True)
    rho, vs, p = eos_mod.recover_primitives(eos, dens, moms, energy)
    u = np.stack([dens, moms[0], energy]).reshape(3, 3, n)
    f = np.stack(rhd.flux_arrays(dens, moms, energy, rho, vs, p, axis=0)).reshape(3, 3, n)
    lam = rhd.wave_speed_arrays(eos, rho, vs[0], p).reshape(3, n)
    lam_left = np.maximum(lam[0], lam[1])
    lam_right = np.maximum(lam[1], lam[2])
    fl = rhd.rusanov_flux_arrays(u[:, 0], f[:, 0], lam[0], u[:, 1], f[:, 1], lam[1])
    fr = rhd.rusanov_flux_arrays(u[:, 1], f[:, 1], lam[1], u[:, 2], f[:, 2], lam[2])
    dt_over_dx = 0.9 * 2.0 / (lam_left + lam_right)
    unew = u[:, 1] - dt_over_dx * (fr - fl)
    dd, qq = admissibility(unew)
    assert np.all(dd > 0.0)
    assert np.all(qq > 0.0)


def test_energy_excess_concavity():
    # q is concave, D linear: convex combinations dominate the combination
    # of values.
    rng = np.random.default_rng(79)
    eos = ID53
    d1, m1, e1 = random_conserved(rng, eos, 2000)
    d2, m2, e2 = random_conserved(rng, eos, 2000)
    u1 = np.stack([d1, m1[0], e1])
    u2 = np.stack([d2, m2[0], e2])
    for theta in rng.uniform(0, 1, 8):
        mix = theta * u1 + (1 - theta) * u2
        _, q_mix = admissibility(mix)
        _, q1 = admissibility(u1)
        _, q2 = admissibility(u2)
        assert np.all(q_mix >= theta * q1 + (1 - theta) * q2 - 1e-12)
