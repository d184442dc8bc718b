import math

import numpy as np
import pytest
from scipy.special import j0, j1

from ionduet.trap import (
    J0_FIRST_ZERO,
    J0_SECOND_ZERO,
    TrapConfig,
    addressing_profile,
    lamb_dicke_two_ion,
    micromotion_rabi,
    phase_from_static_potential,
    solve_displacement_for_ratio,
    stretch_frequency,
)

from conftest import TWO_PI, make_trap

# Frozen outside the implementation so a regression in the Bessel plumbing
# cannot hide behind a matching regression in the check.
J1_AT_FIRST_J0_ZERO = 0.5191474972894669


def test_j0_zero_constants_are_roots():
    assert abs(j0(J0_FIRST_ZERO)) < 1e-15
    assert abs(j0(J0_SECOND_ZERO)) < 1e-15
    assert J0_FIRST_ZERO == pytest.approx(2.4048255576957724, abs=0)


def test_stretch_mode_is_sqrt3_times_com():
    omega = TWO_PI * 8.0e6
    assert stretch_frequency(omega) == math.sqrt(3.0) * omega
    assert stretch_frequency(1.0) == math.sqrt(3.0)


def test_two_ion_lamb_dicke_value():
    # eta / sqrt(2 sqrt(3)) at eta = 0.23, frozen to 16 digits.
    assert lamb_dicke_two_ion(0.23) == pytest.approx(0.12357554215970733, abs=1e-16)
    assert lamb_dicke_two_ion(0.23) == pytest.approx(0.1236, abs=1e-4)


def test_micromotion_rabi_matches_bessel_magnitudes():
    rng = np.random.default_rng(4)
    for _ in range(100):
        om = rng.uniform(1e5, 1e7)
        k = rng.uniform(1e5, 4e6)
        xi = rng.uniform(0.0, 1e-6)
        assert micromotion_rabi(om, k, xi, 0) == pytest.approx(om * abs(j0(k * xi)), rel=1e-14)
        assert micromotion_rabi(om, k, xi, 1) == pytest.approx(om * abs(j1(k * xi)), rel=1e-14)


def test_carrier_dies_and_rf_sideband_survives_at_j0_zero():
    xi = J0_FIRST_ZERO / 2.0e6
    assert micromotion_rabi(1.0, 2.0e6, xi, 0) < 1e-15
    assert micromotion_rabi(1.0, 2.0e6, xi, 1) == pytest.approx(J1_AT_FIRST_J0_ZERO, abs=1e-12)
    assert micromotion_rabi(1.0, 2.0e6, xi, 1) == pytest.approx(0.519, abs=1e-3)


def test_addressing_profile_geometry(trap):
    d = 0.3e-6
    prof = addressing_profile(trap, d, 1.0)
    assert prof.xi_1 == pytest.approx(abs(d - 1.0e-6))
    assert prof.xi_2 == pytest.approx(d + 1.0e-6)
    assert prof.Omega_1 > prof.Omega_2


def test_addressing_profile_guard_rejects_far_displacement(trap):
    with pytest.raises(ValueError):
        addressing_profile(trap, 2.0e-6, 1.0)


def test_ratio_solve_round_trip(trap):
    for target in (1.5, 2.0, math.sqrt(2.0) + 1.0, 5.0):
        d = solve_displacement_for_ratio(trap, target)
        prof = addressing_profile(trap, d, 1.0)
        assert prof.ratio == pytest.approx(target, rel=1e-9)


def test_ratio_one_is_the_null(trap):
    assert solve_displacement_for_ratio(trap, 1.0) == 0.0


def test_ratio_below_one_rejected(trap):
    with pytest.raises(ValueError):
        solve_displacement_for_ratio(trap, 0.5)


def test_ratio_solve_rejects_wide_spacing():
    wide = make_trap(ion_spacing_l=4.0e-6)
    with pytest.raises(ValueError):
        solve_displacement_for_ratio(wide, 2.0)


def test_phase_map_hits_both_calibration_points(trap):
    assert phase_from_static_potential(trap, 16.3) == pytest.approx(0.0, abs=1e-12)
    assert phase_from_static_potential(trap, 12.6) == pytest.approx(math.pi, abs=1e-12)
    mid = (16.3 + 12.6) / 2.0
    assert phase_from_static_potential(trap, mid) == pytest.approx(math.pi / 2.0, abs=1e-12)


def test_trap_config_validation():
    with pytest.raises(ValueError):
        make_trap(eta_single=1.2)
    with pytest.raises(ValueError):
        make_trap(omega_x=-1.0)
    with pytest.raises(ValueError):
        make_trap(ion_spacing_l=0.0)
