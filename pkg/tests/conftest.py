import math

import pytest

from ionduet.trap import (
    AddressingProfile,
    TrapConfig,
    addressing_profile,
    solve_displacement_for_ratio,
)

TWO_PI = 2.0 * math.pi


def make_trap(**overrides) -> TrapConfig:
    base = dict(
        omega_x=TWO_PI * 8.0e6,
        omega_y=TWO_PI * 17.0e6,
        omega_z=TWO_PI * 10.4e6,
        eta_single=0.23,
        ion_spacing_l=2.0e-6,
        delta_k_mag=2.0e6,
        U0_volts=16.3,
        U0_phase_zero=16.3,
        U0_phase_pi=12.6,
    )
    base.update(overrides)
    return TrapConfig(**base)


def make_profile(Omega_1: float, Omega_2: float, Omega_c: float | None = None) -> AddressingProfile:
    """Synthetic addressing at given rates, bypassing the Bessel geometry."""
    if Omega_c is None:
        Omega_c = 2.0 * max(Omega_1, Omega_2)
    return AddressingProfile(
        xi_1=0.0, xi_2=0.0, Omega_1=Omega_1, Omega_2=Omega_2, Omega_c=Omega_c
    )


@pytest.fixture(scope="session")
def trap() -> TrapConfig:
    return make_trap()


@pytest.fixture(scope="session")
def profile(trap):
    d = solve_displacement_for_ratio(trap, 2.0)
    return addressing_profile(trap, d, TWO_PI * 750e3)
