"""Trap geometry, mode structure, and micro-motion differential addressing.

Maps lab knobs (static potential, push-field displacement) to per-ion
carrier Rabi frequencies and to the entanglement phase.  Micro-motion
suppresses the carrier coupling of a displaced ion by a Bessel factor,
which is what makes the two ions individually addressable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq
from scipy.special import j0, j1

#: First two zeros of J0; the second bounds the trusted displacement window.
J0_FIRST_ZERO = 2.4048255576957724
J0_SECOND_ZERO = 5.520078110286311


@dataclass(frozen=True)
class TrapConfig:
    """Static trap parameters.  omega_y/omega_z are recorded but drive nothing."""

    omega_x: float  # stretch-defining secular frequency, rad/s
    omega_y: float
    omega_z: float
    eta_single: float  # single-ion Lamb-Dicke parameter
    ion_spacing_l: float  # m
    delta_k_mag: float  # effective micro-motion wavevector, 1/m
    U0_volts: float
    U0_phase_zero: float  # V at which the entanglement phase is 0
    U0_phase_pi: float  # V at which the entanglement phase is pi

    def __post_init__(self):
        if self.omega_x <= 0:
            raise ValueError("omega_x must be positive")
        if not 0.0 < self.eta_single < 1.0:
            raise ValueError("eta_single must lie in (0, 1)")
        if self.ion_spacing_l <= 0:
            raise ValueError("ion spacing must be positive")
        if self.delta_k_mag <= 0:
            raise ValueError("delta_k_mag must be positive")
        if self.U0_phase_zero == self.U0_phase_pi:
            raise ValueError("phase calibration voltages must differ")


@dataclass(frozen=True)
class AddressingProfile:
    """Per-ion micro-motion amplitudes and carrier Rabi frequencies."""

    xi_1: float  # m
    xi_2: float  # m
    Omega_1: float  # rad/s
    Omega_2: float  # rad/s
    Omega_c: float  # co-propagating carrier Rabi frequency, rad/s
    harmonic_order: int = 0  # 0: carrier, 1: rf-micro-motion sideband

    def __post_init__(self):
        if self.xi_1 < 0 or self.xi_2 < 0:
            raise ValueError("micro-motion amplitudes must be nonnegative")
        if self.Omega_1 < 0 or self.Omega_2 < 0:
            raise ValueError("Rabi frequencies must be nonnegative")
        if self.harmonic_order not in (0, 1):
            raise ValueError("harmonic_order must be 0 or 1")
        if self.harmonic_order == 0:
            if self.Omega_1 > self.Omega_c * (1 + 1e-12) or self.Omega_2 > self.Omega_c * (1 + 1e-12):
                raise ValueError("carrier Rabi frequencies cannot exceed Omega_c")

    @property
    def ratio(self) -> float:
        return self.Omega_1 / self.Omega_2


def stretch_frequency(omega_x: float) -> float:
    """Out-of-phase (stretch) mode frequency, sqrt(3) times the COM frequency."""
    if omega_x <= 0:
        raise ValueError("omega_x must be positive")
    return math.sqrt(3.0) * omega_x


def lamb_dicke_two_ion(eta_single: float) -> float:
    """Stretch-mode two-ion Lamb-Dicke parameter eta / sqrt(2 sqrt(3))."""
    if not 0.0 < eta_single < 1.0:
        raise ValueError("eta_single must lie in (0, 1)")
    return eta_single / math.sqrt(2.0 * math.sqrt(3.0))


def micromotion_rabi(Omega_c: float, delta_k_mag: float, xi: float, harmonic_order: int = 0) -> float:
    """Micro-motion-suppressed Rabi frequency Omega_c |J_k(delta_k * xi)|.

    The magnitude is taken so a Rabi frequency is never negative; a Bessel
    sign flip is physically a pi phase on that ion's drive.
    """
    if Omega_c <= 0:
        raise ValueError("Omega_c must be positive")
    if xi < 0:
        raise ValueError("micro-motion amplitude must be nonnegative")
    arg = delta_k_mag * xi
    if harmonic_order == 0:
        return Omega_c * abs(j0(arg))
    if harmonic_order == 1:
        return Omega_c * abs(j1(arg))
    raise ValueError("harmonic_order must be 0 or 1")


def addressing_profile(
    cfg: TrapConfig,
    com_displacement_d: float,
    Omega_c: float,
    harmonic_order: int = 0,
    guard: float = J0_SECOND_ZERO,
) -> AddressingProfile:
    """Addressing at center-of-mass displacement d from the rf null.

    For d > 0 ion 1 moves toward the null (xi_1 = |d - l/2|) and ion 2 away
    from it (xi_2 = |d + l/2|).  Both Bessel arguments must stay below the
    guard (default: second J0 zero), where the Omega-vs-d map is monotone.
    """
    half = cfg.ion_spacing_l / 2.0
    xi_1 = abs(com_displacement_d - half)
    xi_2 = abs(com_displacement_d + half)
    worst = cfg.delta_k_mag * max(xi_1, xi_2)
    if worst >= guard:
        raise ValueError(
            f"displacement {com_displacement_d!r} m puts a Bessel argument at "
            f"{worst:.3f} >= guard {guard:.3f}"
        )
    return AddressingProfile(
        xi_1=xi_1,
        xi_2=xi_2,
        Omega_1=micromotion_rabi(Omega_c, cfg.delta_k_mag, xi_1, harmonic_order),
        Omega_2=micromotion_rabi(Omega_c, cfg.delta_k_mag, xi_2, harmonic_order),
        Omega_c=Omega_c,
        harmonic_order=harmonic_order,
    )


def solve_displacement_for_ratio(
    cfg: TrapConfig,
    target_ratio: float,
    guard: float = J0_SECOND_ZERO,
    rel_tol: float = 1e-9,
) -> float:
    """Smallest displacement d >= 0 with Omega_1/Omega_2 = target_ratio.

    Solved on the monotone branch where ion 2's Bessel argument stays below
    the first J0 zero (the ratio runs from 1 there up to infinity).
    """
    if target_ratio < 1.0:
        raise ValueError("target_ratio must be >= 1 (ion 1 is the faster ion for d > 0)")
    if target_ratio == 1.0:
        return 0.0
    k = cfg.delta_k_mag
    half = cfg.ion_spacing_l / 2.0
    if k * half >= J0_FIRST_ZERO:
        raise ValueError(
            "ion spacing places the ions beyond the first J0 zero; "
            "ratio targeting is ill-defined in this geometry"
        )
    # Ratio diverges as k*(d + l/2) approaches the first J0 zero.
    d_max = J0_FIRST_ZERO / k - half

    def excess(d: float) -> float:
        return abs(j0(k * abs(d - half))) - target_ratio * abs(j0(k * (d + half)))

    lo, hi = 0.0, d_max * (1.0 - 1e-13)
    if excess(lo) >= 0.0:
        raise ValueError("target ratio below the achievable range")
    if excess(hi) <= 0.0:
        raise ValueError("target ratio unreachable inside the guard window")
    d = brentq(excess, lo, hi, xtol=1e-18, rtol=8.9e-16)
    prof = addressing_profile(cfg, d, Omega_c=1.0, guard=guard)
    if abs(prof.ratio / target_ratio - 1.0) > rel_tol:
        raise ValueError("ratio solve did not converge to requested tolerance")
    return float(d)


def phase_from_static_potential(cfg: TrapConfig, U0: float) -> float:
    """Entanglement phase as an affine map of the static potential.

    Pinned to the two calibration points: phase 0 at ``U0_phase_zero`` and
    pi at ``U0_phase_pi``.
    """
    span = cfg.U0_phase_zero - cfg.U0_phase_pi
    return math.pi * (cfg.U0_phase_zero - U0) / span
