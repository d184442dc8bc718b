"""Pulse unitaries and noisy Monte-Carlo propagation.

Three pulse types act on the joint state: a differentially addressed
x-carrier (each ion rotates at its own micro-motion-suppressed rate), a
co-propagating carrier (both ions at the full rate), and the stretch-mode
red sideband that exchanges a motional quantum for a spin flip.  Decay of
Rabi oscillations is not put in by hand: it emerges from per-trial noise
(a Rabi-frequency multiplier, thermal COM occupation scaling the coupling,
and imperfect stretch-mode cooling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import kernels
from .hilbert import DEFAULT_N_MAX, DensityOperator, JointState, spin_populations
from .seeding import STREAM_TRIALS, rng_for
from .trap import AddressingProfile

X_CARRIER = "x_carrier"
CO_CARRIER = "co_carrier"
RED_SIDEBAND = "red_sideband"
PULSE_KINDS = (X_CARRIER, CO_CARRIER, RED_SIDEBAND)

#: Permitted norm drift through a pulse sequence before we call it a bug.
NORM_DRIFT_TOL = 1e-9
#: Permitted population at the truncation edge after a sideband pulse.
LEAK_TOL = 1e-9

ALPHA_MAX = 0.2


class TruncationLeakError(RuntimeError):
    """Amplitude reached Fock levels where the truncated coupling is wrong.

    Raised when a sideband pulse leaves population on the top motional level
    in a spin-up configuration (the one place the cut-off coupling matters),
    or when the initial state cannot be shifted up by one quantum.  The fix
    is a larger n_max.
    """


@dataclass(frozen=True)
class PulseSpec:
    """One pulse of a program: what to drive, for how long, with which phases.

    ``eta_prime`` (the stretch-mode two-ion Lamb-Dicke factor) is carried on
    the pulse so a sequence is self-contained; it is required for
    red-sideband pulses and ignored by carriers.
    """

    kind: str
    duration: float  # s
    addressing: AddressingProfile
    drive_phase: float = 0.0
    entangle_phase_phi: float = 0.0
    eta_prime: float | None = None

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.duration < 0:
            raise ValueError("pulse duration must be nonnegative")
        if self.kind == RED_SIDEBAND and self.eta_prime is None:
            raise ValueError("red-sideband pulses need eta_prime")


@dataclass(frozen=True)
class NoiseModel:
    """Per-trial noise channels; the default is noise off.

    gamma is the nominal decay rate of the fluorescence signal envelope
    (rad/s).  It is bookkeeping, not a Lindblad term: the envelope is
    produced by rabi_noise_sigma (relative std. dev. of a per-trial Rabi
    multiplier) plus thermal COM occupation, and the calibration routine in
    experiments picks sigma so the fitted decay matches gamma.
    """

    gamma: float = 0.0
    rabi_noise_sigma: float = 0.0
    stretch_ground_prob: float = 1.0
    com_nbar: float = 0.0
    com_eta: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.rabi_noise_sigma < 0:
            raise ValueError("rabi_noise_sigma must be nonnegative")
        if not 0.0 <= self.stretch_ground_prob <= 1.0:
            raise ValueError("stretch_ground_prob must lie in [0, 1]")
        if self.com_nbar < 0:
            raise ValueError("com_nbar must be nonnegative")
        if self.com_eta < 0:
            raise ValueError("com_eta must be nonnegative")
        if abs(self.alpha) > ALPHA_MAX:
            raise ValueError(f"|alpha| must be <= {ALPHA_MAX}")


def _index(s1: int, s2: int, n: int, n_max: int) -> int:
    return (2 * s1 + s2) * n_max + n


def carrier_hamiltonian(
    Omega_1: float, Omega_2: float, drive_phase: float, n_max: int
) -> np.ndarray:
    """Two independent spin rotations; the motional mode is a spectator."""
    sig = np.array(
        [[0.0, np.exp(-1j * drive_phase)], [np.exp(1j * drive_phase), 0.0]],
        dtype=np.complex128,
    )
    eye2 = np.eye(2)
    eyen = np.eye(n_max)
    return Omega_1 * np.kron(np.kron(sig, eye2), eyen) + Omega_2 * np.kron(
        np.kron(eye2, sig), eyen
    )


def rsb_hamiltonian(
    Omega_1: float, Omega_2: float, eta_prime: float, phi: float, n_max: int
) -> np.ndarray:
    """Red-sideband coupling |down, n> <-> |up, n-1> on each ion.

    The matrix element from level n is sqrt(n) * eta_prime * Omega_i, with
    ion 1's coupling carrying phase phi relative to ion 2's.
    """
    dim = 4 * n_max
    h = np.zeros((dim, dim), dtype=np.complex128)
    c1 = eta_prime * Omega_1 * np.exp(1j * phi)
    c2 = eta_prime * Omega_2
    for n in range(1, n_max):
        root = np.sqrt(n)
        for s2 in (0, 1):
            h[_index(1, s2, n - 1, n_max), _index(0, s2, n, n_max)] += c1 * root
        for s1 in (0, 1):
            h[_index(s1, 1, n - 1, n_max), _index(s1, 0, n, n_max)] += c2 * root
    return h + h.conj().T


def _pulse_hamiltonian(pulse: PulseSpec, n_max: int) -> np.ndarray:
    a = pulse.addressing
    if pulse.kind == X_CARRIER:
        return carrier_hamiltonian(a.Omega_1, a.Omega_2, pulse.drive_phase, n_max)
    if pulse.kind == CO_CARRIER:
        return carrier_hamiltonian(a.Omega_c, a.Omega_c, pulse.drive_phase, n_max)
    return rsb_hamiltonian(
        a.Omega_1, a.Omega_2, pulse.eta_prime, pulse.entangle_phase_phi, n_max
    )


def _unitary(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def carrier_unitary(
    Omega_1: float,
    Omega_2: float,
    t: float,
    drive_phase: float = 0.0,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """Carrier propagator; spin-flip probability of ion i is sin^2(Omega_i t)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return _unitary(carrier_hamiltonian(Omega_1, Omega_2, drive_phase, n_max), t)


def rsb_unitary(
    profile: AddressingProfile,
    eta_prime: float,
    phi: float,
    t: float,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """Red-sideband propagator at the profile's per-ion rates."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return _unitary(
        rsb_hamiltonian(profile.Omega_1, profile.Omega_2, eta_prime, phi, n_max), t
    )


def pulse_unitary(pulse: PulseSpec, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """The noise-free propagator of one pulse."""
    return _unitary(_pulse_hamiltonian(pulse, n_max), pulse.duration)


def raise_motional(state: JointState) -> np.ndarray:
    """Vector of the same spin state with every Fock index shifted up by one."""
    top = np.max(np.abs(state.amps[:, :, -1]) ** 2)
    if top > LEAK_TOL:
        raise TruncationLeakError(
            "initial state occupies the top Fock level; cannot shift up"
        )
    shifted = np.zeros_like(state.amps)
    shifted[:, :, 1:] = state.amps[:, :, :-1]
    return shifted.reshape(-1)


def _leak_columns(n_max: int) -> list[int]:
    # Top-level states with at least one spin up: the cut-off coupling
    # |down, n_max> <-> |up, n_max - 1> would act on exactly these.
    return [
        _index(s1, s2, n_max - 1, n_max)
        for s1 in (0, 1)
        for s2 in (0, 1)
        if (s1, s2) != (0, 0)
    ]


def run_trials(
    initial: JointState,
    pulses: list[PulseSpec],
    noise: NoiseModel,
    n_trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Propagate n_trials noisy copies of ``initial`` through the program.

    Per trial, three uniforms are drawn (in this order: Rabi multiplier,
    COM occupation, stretch cooling) and turned into a single coupling
    scale s = g * (1 - com_eta^2 * n_com) plus a possible one-quantum shift
    of the initial state.  Every pulse Hamiltonian is linear in the drive,
    so the trial propagator is the unit-scale eigensystem evaluated at the
    scaled duration.  Returns an (n_trials, 4 * n_max) array of final state
    vectors, renormalized after a norm-drift check.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    n_max = initial.n_max
    u = rng.random((n_trials, 3))

    if noise.rabi_noise_sigma > 0:
        g = 1.0 + noise.rabi_noise_sigma * ndtri(u[:, 0])
    else:
        g = np.ones(n_trials)
    if noise.com_nbar > 0:
        q = noise.com_nbar / (1.0 + noise.com_nbar)
        n_com = np.floor(np.log1p(-u[:, 1]) / np.log(q))
    else:
        n_com = np.zeros(n_trials)
    scale = np.maximum(g * (1.0 - noise.com_eta**2 * n_com), 0.0)

    states = np.tile(initial.vector, (n_trials, 1))
    hot = u[:, 2] >= noise.stretch_ground_prob
    if hot.any():
        states[hot] = raise_motional(initial)

    leak_cols = _leak_columns(n_max)
    for pulse in pulses:
        w, v = np.linalg.eigh(_pulse_hamiltonian(pulse, n_max))
        states = kernels.apply_phased_rotation(states, v, w, scale * pulse.duration)
        if pulse.kind == RED_SIDEBAND:
            leak = np.max(np.sum(np.abs(states[:, leak_cols]) ** 2, axis=1))
            if leak > LEAK_TOL:
                raise TruncationLeakError(
                    f"population {leak:.3e} stranded at the truncation edge; "
                    f"increase n_max (currently {n_max})"
                )

    norms = np.sum(np.abs(states) ** 2, axis=1)
    drift = np.max(np.abs(norms - 1.0))
    if drift > NORM_DRIFT_TOL:
        raise RuntimeError(f"norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL}")
    states /= np.sqrt(norms)[:, None]
    return states


def apply_sequence(
    initial: JointState,
    pulses: list[PulseSpec],
    noise: NoiseModel,
    trial_seed: int,
) -> JointState:
    """One noisy trial of the pulse program, deterministic in trial_seed."""
    vecs = run_trials(initial, pulses, noise, 1, rng_for(trial_seed, STREAM_TRIALS))
    return JointState.from_vector(vecs[0], initial.n_max)


def fluorescence_expectation(
    state: JointState | DensityOperator, alpha: float
) -> float:
    """Mean two-ion fluorescence signal in bright-ion units.

    S = 2 P_dd + (1 + alpha) P_du + (1 - alpha) P_ud, so both ions bright
    gives 2 and both dark gives 0; alpha is the differential detection
    efficiency (ion 1 brighter for alpha > 0).
    """
    if abs(alpha) > ALPHA_MAX:
        raise ValueError(f"|alpha| must be <= {ALPHA_MAX}")
    p = spin_populations(state)
    return float(2.0 * p[0] + (1.0 + alpha) * p[1] + (1.0 - alpha) * p[2])


def fluorescence_from_populations(populations: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorized signal for an (..., 4) array of spin populations."""
    p = np.asarray(populations, dtype=float)
    return 2.0 * p[..., 0] + (1.0 + alpha) * p[..., 1] + (1.0 - alpha) * p[..., 2]


def _signal_formula(t, Omega_1, Omega_2, gamma, alpha):
    return (
        1.0
        + 0.5 * (1.0 + alpha) * np.cos(2.0 * Omega_1 * t) * np.exp(-gamma * t)
        + 0.5 * (1.0 - alpha) * np.cos(2.0 * Omega_2 * t) * np.exp(-(Omega_2 / Omega_1) * gamma * t)
    )


def signal_model(t, Omega_1: float, Omega_2: float, gamma: float, alpha: float):
    """Two-tone damped fluorescence signal of the differentially driven pair.

    S(t) = 1 + (1+alpha)/2 cos(2 Omega_1 t) e^{-gamma t}
             + (1-alpha)/2 cos(2 Omega_2 t) e^{-(Omega_2/Omega_1) gamma t};
    the slower ion's envelope decays slower by the frequency ratio.  Written
    for Omega_1 >= Omega_2 (ion 1 the faster ion), though any positive pair
    evaluates, which lets fits explore freely.
    """
    if Omega_1 <= 0 or Omega_2 <= 0:
        raise ValueError("Rabi frequencies must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return _signal_formula(np.asarray(t, dtype=float), Omega_1, Omega_2, gamma, alpha)
