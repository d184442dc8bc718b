"""Truncated joint state space of two spin-1/2 ions and one harmonic mode.

The state carrier is a complex amplitude tensor indexed by
(spin of ion 1, spin of ion 2, stretch-mode Fock number), spins ordered
down=0, up=1.  Two-spin mixed states (motion traced out) are 4x4 density
operators in the basis (dd, du, ud, uu).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOWN, UP = 0, 1

#: Two-spin basis order used everywhere: index = 2*spin1 + spin2.
SPIN_LABELS = ("dd", "du", "ud", "uu")

DEFAULT_N_MAX = 4

NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True)
class BasisLabel:
    """One basis vector of the joint space: two spins and a Fock number."""

    spin1: int
    spin2: int
    n_stretch: int

    def __post_init__(self):
        if self.spin1 not in (DOWN, UP) or self.spin2 not in (DOWN, UP):
            raise ValueError("spins must be DOWN (0) or UP (1)")
        if self.n_stretch < 0:
            raise ValueError("Fock number must be nonnegative")

    @property
    def spin_index(self) -> int:
        return 2 * self.spin1 + self.spin2

    def __str__(self) -> str:
        return f"{SPIN_LABELS[self.spin_index]} n={self.n_stretch}"


def spin_pair(index: int) -> tuple[int, int]:
    """Inverse of ``BasisLabel.spin_index``."""
    return divmod(index, 2)


@dataclass
class JointState:
    """Normalized pure state; ``amps[s1, s2, n]`` with shape (2, 2, n_max)."""

    amps: np.ndarray
    n_max: int = field(init=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.ndim != 3 or self.amps.shape[:2] != (2, 2):
            raise ValueError("amplitudes must have shape (2, 2, n_max)")
        self.n_max = self.amps.shape[2]
        norm = np.sum(np.abs(self.amps) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_max: int) -> "JointState":
        return cls(np.asarray(vec, dtype=np.complex128).reshape(2, 2, n_max))

    @classmethod
    def basis(cls, spin1: int, spin2: int, n: int, n_max: int = DEFAULT_N_MAX) -> "JointState":
        amps = np.zeros((2, 2, n_max), dtype=np.complex128)
        amps[spin1, spin2, n] = 1.0
        return cls(amps)

    @property
    def vector(self) -> np.ndarray:
        """Flat amplitude vector, spin-major: index = (2*s1 + s2)*n_max + n."""
        return self.amps.reshape(-1)

    def copy(self) -> "JointState":
        return JointState(self.amps.copy())

    def amplitude(self, label: BasisLabel) -> complex:
        return complex(self.amps[label.spin1, label.spin2, label.n_stretch])

    def to_debug_text(self) -> str:
        """Plain-text dump, one line per basis state: label, n, re, im."""
        lines = []
        for s in range(4):
            s1, s2 = spin_pair(s)
            for n in range(self.n_max):
                a = self.amps[s1, s2, n]
                lines.append(f"{SPIN_LABELS[s]}\t{n}\t{a.real!r}\t{a.imag!r}")
        return "\n".join(lines) + "\n"


@dataclass
class DensityOperator:
    """4x4 two-spin density matrix in the (dd, du, ud, uu) basis."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (4, 4):
            raise ValueError("density operator must be 4x4")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density operator not Hermitian")
        if abs(np.trace(self.matrix).real - 1.0) > TRACE_TOL:
            raise ValueError("density operator trace != 1")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < EIGENVALUE_FLOOR:
            raise ValueError(f"density operator not positive (min eigenvalue {eigs.min():.3e})")

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()


def psi_e(phi: float, n_max: int = DEFAULT_N_MAX) -> JointState:
    """Entangled target state: 3/5 on du|0> and -e^{i phi} 4/5 on ud|0>."""
    amps = np.zeros((2, 2, n_max), dtype=np.complex128)
    amps[DOWN, UP, 0] = 3.0 / 5.0
    amps[UP, DOWN, 0] = -np.exp(1j * phi) * 4.0 / 5.0
    return JointState(amps)


def bell_state(sign: int, n_max: int = DEFAULT_N_MAX) -> JointState:
    """Bell state (|du> -+ |ud>)/sqrt(2) in the motional ground state.

    ``sign=-1`` gives the singlet (du - ud), ``sign=+1`` the triplet (du + ud).
    """
    if sign not in (-1, +1):
        raise ValueError("sign must be -1 (singlet) or +1 (triplet)")
    amps = np.zeros((2, 2, n_max), dtype=np.complex128)
    amps[DOWN, UP, 0] = 1.0 / np.sqrt(2.0)
    amps[UP, DOWN, 0] = sign / np.sqrt(2.0)
    return JointState(amps)


def overlap(a: JointState, b: JointState) -> complex:
    """Inner product <a|b>."""
    if a.n_max != b.n_max:
        raise ValueError("states live in different truncations")
    return complex(np.vdot(a.vector, b.vector))


def spin_populations(state: JointState | DensityOperator) -> np.ndarray:
    """Four probabilities (P_dd, P_du, P_ud, P_uu), motion traced out."""
    if isinstance(state, DensityOperator):
        return state.populations
    return np.sum(np.abs(state.amps) ** 2, axis=2).reshape(-1)


def spin_populations_from_vectors(vectors: np.ndarray, n_max: int) -> np.ndarray:
    """Batch version of :func:`spin_populations` for (n_trials, dim) vectors."""
    v = np.asarray(vectors, dtype=np.complex128)
    if v.ndim != 2 or v.shape[1] != 4 * n_max:
        raise ValueError("expected vectors of shape (n_trials, 4 * n_max)")
    return np.sum(np.abs(v.reshape(v.shape[0], 4, n_max)) ** 2, axis=2)


def two_spin_density(state: JointState) -> DensityOperator:
    """Reduced two-spin density matrix of a pure joint state."""
    m = state.amps.reshape(4, state.n_max)
    return DensityOperator(m @ m.conj().T)


def synthesize_rho(contrast: float, sign: int, target_populations) -> DensityOperator:
    """Mix a Bell projector with a diagonal remainder to hit given populations.

    Returns rho = C |B><B| + (1 - C) rho_m with rho_m diagonal, its diagonal
    the unique choice making diag(rho) equal ``target_populations`` exactly.
    """
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    targets = np.asarray(target_populations, dtype=float)
    if targets.shape != (4,):
        raise ValueError("need four target populations")
    if np.any(targets < 0) or abs(targets.sum() - 1.0) > 1e-9:
        raise ValueError("target populations must be nonnegative and sum to 1")
    bell_diag = np.array([0.0, 0.5, 0.5, 0.0]) * contrast
    if np.any(targets - bell_diag < -1e-12):
        raise ValueError("infeasible targets: P_du and P_ud must each be >= C/2")
    rho = np.zeros((4, 4), dtype=np.complex128)
    if contrast > 0.0:
        b = bell_state(sign).amps.reshape(4, -1)[:, 0]
        rho += contrast * np.outer(b, b.conj())
    residual = np.clip(targets - bell_diag, 0.0, None)
    rho[np.diag_indices(4)] += residual
    return DensityOperator(rho)


def state_fidelity(rho: DensityOperator, psi: JointState | np.ndarray) -> float:
    """<psi|rho|psi> for a pure two-spin state psi."""
    if isinstance(psi, JointState):
        vec = psi.amps.reshape(4, psi.n_max)
        if np.max(np.abs(vec[:, 1:])) > 1e-9:
            raise ValueError("fidelity target must live in the motional ground state")
        v = vec[:, 0]
    else:
        v = np.asarray(psi, dtype=np.complex128).reshape(4)
    f = np.real(np.vdot(v, rho.matrix @ v))
    return float(min(max(f, 0.0), 1.0))
