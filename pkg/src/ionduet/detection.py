"""Photon-count detection: trial sampling, histograms, readout analysis.

A detection window on the cycling transition yields a photon count per
trial.  A spin-down ion is bright; a spin-up ion is dark unless it depumps
into the bright manifold partway through the window.  Counts are Poisson
mixtures with a per-trial intensity multiplier for the observed
overdispersion.  State readout then works entirely on count histograms:
constrained least squares against four reference histograms for
populations, and two integer thresholds for single-shot case
classification.

All per-trial randomness is drawn here as a fixed-width block of uniforms
(one row of eight per trial) and converted to counts by the kernel's CDF
inversion, which keeps every backend bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy.special import ndtri

from . import kernels
from .hilbert import SPIN_LABELS
from .seeding import STREAM_CALIBRATION, STREAM_DETECTION, rng_for

#: Counts above the cap accumulate in the top histogram bin.
BIN_CAP = 60

ALPHA_MAX = 0.2

#: Fixed per-trial uniform layout; changing it changes every sampled count.
UNIFORMS_PER_TRIAL = 8
_U_G, _U_BG, _U1_EVENT, _U1_TIME, _U1_COUNT, _U2_EVENT, _U2_TIME, _U2_COUNT = range(
    UNIFORMS_PER_TRIAL
)


class CalibrationError(RuntimeError):
    """A calibration target could not be reached in the search range."""


@dataclass(frozen=True)
class DetectionModel:
    """Detection-window parameters.

    bright_rate_per_ion is the mean number of detected photons one bright
    ion contributes per window (the window length is already folded in);
    background_rate is in photons per second.  depump_time_constant is the
    effective exponential time for a dark ion to leak into the bright
    manifold, shelving pulses included.  dark_leak_prob is the chance a
    bright ion goes dark at a uniformly random point in the window.
    """

    tau_d: float = 500e-6
    bright_rate_per_ion: float = 12.5
    background_rate: float = 300.0
    depump_time_constant: float = 7.2e-3
    dark_leak_prob: float = 0.02
    intensity_sigma: float = 0.25
    alpha: float = -0.05

    def __post_init__(self):
        if self.tau_d <= 0:
            raise ValueError("tau_d must be positive")
        if self.bright_rate_per_ion < 0 or self.background_rate < 0:
            raise ValueError("rates must be nonnegative")
        if self.depump_time_constant <= 0:
            raise ValueError("depump_time_constant must be positive")
        if not 0.0 <= self.dark_leak_prob <= 1.0:
            raise ValueError("dark_leak_prob must lie in [0, 1]")
        if self.intensity_sigma < 0:
            raise ValueError("intensity_sigma must be nonnegative")
        if abs(self.alpha) > ALPHA_MAX:
            raise ValueError(f"|alpha| must be <= {ALPHA_MAX}")


@dataclass
class Histogram:
    """Occurrence counts per photon number, 0 through a cap (inclusive)."""

    counts: np.ndarray
    trials_N: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1 or self.counts.size < 2:
            raise ValueError("counts must be a 1-d array with at least two bins")
        if self.counts.min() < 0:
            raise ValueError("occurrence counts must be nonnegative")
        if int(self.counts.sum()) != self.trials_N:
            raise ValueError("counts must sum to trials_N")

    @property
    def cap(self) -> int:
        return self.counts.size - 1

    @classmethod
    def from_samples(cls, samples: np.ndarray, cap: int = BIN_CAP) -> "Histogram":
        samples = np.asarray(samples)
        counts = np.bincount(np.clip(samples, 0, cap), minlength=cap + 1)
        return cls(counts, int(samples.size))

    def merge(self, other: "Histogram") -> "Histogram":
        if self.cap != other.cap:
            raise ValueError("histograms have different caps")
        return Histogram(self.counts + other.counts, self.trials_N + other.trials_N)

    def distribution(self) -> np.ndarray:
        if self.trials_N == 0:
            raise ValueError("empty histogram has no distribution")
        return self.counts / self.trials_N


@dataclass(frozen=True)
class PopulationEstimate:
    """Simplex-constrained least-squares weights for the four basis states."""

    weights: np.ndarray
    residual: float
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (4,):
            raise ValueError("weights must have shape (4,)")
        if w.min() < -1e-12 or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class CaseThresholds:
    """Cut points: case 1 is m <= t1, case 2 is t1 < m < t2, case 3 is m >= t2."""

    t1: int
    t2: int

    def __post_init__(self):
        if not 0 <= self.t1 < self.t2:
            raise ValueError("need 0 <= t1 < t2")


def _label_index(label) -> int:
    if isinstance(label, str):
        return SPIN_LABELS.index(label)
    idx = int(label)
    if not 0 <= idx <= 3:
        raise ValueError(f"label index out of range: {label!r}")
    return idx


def _counts_from_uniforms(
    label_idx: np.ndarray, model: DetectionModel, u: np.ndarray
) -> np.ndarray:
    """Map one uniform block (n, 8) to photon counts for given spin labels."""
    n = label_idx.size
    if model.intensity_sigma > 0:
        g = np.maximum(1.0 + model.intensity_sigma * ndtri(u[:, _U_G]), 0.0)
    else:
        g = np.ones(n)

    lams = np.empty((n, 3))
    lams[:, 0] = model.background_rate * model.tau_d

    ion_columns = (
        (label_idx >> 1, _U1_EVENT, _U1_TIME, 1.0 + model.alpha),
        (label_idx & 1, _U2_EVENT, _U2_TIME, 1.0 - model.alpha),
    )
    for k, (spin, ev_col, time_col, efficiency) in enumerate(ion_columns):
        frac = np.ones(n)
        bright = spin == 0
        leaked = bright & (u[:, ev_col] < model.dark_leak_prob)
        frac[leaked] = u[leaked, time_col]
        dark = ~bright
        depump_at = -model.depump_time_constant * np.log1p(-u[dark, time_col])
        frac[dark] = np.clip(1.0 - depump_at / model.tau_d, 0.0, 1.0)
        lams[:, 1 + k] = efficiency * model.bright_rate_per_ion * g * frac

    u_counts = u[:, [_U_BG, _U1_COUNT, _U2_COUNT]]
    return kernels.poisson_mixture_counts(u_counts, lams, np.exp(-lams))


def sample_counts(
    label_idx: np.ndarray, model: DetectionModel, rng: np.random.Generator
) -> np.ndarray:
    """Photon counts for an array of spin labels (indices into SPIN_LABELS)."""
    label_idx = np.asarray(label_idx, dtype=np.int64)
    u = rng.random((label_idx.size, UNIFORMS_PER_TRIAL))
    return _counts_from_uniforms(label_idx, model, u)


def sample_photon_count(label, model: DetectionModel, seed: int) -> int:
    """One detection-window count for a known two-spin basis state."""
    idx = np.array([_label_index(label)], dtype=np.int64)
    return int(sample_counts(idx, model, rng_for(seed, STREAM_DETECTION))[0])


def build_reference_histograms(
    model: DetectionModel, trials_N: int, seed: int, cap: int = BIN_CAP
) -> tuple[Histogram, Histogram, Histogram, Histogram]:
    """One histogram per basis state, in SPIN_LABELS order (dd, du, ud, uu)."""
    if trials_N < 1:
        raise ValueError("trials_N must be >= 1")
    out = []
    for k in range(4):
        rng = rng_for(seed, STREAM_DETECTION, k)
        labels = np.full(trials_N, k, dtype=np.int64)
        out.append(Histogram.from_samples(sample_counts(labels, model, rng), cap))
    return tuple(out)


def dark_pair_tail(
    model: DetectionModel, trials: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo estimate of P(m > 2) for both ions dark."""
    labels = np.full(trials, 3, dtype=np.int64)
    return float(np.mean(sample_counts(labels, model, rng) > 2))


def calibrate_depump(
    model: DetectionModel,
    target_tail: float,
    seed: int = 1,
    trials: int = 200_000,
    tol: float = 0.002,
) -> DetectionModel:
    """Pick depump_time_constant so P(m > 2 | both dark) hits target_tail.

    The tail is monotone in the time constant (slower depumping means fewer
    spurious bright windows), so a bisection on a fixed block of uniforms
    converges; the same uniforms are reused at every probe to keep the
    objective a deterministic function of the time constant.
    """
    if not 0.0 < target_tail < 0.5:
        raise ValueError("target_tail must lie in (0, 0.5)")
    rng = rng_for(seed, STREAM_CALIBRATION)
    u = rng.random((trials, UNIFORMS_PER_TRIAL))
    labels = np.full(trials, 3, dtype=np.int64)

    def tail(tau: float) -> float:
        probe = replace(model, depump_time_constant=tau)
        return float(np.mean(_counts_from_uniforms(labels, probe, u) > 2))

    lo, hi = model.tau_d * 1e-3, model.tau_d * 1e5
    if tail(lo) < target_tail or tail(hi) > target_tail:
        raise CalibrationError(
            f"target tail {target_tail} outside the reachable range "
            f"[{tail(hi):.4f}, {tail(lo):.4f}]"
        )
    best_tau, best_err = lo, abs(tail(lo) - target_tail)
    for _ in range(60):
        mid = np.sqrt(lo * hi)  # bisect in log space; the scale is unknown a priori
        t_mid = tail(mid)
        err = abs(t_mid - target_tail)
        if err < best_err:
            best_tau, best_err = mid, err
        if t_mid > target_tail:
            lo = mid
        else:
            hi = mid
    if best_err > tol:
        raise CalibrationError(
            f"depump calibration stalled {best_err:.4f} away from target"
        )
    return replace(model, depump_time_constant=float(best_tau))


def estimate_populations(
    observed: Histogram, refs: tuple[Histogram, Histogram, Histogram, Histogram]
) -> PopulationEstimate:
    """Least-squares weights on the probability simplex.

    Minimizes ||h - R w||^2 over w >= 0, sum w = 1 by solving the
    equality-constrained problem on every candidate support (15 subsets of
    four) and keeping the best feasible solution; the optimum's support is
    one of them, so this is exact, and at this size exhaustion is cheaper
    than bookkeeping an active-set iteration.
    """
    if len(refs) != 4:
        raise ValueError("need exactly four reference histograms")
    if any(r.cap != observed.cap for r in refs):
        raise ValueError("histograms have different caps")
    R = np.column_stack([r.distribution() for r in refs])
    h = observed.distribution()
    degenerate = np.linalg.matrix_rank(R) < 4

    best_w, best_res = None, np.inf
    for size in range(1, 5):
        for support in combinations(range(4), size):
            A = R[:, support]
            m = np.zeros((size + 1, size + 1))
            m[:size, :size] = 2.0 * A.T @ A
            m[:size, size] = 1.0
            m[size, :size] = 1.0
            rhs = np.concatenate([2.0 * A.T @ h, [1.0]])
            sol, *_ = np.linalg.lstsq(m, rhs, rcond=None)
            w_s = sol[:size]
            if w_s.min() < -1e-9:
                continue
            w = np.zeros(4)
            w[list(support)] = np.clip(w_s, 0.0, None)
            w /= w.sum()
            res = float(np.linalg.norm(h - R @ w))
            if res < best_res:
                best_w, best_res = w, res
    return PopulationEstimate(best_w, best_res, degenerate)


def classify_case(m: int, th: CaseThresholds) -> int:
    """Single-shot case: 1 (both dark), 2 (one bright), 3 (both bright)."""
    if m < 0:
        raise ValueError("photon count must be nonnegative")
    if m <= th.t1:
        return 1
    if m < th.t2:
        return 2
    return 3


def optimize_thresholds(
    refs: tuple[Histogram, Histogram, Histogram, Histogram],
    priors: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
) -> tuple[CaseThresholds, float]:
    """Exhaustive (t1, t2) scan maximizing the prior-weighted accuracy.

    Case likelihoods: case 1 is the dark-pair reference, case 2 averages
    the two one-bright references, case 3 is the bright-pair reference.
    Ties go to the lexicographically smallest (t1, t2).
    """
    p = np.asarray(priors, dtype=float)
    if p.shape != (3,) or p.min() < 0 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("priors must be three nonnegative numbers summing to 1")
    F1 = np.cumsum(refs[3].distribution())
    F2 = np.cumsum(0.5 * (refs[1].distribution() + refs[2].distribution()))
    F3 = np.cumsum(refs[0].distribution())
    cap = refs[0].cap

    best = (-1.0, None)
    for t1 in range(cap + 1):
        for t2 in range(t1 + 1, cap + 2):
            acc = (
                p[0] * F1[t1]
                + p[1] * (F2[t2 - 1] - F2[t1])
                + p[2] * (1.0 - F3[t2 - 1])
            )
            if acc > best[0]:
                best = (acc, CaseThresholds(t1, t2))
    return best[1], float(best[0])


def threshold_accuracy(
    refs: tuple[Histogram, Histogram, Histogram, Histogram],
    th: CaseThresholds,
    priors: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
) -> float:
    """Prior-weighted classification accuracy of fixed thresholds."""
    p = np.asarray(priors, dtype=float)
    F1 = np.cumsum(refs[3].distribution())
    F2 = np.cumsum(0.5 * (refs[1].distribution() + refs[2].distribution()))
    F3 = np.cumsum(refs[0].distribution())
    cap = refs[0].cap
    t1, t2 = th.t1, min(th.t2, cap + 1)
    t1 = min(t1, cap)
    return float(
        p[0] * F1[t1] + p[1] * (F2[t2 - 1] - F2[t1]) + p[2] * (1.0 - F3[t2 - 1])
    )
