"""Scripted experiments: scans, fits, and the fidelity analysis.

Each experiment is a pure function of its configuration and seed.  Scan
points derive child seeds from (base seed, point index), so a scan is
reproducible point-by-point and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import curve_fit

from .detection import (
    CalibrationError,
    DetectionModel,
    Histogram,
    build_reference_histograms,
    estimate_populations,
    sample_counts,
)
from .dynamics import (
    CO_CARRIER,
    RED_SIDEBAND,
    X_CARRIER,
    NoiseModel,
    PulseSpec,
    apply_sequence,
    fluorescence_from_populations,
    run_trials,
    signal_model,
)
from .hilbert import (
    DEFAULT_N_MAX,
    DOWN,
    SPIN_LABELS,
    DensityOperator,
    JointState,
    spin_populations_from_vectors,
)
from .seeding import STREAM_DETECTION, STREAM_TRIALS, point_seed, rng_for
from .trap import AddressingProfile

#: Relative slack on the Omega_1/Omega_2 = 2 requirement of the 2pi:pi pulse.
RATIO_TOL = 1e-6


class FitError(RuntimeError):
    """A least-squares fit failed to converge; the message carries context."""


@dataclass(frozen=True)
class FitResult:
    """Fitted parameter values and one-sigma uncertainties, by name."""

    params: dict[str, float]
    errors: dict[str, float]


@dataclass
class ScanResult:
    """One scan: abscissa, per-point estimates, per-point trials, fit, seed.

    Rabi scans fill ``signal``/``signal_err``; rotation scans fill
    ``p_mixed`` (P_du + P_ud) and ``p_pure`` (P_dd + P_uu).
    """

    kind: str
    abscissa: np.ndarray
    n_trials: np.ndarray
    seed: int
    signal: np.ndarray | None = None
    signal_err: np.ndarray | None = None
    p_mixed: np.ndarray | None = None
    p_pure: np.ndarray | None = None
    fit: FitResult | None = None

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.n_trials = np.broadcast_to(
            np.asarray(self.n_trials, dtype=np.int64), self.abscissa.shape
        ).copy()
        if self.p_mixed is not None:
            gap = np.max(np.abs(self.p_mixed + self.p_pure - 1.0))
            if gap > 1e-6:
                raise ValueError(f"probability pairs sum to 1 +/- {gap:.2e}")


def ground_state(n_max: int = DEFAULT_N_MAX) -> JointState:
    """Both spins down, stretch mode in the ground state."""
    return JointState.basis(DOWN, DOWN, 0, n_max)


def _flip_ion2_program(profile: AddressingProfile) -> list[PulseSpec]:
    """x-carrier program flipping ion 2 exactly while ion 1 completes full cycles.

    At ratio 2 this is the single 2pi:pi pulse.  Away from ratio 2 no single
    pulse works, but three pulses of duration pi/Omega_1 (each a 2pi cycle on
    ion 1) with drive phases (0, psi, 0) do: writing K = cot^2(pi/ratio) for
    ion 2's per-pulse half-angle pi/ratio, the middle phase cos(psi) =
    (K - 1)/2 zeroes the survival amplitude of |down> exactly.  That phase
    exists only while K <= 3, i.e. for ratios in [6/5, 6].
    """
    t = math.pi / profile.Omega_1
    ratio = profile.ratio
    if abs(ratio / 2.0 - 1.0) <= RATIO_TOL:
        return [PulseSpec(X_CARRIER, t, profile)]
    half = math.pi / ratio
    k = (math.cos(half) / math.sin(half)) ** 2
    cos_psi = (k - 1.0) / 2.0
    if abs(cos_psi) > 1.0:
        raise ValueError(
            f"no exact ion-2 flip program at addressing ratio {ratio!r}; "
            "the composite exists only for ratios in [1.2, 6]"
        )
    psi = math.acos(cos_psi)
    return [
        PulseSpec(X_CARRIER, t, profile, drive_phase=phase)
        for phase in (0.0, psi, 0.0)
    ]


def prepare_basis(label, profile: AddressingProfile) -> list[PulseSpec]:
    """Pulse program taking dd|0> to the labeled two-spin basis state.

    du uses the differential carrier (the 2pi:pi pulse at addressing ratio 2,
    or the exact composite at other ratios); ud follows it with a
    co-propagating pi:pi; uu is the pi:pi alone.
    """
    idx = SPIN_LABELS.index(label) if isinstance(label, str) else int(label)
    if not 0 <= idx <= 3:
        raise ValueError(f"unknown basis label {label!r}")
    if idx == 0:
        return []
    co_pulse = PulseSpec(CO_CARRIER, math.pi / (2.0 * profile.Omega_c), profile)
    if idx == 3:
        return [co_pulse]
    flip = _flip_ion2_program(profile)
    if idx == 1:
        return flip
    return flip + [co_pulse]


def entangle_program(
    phi: float, profile: AddressingProfile, eta_prime: float
) -> list[PulseSpec]:
    """Differential-carrier flip of ion 2, then a red-sideband pulse of pi/G."""
    G = eta_prime * math.hypot(profile.Omega_1, profile.Omega_2)
    rsb = PulseSpec(
        RED_SIDEBAND,
        math.pi / G,
        profile,
        entangle_phase_phi=phi,
        eta_prime=eta_prime,
    )
    return prepare_basis("du", profile) + [rsb]


def entangle(
    phi: float,
    profile: AddressingProfile,
    eta_prime: float,
    noise: NoiseModel,
    seed: int,
    trials: int | None = None,
    n_max: int = DEFAULT_N_MAX,
):
    """Run the entangling sequence from dd|0>.

    With ``trials=None`` returns the single-trial JointState (noise channels
    still sampled once from the seed; with the default no-noise model this
    is the deterministic state).  With an integer returns an
    (trials, 4 * n_max) ensemble of final state vectors.
    """
    program = entangle_program(phi, profile, eta_prime)
    if trials is None:
        return apply_sequence(ground_state(n_max), program, noise, seed)
    return run_trials(
        ground_state(n_max), program, noise, trials, rng_for(seed, STREAM_TRIALS)
    )


def _fit_curve(f, x, y, p0, sigma, bounds, names) -> FitResult:
    try:
        popt, pcov = curve_fit(
            f, x, y, p0=p0, sigma=sigma, bounds=bounds, maxfev=20000
        )
    except (RuntimeError, ValueError) as err:
        raise FitError(f"fit failed with p0={p0}: {err}") from err
    perr = np.sqrt(np.diag(pcov))
    return FitResult(
        params={k: float(v) for k, v in zip(names, popt)},
        errors={k: float(e) for k, e in zip(names, perr)},
    )


def rabi_scan(
    profile: AddressingProfile,
    noise: NoiseModel,
    t_grid: np.ndarray,
    trials_per_point: int,
    seed: int,
    n_max: int = DEFAULT_N_MAX,
) -> ScanResult:
    """Drive the x-carrier for each duration in t_grid and fit the signal.

    Each point runs ``trials_per_point`` noisy trials from dd|0> and
    averages the fluorescence expectation of the final states; the decaying
    two-tone model is then fitted with per-point standard errors as
    weights.
    """
    if not profile.Omega_1 > profile.Omega_2 > 0:
        raise ValueError("need Omega_1 > Omega_2 > 0")
    t_grid = np.asarray(t_grid, dtype=float)
    start = ground_state(n_max)
    means = np.empty(t_grid.size)
    sems = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        rng = rng_for(point_seed(seed, i), STREAM_TRIALS)
        pulse = PulseSpec(X_CARRIER, float(t), profile)
        vecs = run_trials(start, [pulse], noise, trials_per_point, rng)
        sig = fluorescence_from_populations(
            spin_populations_from_vectors(vecs, n_max), noise.alpha
        )
        means[i] = sig.mean()
        if trials_per_point > 1:
            sems[i] = sig.std(ddof=1) / math.sqrt(trials_per_point)
        else:
            sems[i] = 1.0

    p0 = [profile.Omega_1, profile.Omega_2, noise.gamma, 0.0]
    gamma_hi = max(10.0 * noise.gamma, 1e6)
    bounds = (
        [0.5 * profile.Omega_1, 0.5 * profile.Omega_2, 0.0, -0.2],
        [2.0 * profile.Omega_1, 2.0 * profile.Omega_2, gamma_hi, 0.2],
    )
    fit = _fit_curve(
        signal_model,
        t_grid,
        means,
        p0,
        np.maximum(sems, 1e-6),
        bounds,
        ("Omega_1", "Omega_2", "gamma", "alpha"),
    )
    return ScanResult(
        kind="rabi",
        abscissa=t_grid,
        n_trials=trials_per_point,
        seed=seed,
        signal=means,
        signal_err=sems,
        fit=fit,
    )


def _equal_rotation(theta: float) -> np.ndarray:
    """4x4 two-spin propagator of the same carrier rotation on both ions."""
    a = theta / 2.0
    u = np.array(
        [[math.cos(a), -1j * math.sin(a)], [-1j * math.sin(a), math.cos(a)]],
        dtype=np.complex128,
    )
    return np.kron(u, u)


def _rotation_model(theta, a, b, delta):
    return a + b * np.cos(2.0 * theta + delta)


def _fit_rotation(theta_grid: np.ndarray, p_mixed: np.ndarray) -> FitResult:
    a0 = float(np.mean(p_mixed))
    b0 = float(0.5 * (np.max(p_mixed) - np.min(p_mixed)))
    best = None
    for delta0 in (0.0, math.pi / 2, math.pi, -math.pi / 2):
        try:
            fit = _fit_curve(
                _rotation_model,
                theta_grid,
                p_mixed,
                [a0, max(b0, 1e-6), delta0],
                None,
                ([-0.5, -1.0, -2 * math.pi], [1.5, 1.0, 2 * math.pi]),
                ("a", "b", "delta"),
            )
        except FitError:
            continue
        resid = float(
            np.sum((p_mixed - _rotation_model(theta_grid, *fit.params.values())) ** 2)
        )
        if best is None or resid < best[0]:
            best = (resid, fit)
    if best is None:
        raise FitError("rotation fit failed for every starting phase")
    fit = best[1]
    params = dict(fit.params)
    errors = dict(fit.errors)
    params["contrast"] = 2.0 * abs(params["b"])
    errors["contrast"] = 2.0 * errors["b"]
    return FitResult(params=params, errors=errors)


def rotation_scan(
    state,
    theta_grid: np.ndarray,
    trials_per_point: int | None,
    model: DetectionModel | None,
    seed: int,
    refs: tuple[Histogram, Histogram, Histogram, Histogram] | None = None,
    ref_trials: int = 10_000,
) -> ScanResult:
    """Equal-angle rotation of both spins, then readout, over theta_grid.

    ``state`` is either a two-spin DensityOperator or an ensemble of joint
    state vectors (one row per trial).  With ``model=None`` detection is
    bypassed and exact populations are recorded; otherwise each point
    samples photon counts and estimates populations against reference
    histograms (built here from the seed unless supplied).  The recorded
    pair per point is p_mixed = P_du + P_ud and p_pure = 1 - p_mixed, and
    p_mixed is fitted with a + b cos(2 theta + delta).
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    ensemble = None
    if isinstance(state, np.ndarray):
        ensemble = np.asarray(state, dtype=np.complex128)
        if ensemble.ndim != 2 or ensemble.shape[1] % 4:
            raise ValueError("ensemble must be (n_trials, 4 * n_max)")
        if trials_per_point is None:
            trials_per_point = ensemble.shape[0]
        if trials_per_point > ensemble.shape[0]:
            raise ValueError("trials_per_point exceeds the ensemble size")
        ensemble = ensemble[:trials_per_point]
        n_max = ensemble.shape[1] // 4
    elif isinstance(state, DensityOperator):
        if model is not None and trials_per_point is None:
            raise ValueError("trials_per_point is required when detecting")
    else:
        raise TypeError("state must be a DensityOperator or an ensemble array")

    if model is not None and refs is None:
        refs = build_reference_histograms(model, ref_trials, seed)

    p_mixed = np.empty(theta_grid.size)
    n_trials = np.empty(theta_grid.size, dtype=np.int64)
    for i, theta in enumerate(theta_grid):
        u4 = _equal_rotation(float(theta))
        if ensemble is None:
            rho = u4 @ state.matrix @ u4.conj().T
            pops = np.clip(np.real(np.diag(rho)), 0.0, None)
            pops /= pops.sum()
            if model is None:
                p_mixed[i] = pops[1] + pops[2]
                n_trials[i] = 0
                continue
            rng = rng_for(point_seed(seed, i), STREAM_DETECTION)
            labels = rng.choice(4, size=trials_per_point, p=pops)
        else:
            rotated = ensemble @ np.kron(u4, np.eye(n_max)).T
            pops_t = spin_populations_from_vectors(rotated, n_max)
            if model is None:
                p_mixed[i] = float(np.mean(pops_t[:, 1] + pops_t[:, 2]))
                n_trials[i] = pops_t.shape[0]
                continue
            rng = rng_for(point_seed(seed, i), STREAM_DETECTION)
            draws = rng.random(pops_t.shape[0])
            edges = np.cumsum(pops_t, axis=1)
            labels = np.minimum(
                (draws[:, None] > edges).sum(axis=1), 3
            ).astype(np.int64)
        counts = sample_counts(labels, model, rng)
        observed = Histogram.from_samples(counts, refs[0].cap)
        est = estimate_populations(observed, refs)
        p_mixed[i] = est.weights[1] + est.weights[2]
        n_trials[i] = labels.size

    return ScanResult(
        kind="rotation",
        abscissa=theta_grid,
        n_trials=n_trials,
        seed=seed,
        p_mixed=p_mixed,
        p_pure=1.0 - p_mixed,
        fit=_fit_rotation(theta_grid, p_mixed),
    )


def fidelity_report(populations, contrast: float, sign: int = -1) -> float:
    """Bell-state fidelity (P_du + P_ud + C) / 2.

    ``populations`` is either the four basis populations or just the
    (P_du, P_ud) pair; ``sign`` names which Bell state the contrast was
    measured against and is recorded by callers, the formula being the
    same for both.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    p = np.asarray(populations, dtype=float)
    if p.shape == (4,):
        mixed = p[1] + p[2]
    elif p.shape == (2,):
        mixed = p[0] + p[1]
    else:
        raise ValueError("populations must have length 2 or 4")
    if mixed < 0 or mixed > 1 + 1e-9:
        raise ValueError("populations must be probabilities")
    return float((mixed + contrast) / 2.0)


def calibrate_gamma(
    noise: NoiseModel,
    profile: AddressingProfile,
    target_gamma: float,
    seed: int = 1,
    t_max: float = 10e-6,
    points: int = 61,
    trials_per_point: int = 400,
    rel_tol: float = 0.05,
    max_iter: int = 12,
) -> NoiseModel:
    """Pick rabi_noise_sigma so the fitted decay rate hits target_gamma.

    Runs the Rabi scan at trial noise levels and secant-iterates on the
    fitted gamma, reusing one seed throughout so the objective is smooth in
    sigma.  The COM channel sets a decay floor; targets below it fail.
    """
    if target_gamma < 0:
        raise ValueError("target_gamma must be nonnegative")
    if target_gamma == 0:
        return replace(noise, gamma=0.0, rabi_noise_sigma=0.0)
    t_grid = np.linspace(0.0, t_max, points)

    def fitted(sigma: float) -> float:
        probe = replace(noise, rabi_noise_sigma=sigma, gamma=target_gamma)
        res = rabi_scan(profile, probe, t_grid, trials_per_point, seed)
        return res.fit.params["gamma"]

    floor = fitted(0.0)
    if floor >= target_gamma:
        if floor <= target_gamma * (1 + rel_tol):
            return replace(noise, gamma=target_gamma, rabi_noise_sigma=0.0)
        raise CalibrationError(
            f"decay floor {floor:.3e} rad/s from the COM channel exceeds "
            f"target {target_gamma:.3e}"
        )

    sigma_prev, f_prev = 0.0, floor - target_gamma
    sigma = math.sqrt(target_gamma / (2.0 * profile.Omega_1**2 * (t_max / 2.0)))
    for _ in range(max_iter):
        f = fitted(sigma) - target_gamma
        if abs(f) <= rel_tol * target_gamma:
            return replace(noise, gamma=target_gamma, rabi_noise_sigma=sigma)
        if f == f_prev:
            break
        step = f * (sigma - sigma_prev) / (f - f_prev)
        sigma_prev, f_prev = sigma, f
        sigma = max(sigma - step, 0.1 * sigma)
    raise CalibrationError(
        f"gamma calibration did not reach {target_gamma:.3e} rad/s within "
        f"{rel_tol:.0%}"
    )
