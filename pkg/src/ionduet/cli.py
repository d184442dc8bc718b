"""Command-line front end: load a config, run one experiment, write files.

Batch-only by design; every run is a pure function of (config file, seed)
and the emitted files embed both, so runs are diffable and repeatable.
Exit codes: 0 success, 1 experiment failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .datafiles import (
    read_histogram,
    scan_sidecar,
    write_histogram,
    write_json_report,
    write_scan_csv,
)
from .detection import (
    BIN_CAP,
    CalibrationError,
    CaseThresholds,
    Histogram,
    build_reference_histograms,
    calibrate_depump,
    classify_case,
    dark_pair_tail,
    estimate_populations,
    optimize_thresholds,
    sample_counts,
    threshold_accuracy,
)
from .dynamics import TruncationLeakError
from .experiments import (
    FitError,
    calibrate_gamma,
    entangle,
    fidelity_report,
    rabi_scan,
    rotation_scan,
)
from .hilbert import (
    SPIN_LABELS,
    bell_state,
    overlap,
    spin_populations,
    spin_populations_from_vectors,
    state_fidelity,
    synthesize_rho,
)
from .seeding import STREAM_CALIBRATION, STREAM_DETECTION, point_seed, rng_for

TWO_PI = 2.0 * math.pi


def _provenance(cfg: RunConfig) -> dict:
    return {"config_sha256": cfg.config_sha256, "seed": cfg.seed}


def _out_prefix(cfg: RunConfig) -> str:
    prefix = cfg.out if cfg.out else f"ionduet_{cfg.experiment}"
    parent = Path(prefix).parent
    if parent != Path(""):
        parent.mkdir(parents=True, exist_ok=True)
    return prefix


def _khz(omega: float) -> float:
    return omega / TWO_PI / 1e3


def cmd_simulate_rabi(cfg: RunConfig) -> None:
    p = cfg.params
    noise = cfg.noise
    if p["calibrate"] and noise.gamma > 0:
        noise = calibrate_gamma(noise, cfg.profile, noise.gamma, seed=cfg.seed)
    grid = np.linspace(0.0, p["t_max"], p["points"])
    scan = rabi_scan(cfg.profile, noise, grid, p["trials"], cfg.seed)
    prefix = _out_prefix(cfg)
    write_scan_csv(f"{prefix}_rabi.csv", scan, _provenance(cfg))
    sidecar = scan_sidecar(scan, _provenance(cfg))
    sidecar["rabi_noise_sigma"] = noise.rabi_noise_sigma
    write_json_report(f"{prefix}_rabi.json", sidecar)
    fp = scan.fit.params
    print(
        f"rabi fit: Omega_1/2pi = {_khz(fp['Omega_1']):.1f} kHz, "
        f"Omega_2/2pi = {_khz(fp['Omega_2']):.1f} kHz, "
        f"gamma/2pi = {_khz(fp['gamma']):.2f} kHz, alpha = {fp['alpha']:.3f}"
    )


def cmd_simulate_entangle(cfg: RunConfig) -> None:
    p = cfg.params
    prefix = _out_prefix(cfg)
    result = entangle(
        p["phi"], cfg.profile, cfg.eta_prime, cfg.noise, cfg.seed, p["trials"]
    )
    if p["trials"] is None:
        state = result
        ov_singlet = abs(overlap(bell_state(-1, state.n_max), state)) ** 2
        ov_triplet = abs(overlap(bell_state(+1, state.n_max), state)) ** 2
        payload = {
            "phi": p["phi"],
            "overlap_sq_singlet": ov_singlet,
            "overlap_sq_triplet": ov_triplet,
            "populations": spin_populations(state),
            "provenance": _provenance(cfg),
        }
        write_json_report(f"{prefix}_entangle.json", payload)
        header = "\n".join(
            f"# {k}={v}" for k, v in sorted(_provenance(cfg).items())
        )
        Path(f"{prefix}_state.txt").write_text(header + "\n" + state.to_debug_text())
        best = max(ov_singlet, ov_triplet)
        which = "singlet" if ov_singlet >= ov_triplet else "triplet"
        print(f"entangle: overlap^2 with Bell ({which}) = {best:.3f} at phi = {p['phi']:.3f}")
    else:
        pops = spin_populations_from_vectors(result, result.shape[1] // 4).mean(axis=0)
        payload = {
            "phi": p["phi"],
            "trials": p["trials"],
            "mean_populations": pops,
            "provenance": _provenance(cfg),
        }
        write_json_report(f"{prefix}_entangle.json", payload)
        labels = ", ".join(f"{k}={v:.3f}" for k, v in zip(SPIN_LABELS, pops))
        print(f"entangle ensemble ({p['trials']} trials): {labels}")


def cmd_simulate_rotate(cfg: RunConfig) -> None:
    p = cfg.params
    model = cfg.detection if p["detection"] else None
    grid = np.linspace(0.0, p["theta_max"], p["theta_points"])
    if p["input"] == "synthesized":
        state = synthesize_rho(p["contrast"], p["sign"], p["populations"])
        scan = rotation_scan(state, grid, p["trials"], model, cfg.seed)
    else:
        ensemble = entangle(
            p["phi"], cfg.profile, cfg.eta_prime, cfg.noise, cfg.seed, p["trials"]
        )
        scan = rotation_scan(ensemble, grid, None, model, cfg.seed)
    prefix = _out_prefix(cfg)
    write_scan_csv(f"{prefix}_rotate.csv", scan, _provenance(cfg))
    write_json_report(f"{prefix}_rotate.json", scan_sidecar(scan, _provenance(cfg)))
    fp = scan.fit.params
    print(
        f"rotation scan: contrast = {fp['contrast']:.3f}, "
        f"mean level = {fp['a']:.3f}"
    )


def _calibrated_model(cfg: RunConfig):
    p = cfg.params
    if p["calibrate"]:
        return calibrate_depump(cfg.detection, p["target_tail"], seed=cfg.seed)
    return cfg.detection


def _ref_paths(prefix: str) -> list[str]:
    return [f"{prefix}_ref_{label}.hist" for label in SPIN_LABELS]


def cmd_detect_calibrate(cfg: RunConfig) -> None:
    p = cfg.params
    model = _calibrated_model(cfg)
    refs = build_reference_histograms(model, p["trials"], cfg.seed)
    tail = dark_pair_tail(model, 100_000, rng_for(cfg.seed, STREAM_CALIBRATION, 99))
    thresholds, accuracy = optimize_thresholds(refs)
    prefix = _out_prefix(cfg)
    tau_d_us = model.tau_d * 1e6
    for path, hist in zip(_ref_paths(prefix), refs):
        write_histogram(path, hist, tau_d_us, _provenance(cfg))
    payload = {
        "depump_time_constant_ms": model.depump_time_constant * 1e3,
        "dark_pair_tail": tail,
        "thresholds": [thresholds.t1, thresholds.t2],
        "accuracy": accuracy,
        "trials": p["trials"],
        "provenance": _provenance(cfg),
    }
    write_json_report(f"{prefix}_calibration.json", payload)
    print(
        f"references written: tail = {tail:.3f}, thresholds = "
        f"({thresholds.t1}, {thresholds.t2}), accuracy = {accuracy:.3f}"
    )


def _load_refs(cfg: RunConfig, model) -> tuple:
    prefix = cfg.params.get("refs_prefix")
    if prefix is None:
        return build_reference_histograms(model, cfg.params["trials"], cfg.seed)
    return tuple(read_histogram(path)[0] for path in _ref_paths(prefix))


def _pad_to_cap(hist: Histogram, cap: int) -> Histogram:
    if hist.cap == cap:
        return hist
    if hist.cap > cap:
        raise ValueError(
            f"observed histogram cap {hist.cap} exceeds reference cap {cap}"
        )
    counts = np.zeros(cap + 1, dtype=np.int64)
    counts[: hist.cap + 1] = hist.counts
    return Histogram(counts, hist.trials_N)


def cmd_detect_estimate(cfg: RunConfig) -> None:
    p = cfg.params
    if p.get("observed") is None:
        raise ConfigError("experiment.observed is required for detect estimate")
    model = _calibrated_model(cfg)
    refs = _load_refs(cfg, model)
    observed, _ = read_histogram(p["observed"])
    observed = _pad_to_cap(observed, refs[0].cap)
    est = estimate_populations(observed, refs)
    payload = {
        "weights": {k: w for k, w in zip(SPIN_LABELS, est.weights)},
        "residual": est.residual,
        "degenerate": est.degenerate,
        "observed": p["observed"],
        "provenance": _provenance(cfg),
    }
    prefix = _out_prefix(cfg)
    write_json_report(f"{prefix}_estimate.json", payload)
    labels = ", ".join(f"{k}={w:.3f}" for k, w in zip(SPIN_LABELS, est.weights))
    print(f"populations: {labels} (residual {est.residual:.4f})")


def cmd_detect_classify(cfg: RunConfig) -> None:
    p = cfg.params
    if p.get("thresholds") is not None:
        t1, t2 = p["thresholds"]
        thresholds = CaseThresholds(int(t1), int(t2))
    else:
        model = _calibrated_model(cfg)
        thresholds, _ = optimize_thresholds(
            build_reference_histograms(model, p["trials"], cfg.seed)
        )
    prefix = _out_prefix(cfg)
    if p.get("m") is not None:
        case = classify_case(p["m"], thresholds)
        payload = {
            "m": p["m"],
            "case": case,
            "thresholds": [thresholds.t1, thresholds.t2],
            "provenance": _provenance(cfg),
        }
        write_json_report(f"{prefix}_classify.json", payload)
        print(f"m = {p['m']} -> case {case} at thresholds ({thresholds.t1}, {thresholds.t2})")
        return
    if p.get("observed") is None:
        raise ConfigError("detect classify needs experiment.m or experiment.observed")
    observed, _ = read_histogram(p["observed"])
    ms = np.arange(observed.cap + 1)
    cases = np.array([classify_case(int(m), thresholds) for m in ms])
    fractions = [
        float(observed.counts[cases == case].sum() / observed.trials_N)
        for case in (1, 2, 3)
    ]
    payload = {
        "observed": p["observed"],
        "thresholds": [thresholds.t1, thresholds.t2],
        "case_fractions": fractions,
        "provenance": _provenance(cfg),
    }
    write_json_report(f"{prefix}_classify.json", payload)
    print(
        f"case fractions at ({thresholds.t1}, {thresholds.t2}): "
        f"1: {fractions[0]:.3f}, 2: {fractions[1]:.3f}, 3: {fractions[2]:.3f}"
    )


def cmd_report_fidelity(cfg: RunConfig) -> None:
    p = cfg.params
    model = cfg.detection
    rho = synthesize_rho(p["contrast"], p["sign"], p["populations"])
    refs = build_reference_histograms(model, p["trials"], cfg.seed)

    rng = rng_for(cfg.seed, STREAM_DETECTION, 1_000_003)
    pops = np.clip(rho.populations, 0.0, None)
    labels = rng.choice(4, size=p["trials"], p=pops / pops.sum())
    observed = Histogram.from_samples(sample_counts(labels, model, rng), refs[0].cap)
    est = estimate_populations(observed, refs)
    p_mixed = float(est.weights[1] + est.weights[2])

    grid = np.linspace(0.0, p["theta_max"], p["theta_points"])
    scan = rotation_scan(rho, grid, p["trials"], model, cfg.seed, refs=refs)
    contrast = min(max(scan.fit.params["contrast"], 0.0), 1.0)
    fidelity = fidelity_report((est.weights[1], est.weights[2]), contrast, p["sign"])
    exact = state_fidelity(rho, bell_state(p["sign"]))
    sem = math.sqrt(max(p_mixed * (1.0 - p_mixed), 0.0) / p["trials"])
    err = 0.5 * math.hypot(scan.fit.errors["contrast"], sem)

    prefix = _out_prefix(cfg)
    write_scan_csv(f"{prefix}_rotate.csv", scan, _provenance(cfg))
    payload = {
        "fidelity": fidelity,
        "fidelity_err": err,
        "exact_synthesized_fidelity": exact,
        "contrast_fit": scan.fit.params,
        "contrast_fit_errors": scan.fit.errors,
        "populations": {k: w for k, w in zip(SPIN_LABELS, est.weights)},
        "provenance": _provenance(cfg),
    }
    write_json_report(f"{prefix}_fidelity.json", payload)
    print(f"F = {fidelity:.3f} +/- {err:.3f} (synthesized target: {exact:.3f})")


_COMMANDS = {
    ("simulate", "rabi"): ("rabi", cmd_simulate_rabi),
    ("simulate", "entangle"): ("entangle", cmd_simulate_entangle),
    ("simulate", "rotate"): ("rotate", cmd_simulate_rotate),
    ("detect", "calibrate"): ("histograms", cmd_detect_calibrate),
    ("detect", "estimate"): ("histograms", cmd_detect_estimate),
    ("detect", "classify"): ("histograms", cmd_detect_classify),
    ("report", "fidelity"): ("fidelity", cmd_report_fidelity),
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="override the output path prefix")
    common.add_argument("--trials", type=int, help="override the trial count")

    parser = argparse.ArgumentParser(
        prog="ionduet",
        description="Two-ion entanglement simulator: pulse programs in, data files out.",
    )
    groups = parser.add_subparsers(dest="group", required=True)
    for group, modes in (
        ("simulate", ("rabi", "entangle", "rotate")),
        ("detect", ("calibrate", "estimate", "classify")),
        ("report", ("fidelity",)),
    ):
        gp = groups.add_parser(group)
        sub = gp.add_subparsers(dest="mode", required=True)
        for mode in modes:
            sub.add_parser(mode, parents=[common])
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    expected, command = _COMMANDS[(args.group, args.mode)]
    try:
        cfg = load_config(args.config)
        if cfg.experiment != expected:
            raise ConfigError(
                f"{args.group} {args.mode} needs experiment.name={expected!r}, "
                f"config says {cfg.experiment!r}"
            )
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out=args.out)
        if args.trials is not None:
            if args.trials < 1:
                raise ConfigError("trials must be >= 1")
            cfg = replace(cfg, params={**cfg.params, "trials": args.trials})
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    try:
        command(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (
        CalibrationError,
        FitError,
        TruncationLeakError,
        ValueError,
        RuntimeError,
        OSError,
    ) as err:
        print(f"run failed: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
