"""Run configuration: one YAML file describes one run.

Keys carry units in their suffix (_mhz and _khz are frequencies given as
cycles, converted to rad/s; _us and _ms are times; _um lengths; _volts
voltages) and are converted to SI on load.  The schema is strict: unknown
keys are errors, as is giving a phase both directly and through the static
potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .detection import DetectionModel
from .dynamics import NoiseModel
from .trap import (
    AddressingProfile,
    TrapConfig,
    addressing_profile,
    lamb_dicke_two_ion,
    phase_from_static_potential,
    solve_displacement_for_ratio,
)
from .datafiles import config_digest

TWO_PI = 2.0 * math.pi

EXPERIMENTS = ("rabi", "histograms", "entangle", "rotate", "fidelity")

_REQUIRED = object()


class ConfigError(ValueError):
    """The configuration file violates the schema."""


class _Section:
    """One mapping in the config; tracks consumed keys to reject strays."""

    def __init__(self, name: str, data):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{name} must be a mapping")
        self.name = name
        self.data = dict(data)

    def has(self, key: str) -> bool:
        return key in self.data

    def take(self, key: str, kind: str, default=_REQUIRED):
        if key not in self.data:
            if default is _REQUIRED:
                raise ConfigError(f"{self.name}.{key} is required")
            return default
        value = self.data.pop(key)
        full = f"{self.name}.{key}"
        if kind == "number":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{full} must be a number")
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{full} must be an integer")
            return value
        if kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{full} must be true or false")
            return value
        if kind == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{full} must be a string")
            return value
        if kind == "map":
            if not isinstance(value, dict):
                raise ConfigError(f"{full} must be a mapping")
            return value
        if kind == "numbers":
            if not isinstance(value, list) or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
            ):
                raise ConfigError(f"{full} must be a list of numbers")
            return [float(v) for v in value]
        raise AssertionError(f"unknown kind {kind}")

    def finish(self):
        if self.data:
            raise ConfigError(f"unknown keys in {self.name}: {sorted(self.data)}")


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, in SI units, plus the config provenance."""

    seed: int
    out: str | None
    trap: TrapConfig
    profile: AddressingProfile
    eta_prime: float
    noise: NoiseModel
    detection: DetectionModel
    experiment: str
    params: dict
    config_sha256: str


def _build(cls, name: str, /, **kwargs):
    try:
        return cls(**kwargs)
    except ValueError as err:
        raise ConfigError(f"{name}: {err}") from err


def _parse_trap(section: _Section) -> TrapConfig:
    cfg = _build(
        TrapConfig,
        "trap",
        omega_x=TWO_PI * 1e6 * section.take("omega_x_mhz", "number", 8.0),
        omega_y=TWO_PI * 1e6 * section.take("omega_y_mhz", "number", 17.0),
        omega_z=TWO_PI * 1e6 * section.take("omega_z_mhz", "number", 10.4),
        eta_single=section.take("eta_single", "number", 0.23),
        ion_spacing_l=1e-6 * section.take("ion_spacing_um", "number", 2.0),
        delta_k_mag=1e6 * section.take("delta_k_per_um", "number", 2.0),
        U0_volts=section.take("U0_volts", "number", 16.3),
        U0_phase_zero=section.take("U0_phase_zero_volts", "number", 16.3),
        U0_phase_pi=section.take("U0_phase_pi_volts", "number", 12.6),
    )
    section.finish()
    return cfg


def _parse_addressing(section: _Section, trap: TrapConfig) -> AddressingProfile:
    Omega_c = TWO_PI * 1e3 * section.take("Omega_c_khz", "number", 750.0)
    order = section.take("harmonic_order", "int", 0)
    has_ratio = section.has("target_ratio")
    has_d = section.has("displacement_um")
    if has_ratio and has_d:
        raise ConfigError("give only one of addressing.target_ratio/displacement_um")
    try:
        if has_d:
            d = 1e-6 * section.take("displacement_um", "number")
        else:
            d = solve_displacement_for_ratio(
                trap, section.take("target_ratio", "number", 2.0)
            )
        profile = addressing_profile(trap, d, Omega_c, order)
    except ValueError as err:
        raise ConfigError(f"addressing: {err}") from err
    section.finish()
    return profile


def _parse_noise(section: _Section) -> NoiseModel:
    noise = _build(
        NoiseModel,
        "noise",
        gamma=TWO_PI * 1e3 * section.take("gamma_khz", "number", 6.0),
        rabi_noise_sigma=section.take("rabi_noise_sigma", "number", 0.054),
        stretch_ground_prob=section.take("stretch_ground_prob", "number", 0.99),
        com_nbar=section.take("com_nbar", "number", 0.3),
        com_eta=section.take("com_eta", "number", 0.16),
        alpha=section.take("alpha", "number", -0.05),
    )
    section.finish()
    return noise


def _parse_detection(section: _Section) -> DetectionModel:
    model = _build(
        DetectionModel,
        "detection",
        tau_d=1e-6 * section.take("tau_d_us", "number", 500.0),
        bright_rate_per_ion=section.take("bright_rate_per_ion", "number", 12.5),
        background_rate=section.take("background_rate_per_s", "number", 300.0),
        depump_time_constant=1e-3 * section.take("depump_time_constant_ms", "number", 7.2),
        dark_leak_prob=section.take("dark_leak_prob", "number", 0.02),
        intensity_sigma=section.take("intensity_sigma", "number", 0.25),
        alpha=section.take("alpha", "number", -0.05),
    )
    section.finish()
    return model


def _resolve_phi(section: _Section, trap: TrapConfig) -> float:
    has_phi = section.has("phi_rad")
    has_u0 = section.has("U0_volts")
    if has_phi == has_u0:
        raise ConfigError(
            f"{section.name}: give exactly one of phi_rad or U0_volts"
        )
    if has_phi:
        return section.take("phi_rad", "number")
    return phase_from_static_potential(trap, section.take("U0_volts", "number"))


def _take_trials(section: _Section, default: int) -> int:
    trials = section.take("trials", "int", default)
    if trials < 1:
        raise ConfigError(f"{section.name}.trials must be >= 1")
    return trials


def _take_populations(section: _Section) -> list[float]:
    pops = section.take("populations", "numbers", [0.15, 0.4, 0.4, 0.05])
    if len(pops) != 4:
        raise ConfigError(f"{section.name}.populations needs four entries")
    return pops


def _take_sign(section: _Section) -> int:
    sign = section.take("sign", "int", 1)
    if sign not in (-1, 1):
        raise ConfigError(f"{section.name}.sign must be -1 or +1")
    return sign


def _parse_experiment(section: _Section, trap: TrapConfig) -> tuple[str, dict]:
    name = section.take("name", "str")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment.name must be one of {EXPERIMENTS}")
    params: dict = {}
    if name == "rabi":
        params["t_max"] = 1e-6 * section.take("t_max_us", "number", 10.0)
        params["points"] = section.take("points", "int", 121)
        params["trials"] = _take_trials(section, 1000)
        params["calibrate"] = section.take("calibrate", "bool", False)
        if params["t_max"] <= 0 or params["points"] < 4:
            raise ConfigError("rabi needs t_max_us > 0 and points >= 4")
    elif name == "histograms":
        params["trials"] = _take_trials(section, 10_000)
        params["calibrate"] = section.take("calibrate", "bool", True)
        params["target_tail"] = section.take("target_tail", "number", 0.10)
        if section.has("observed"):
            params["observed"] = section.take("observed", "str")
        if section.has("refs_prefix"):
            params["refs_prefix"] = section.take("refs_prefix", "str")
        if section.has("thresholds"):
            pair = section.take("thresholds", "numbers")
            if len(pair) != 2 or any(t != int(t) for t in pair):
                raise ConfigError("experiment.thresholds needs two integers")
            params["thresholds"] = [int(t) for t in pair]
        if section.has("m"):
            params["m"] = section.take("m", "int")
    elif name == "entangle":
        params["phi"] = _resolve_phi(section, trap)
        params["trials"] = (
            _take_trials(section, 1) if section.has("trials") else None
        )
    elif name == "rotate":
        params["input"] = section.take("input", "str", "synthesized")
        if params["input"] not in ("synthesized", "entangle"):
            raise ConfigError("rotate.input must be 'synthesized' or 'entangle'")
        if params["input"] == "entangle":
            params["phi"] = _resolve_phi(section, trap)
        else:
            params["contrast"] = section.take("contrast", "number", 0.6)
            params["sign"] = _take_sign(section)
            params["populations"] = _take_populations(section)
        params["theta_points"] = section.take("theta_points", "int", 25)
        params["theta_max"] = section.take("theta_max_rad", "number", math.pi)
        params["trials"] = _take_trials(section, 10_000)
        params["detection"] = section.take("detection", "bool", True)
        if params["theta_points"] < 4 or params["theta_max"] <= 0:
            raise ConfigError("rotate needs theta_points >= 4 and theta_max_rad > 0")
    elif name == "fidelity":
        params["contrast"] = section.take("contrast", "number", 0.6)
        params["sign"] = _take_sign(section)
        params["populations"] = _take_populations(section)
        params["theta_points"] = section.take("theta_points", "int", 25)
        params["theta_max"] = section.take("theta_max_rad", "number", math.pi)
        params["trials"] = _take_trials(section, 10_000)
    section.finish()
    return name, params


def load_config(path) -> RunConfig:
    """Load, schema-check, and unit-convert one run configuration."""
    raw = Path(path).read_bytes()
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as err:
        raise ConfigError(f"not valid YAML: {err}") from err
    top = _Section("config", data)
    if not top.data:
        raise ConfigError("empty configuration")

    seed = top.take("seed", "int")
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    out = top.take("out", "str", None)
    trap = _parse_trap(_Section("trap", top.take("trap", "map", {})))
    profile = _parse_addressing(
        _Section("addressing", top.take("addressing", "map", {})), trap
    )
    noise = _parse_noise(_Section("noise", top.take("noise", "map", {})))
    detection = _parse_detection(
        _Section("detection", top.take("detection", "map", {}))
    )
    experiment, params = _parse_experiment(
        _Section("experiment", top.take("experiment", "map")), trap
    )
    top.finish()
    return RunConfig(
        seed=seed,
        out=out,
        trap=trap,
        profile=profile,
        eta_prime=lamb_dicke_two_ion(trap.eta_single),
        noise=noise,
        detection=detection,
        experiment=experiment,
        params=params,
        config_sha256=config_digest(raw),
    )
