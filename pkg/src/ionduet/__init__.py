"""Joint spin-motion simulator for a deterministically entangled ion pair."""

from .detection import (
    CaseThresholds,
    DetectionModel,
    Histogram,
    PopulationEstimate,
    build_reference_histograms,
    calibrate_depump,
    classify_case,
    estimate_populations,
    optimize_thresholds,
    sample_photon_count,
)
from .dynamics import (
    NoiseModel,
    PulseSpec,
    apply_sequence,
    carrier_unitary,
    fluorescence_expectation,
    rsb_unitary,
    signal_model,
)
from .experiments import (
    ScanResult,
    calibrate_gamma,
    entangle,
    fidelity_report,
    prepare_basis,
    rabi_scan,
    rotation_scan,
)
from .hilbert import JointState, bell_state, psi_e, state_fidelity, synthesize_rho
from .trap import (
    AddressingProfile,
    TrapConfig,
    addressing_profile,
    lamb_dicke_two_ion,
    micromotion_rabi,
    solve_displacement_for_ratio,
    stretch_frequency,
)

__version__ = "0.1.0"

__all__ = [
    "AddressingProfile",
    "CaseThresholds",
    "DetectionModel",
    "Histogram",
    "JointState",
    "NoiseModel",
    "PopulationEstimate",
    "PulseSpec",
    "ScanResult",
    "TrapConfig",
    "addressing_profile",
    "apply_sequence",
    "bell_state",
    "build_reference_histograms",
    "calibrate_depump",
    "calibrate_gamma",
    "carrier_unitary",
    "classify_case",
    "entangle",
    "estimate_populations",
    "fidelity_report",
    "fluorescence_expectation",
    "lamb_dicke_two_ion",
    "micromotion_rabi",
    "optimize_thresholds",
    "prepare_basis",
    "psi_e",
    "rabi_scan",
    "rotation_scan",
    "rsb_unitary",
    "sample_photon_count",
    "signal_model",
    "solve_displacement_for_ratio",
    "state_fidelity",
    "stretch_frequency",
    "synthesize_rho",
]
