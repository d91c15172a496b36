"""Desk-scale lab for two-photon polarization correlation experiments.

Models the state |HH> + f|VV> behind real polarizers and detectors,
evaluates the Clauser-Horne inequality and its ratio form R, finds
CH-maximizing analyzer angles, locates critical detection efficiencies,
and Monte Carlo simulates the full counting protocol with reproducible
seeding. The bell-lab console script exposes everything as subcommands.
"""

from .metrics import (
    AnalyzerQuad,
    CHReport,
    CountsSextet,
    DegenerateInputError,
    MODE_COINCIDENCE,
    MODE_SINGLES,
    ch_sum,
    lhv_extrema,
    lhv_mixture_extrema,
    lhv_strategies,
    qm_counts,
    ratio_r,
)
from .optimize import (
    EfficiencyThreshold,
    NoThresholdError,
    OptimizationResult,
    ScanFReport,
    critical_efficiency,
    ideal_ch_max,
    optimize_angles,
    scan_f,
)
from .qm import (
    ABSENT,
    DetectionModel,
    EntangledState,
    ModelError,
    PolarizerModel,
    SaturationError,
    arm_pass_probability,
    coincidence_rate,
    fringe_scan,
    joint_pass_probability,
    pass_probability,
    single_pass_probability,
    singles_rate,
    visibility,
)
from .simulate import (
    FringeFit,
    RunRecord,
    SimConfig,
    calibrate_noise_mix,
    estimate_f,
    expected_rates,
    fit_fringe,
    fringe_expectation,
    record_to_json,
    record_to_json_dict,
    simulate_fringe,
    simulate_run,
)

__version__ = "0.1.0"

__all__ = [
    "ABSENT",
    "AnalyzerQuad",
    "CHReport",
    "CountsSextet",
    "DegenerateInputError",
    "DetectionModel",
    "EfficiencyThreshold",
    "EntangledState",
    "FringeFit",
    "MODE_COINCIDENCE",
    "MODE_SINGLES",
    "ModelError",
    "NoThresholdError",
    "OptimizationResult",
    "PolarizerModel",
    "RunRecord",
    "SaturationError",
    "ScanFReport",
    "SimConfig",
    "arm_pass_probability",
    "calibrate_noise_mix",
    "ch_sum",
    "coincidence_rate",
    "critical_efficiency",
    "estimate_f",
    "expected_rates",
    "fit_fringe",
    "fringe_expectation",
    "fringe_scan",
    "ideal_ch_max",
    "joint_pass_probability",
    "lhv_extrema",
    "lhv_mixture_extrema",
    "lhv_strategies",
    "optimize_angles",
    "pass_probability",
    "qm_counts",
    "ratio_r",
    "record_to_json",
    "record_to_json_dict",
    "scan_f",
    "simulate_fringe",
    "simulate_run",
    "single_pass_probability",
    "singles_rate",
    "visibility",
]
