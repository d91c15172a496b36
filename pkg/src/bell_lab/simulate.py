"""Monte Carlo counting experiment and parameter estimation.

simulate_run plays the whole measurement protocol: for each of the six
analyzer settings of a CH quad the expected coincidence rate is assembled
from the quantum model (optionally degraded by a white-noise admixture),
multiplied by the integration time and Poisson-sampled. Each setting
draws from its own generator stream derived from (seed, setting index),
so results do not depend on evaluation order and runs are reproducible
byte for byte.

The white-noise model mixes at the probability level,

    P -> (1 - m) P_qm + m P_white,

where P_white is the product of unpolarized single-arm transmissions
((eps_par + eps_perp)/2 through a present analyzer, 1 through a removed
one). m = noise_mix is the knob calibrated against a measured fringe
visibility.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import qm
from .metrics import AnalyzerQuad, CHReport, CountsSextet, DegenerateInputError, ch_sum
from .qm import ABSENT, DetectionModel, EntangledState, ModelError, PolarizerModel

# Stream namespace separating fringe-point draws from the six run settings.
_FRINGE_STREAM = 7919


@dataclass(frozen=True)
class SimConfig:
    """Everything one run needs: state, optics, detection, quad, seed, noise."""

    state: EntangledState
    pol: PolarizerModel
    det: DetectionModel
    quad: AnalyzerQuad
    seed: int = 0
    noise_mix: float = 0.0

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise ModelError(f"seed must be a non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        m = float(self.noise_mix)
        if not (0.0 <= m <= 1.0) or not math.isfinite(m):
            raise ModelError(f"noise_mix must lie in [0, 1], got {m!r}")
        object.__setattr__(self, "noise_mix", m)

    def describe(self):
        """Resolved configuration as an ordered plain dict."""
        return {
            "f_real": self.state.f.real,
            "f_imag": self.state.f.imag,
            "eps_par_1": self.pol.eps_par_1,
            "eps_perp_1": self.pol.eps_perp_1,
            "eps_par_2": self.pol.eps_par_2,
            "eps_perp_2": self.pol.eps_perp_2,
            "eta_1": self.det.eta_1,
            "eta_2": self.det.eta_2,
            "dark_1": self.det.dark_1,
            "dark_2": self.det.dark_2,
            "pair_rate": self.det.pair_rate,
            "window": self.det.window,
            "duration": self.det.duration,
            "theta1": self.quad.theta1,
            "theta2": self.quad.theta2,
            "theta1_prime": self.quad.theta1_prime,
            "theta2_prime": self.quad.theta2_prime,
            "seed": self.seed,
            "noise_mix": self.noise_mix,
        }

    def digest(self):
        """Stable sha256 over the resolved configuration."""
        payload = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class RunRecord:
    """One simulated measurement of the six CH settings."""

    config_digest: str
    counts: CountsSextet
    expected_rates: tuple
    duration: float
    report: CHReport


def _mixed_joint(config, t1, t2):
    """Noise-mixed joint pass probability, ABSENT allowed on either arm."""
    m = config.noise_mix
    p = qm.pass_probability(config.state, t1, t2, config.pol)
    w1 = 1.0 if qm.is_absent(t1) else config.pol.white_pass(1)
    w2 = 1.0 if qm.is_absent(t2) else config.pol.white_pass(2)
    return (1.0 - m) * p + m * w1 * w2


def _mixed_arm(config, theta, arm):
    m = config.noise_mix
    p = qm.arm_pass_probability(config.state, theta, arm, config.pol)
    w = 1.0 if qm.is_absent(theta) else config.pol.white_pass(arm)
    return (1.0 - m) * p + m * w


def setting_rate(config, t1, t2):
    """Coincidence rate at one setting under the noise-mixed model."""
    pj = _mixed_joint(config, t1, t2)
    p1 = _mixed_arm(config, t1, 1)
    p2 = _mixed_arm(config, t2, 2)
    return qm._rate_from_probs(pj, p1, p2, config.det)


def expected_rates(config):
    """The six expected coincidence rates in CH order."""
    return tuple(setting_rate(config, a, b) for a, b in config.quad.settings())


def simulate_run(config) -> RunRecord:
    """Poisson-sample the six settings and assemble the CH report.

    Setting k draws from default_rng([seed, k]); identical configs give
    identical records.
    """
    rates = expected_rates(config)
    duration = config.det.duration
    counts = []
    for k, rate in enumerate(rates):
        rng = np.random.default_rng([config.seed, k])
        counts.append(int(rng.poisson(rate * duration)))
    sextet = CountsSextet.poissonized(counts)
    return RunRecord(
        config_digest=config.digest(),
        counts=sextet,
        expected_rates=rates,
        duration=duration,
        report=ch_sum(sextet),
    )


def fringe_expectation(config, theta_fixed, n_points=181, arm_fixed=1):
    """Expected coincidence rate vs scanned angle, noise and darks included."""
    if qm.is_absent(theta_fixed):
        raise ModelError("fringe needs a numeric fixed angle")
    if arm_fixed not in (1, 2):
        raise ModelError(f"arm_fixed must be 1 or 2, got {arm_fixed!r}")
    angles = np.linspace(0.0, 180.0, int(n_points), endpoint=False)
    out = []
    for a in angles:
        t1, t2 = (theta_fixed, a) if arm_fixed == 1 else (a, theta_fixed)
        out.append((float(a), setting_rate(config, t1, t2)))
    return out


def simulate_fringe(config, theta_fixed, n_points=36, per_point_duration=1.0, arm_fixed=1):
    """Poisson-sampled fringe: list of (angle, integer count).

    Point i draws from default_rng([seed, 7919, i]), a separate namespace
    from the six run settings, so a run and a fringe sharing a seed are
    statistically independent.
    """
    n_points = int(n_points)
    if n_points < 8:
        raise ModelError("simulate_fringe needs at least 8 points")
    if per_point_duration <= 0:
        raise ModelError("per_point_duration must be > 0")
    expectation = fringe_expectation(config, theta_fixed, n_points, arm_fixed)
    points = []
    for i, (angle, rate) in enumerate(expectation):
        rng = np.random.default_rng([config.seed, _FRINGE_STREAM, i])
        points.append((angle, int(rng.poisson(rate * per_point_duration))))
    return points


@dataclass(frozen=True)
class FringeFit:
    """Weighted least-squares fit of y = amplitude*cos^2(theta-phase) + offset."""

    amplitude: float
    offset: float
    phase_deg: float
    visibility: float
    sigma_visibility: float
    goodness: float  # chi^2 per degree of freedom


def fit_fringe(points) -> FringeFit:
    """Fit A cos^2(theta - phi) + B to (angle, count) data.

    Linearized as c0 + c1 cos(2 theta) + c2 sin(2 theta) and solved by
    weighted linear least squares with Poisson weights 1/max(y, 1).
    Visibility = A/(A + 2B) with its covariance-propagated uncertainty;
    goodness is chi^2 per degree of freedom.
    """
    pts = [(float(a), float(v)) for a, v in points]
    if len(pts) < 4:
        raise ModelError("fit_fringe needs at least 4 points")
    angles = np.array([a for a, _ in pts])
    y = np.array([v for _, v in pts])
    span = angles.max() - angles.min()
    if span < 90.0:
        raise ModelError(f"fit_fringe needs angles spanning >= 90 deg, got {span:.3g}")
    t = np.deg2rad(2.0 * angles)
    design = np.column_stack([np.ones_like(t), np.cos(t), np.sin(t)])
    w = 1.0 / np.maximum(y, 1.0)
    a_mat = design * w[:, None]
    gram = design.T @ a_mat
    try:
        cov = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        raise ModelError("singular fringe design (angles do not separate the fit)")
    c = cov @ (a_mat.T @ y)
    c0, c1, c2 = c
    rho = math.hypot(c1, c2)
    amplitude = 2.0 * rho
    offset = c0 - rho
    phase = math.degrees(0.5 * math.atan2(c2, c1)) % 180.0
    if c0 <= 0:
        raise ModelError("fringe fit found a non-positive mean level")
    vis = rho / c0
    # delta method: V = rho/c0, rho = hypot(c1, c2)
    if rho > 0:
        grad = np.array([-rho / c0**2, c1 / (rho * c0), c2 / (rho * c0)])
    else:
        grad = np.array([0.0, 1.0 / c0, 1.0 / c0])
    sigma_vis = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    resid = y - design @ c
    dof = len(pts) - 3
    chi2 = float((w * resid**2).sum())
    return FringeFit(
        amplitude=float(amplitude),
        offset=float(offset),
        phase_deg=float(phase),
        visibility=float(vis),
        sigma_visibility=sigma_vis,
        goodness=chi2 / dof,
    )


def estimate_f(n_vv, n_hh):
    """Estimate |f| from the two basis coincidences.

    n_vv is the count with both analyzers at 0 deg (the |VV> component
    under the sin^2 convention), n_hh with both at 90 deg. f_hat =
    sqrt(n_vv / n_hh), with the first-order Poisson uncertainty
    f_hat/2 * sqrt(1/n_vv + 1/n_hh). A zero numerator returns f_hat = 0
    with the sigma evaluated on one regularizing count.
    """
    n_vv, n_hh = float(n_vv), float(n_hh)
    if n_vv < 0 or n_hh < 0:
        raise ModelError("basis counts must be >= 0")
    if n_hh == 0:
        raise DegenerateInputError("denominator basis count N(90,90) is zero")
    f_hat = math.sqrt(n_vv / n_hh)
    reg = max(n_vv, 1.0)
    sigma = 0.5 * math.sqrt(reg / n_hh) * math.sqrt(1.0 / reg + 1.0 / n_hh)
    return f_hat, sigma


def calibrate_noise_mix(config, target_visibility, theta_fixed, arm_fixed=1, n_points=721):
    """noise_mix that makes the model fringe visibility hit the target.

    Bisects on the analytic expected fringe (accidentals and darks
    included), where visibility decreases monotonically with the mix.
    Raises ModelError when the config cannot reach the target even at
    noise_mix = 0.
    """
    target = float(target_visibility)
    if not (0.0 < target <= 1.0):
        raise ModelError("target visibility must lie in (0, 1]")

    def vis_at(m):
        cfg = SimConfig(
            state=config.state,
            pol=config.pol,
            det=config.det,
            quad=config.quad,
            seed=config.seed,
            noise_mix=m,
        )
        fringe = fringe_expectation(cfg, theta_fixed, n_points, arm_fixed)
        return qm.visibility(fringe)

    if vis_at(0.0) < target:
        raise ModelError(
            "configured accidentals and darks already push the fringe "
            f"visibility below {target}; nothing to calibrate"
        )
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if vis_at(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def record_to_json_dict(record: RunRecord):
    """RunRecord as a plain dict with stable field order, counts as ints."""
    counts = {
        name: int(getattr(record.counts, name))
        for name in CountsSextet._FIELDS
    }
    report = record.report
    return {
        "config_digest": record.config_digest,
        "counts": counts,
        "count_sigmas": list(record.counts.sigmas),
        "expected_rates": list(record.expected_rates),
        "duration": record.duration,
        "ch": report.ch,
        "sigma_ch": report.sigma_ch,
        "r": report.r,
        "sigma_r": report.sigma_r,
    }


def record_to_json(record: RunRecord, config: SimConfig | None = None):
    """Serialize a run (optionally with its resolved config) to JSON text."""
    doc = {}
    if config is not None:
        doc["config"] = config.describe()
    doc.update(record_to_json_dict(record))
    return json.dumps(doc, indent=2)
