"""Quantum model of a two-photon polarization correlation experiment.

The source emits pairs in the pure state

    |psi> = (|HH> + f |VV>) / sqrt(1 + |f|^2)

with a complex amplitude ratio f. Each arm carries a rotatable analyzer
described by its principal transmittances (eps_par for light polarized
along the pass axis, eps_perp for light polarized across it), followed by
a threshold detector with quantum efficiency eta and a dark-count rate.

Convention: an H-polarized photon passes an ideal analyzer set to angle
theta with probability sin^2(theta). Angles are degrees, taken mod 180
(a polarizer at theta and theta + 180 is the same element). The removed
analyzer is represented by the sentinel ABSENT and transmits everything.

All probability functions accept numpy arrays for the angle arguments and
broadcast, which the optimizer relies on for its grid stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Sentinel for "no polarization selection on this arm" (polarizer removed).
ABSENT = None


class ModelError(ValueError):
    """Input outside the validity domain of the physical model."""


class SaturationError(ModelError):
    """Coincidence window times singles rate reached order unity.

    The accidental model S1*S2*window assumes the window is short compared
    with the mean time between singles on each arm; beyond that the linear
    accidental estimate (and the whole counting chain) is meaningless.
    """


def is_absent(theta):
    return theta is ABSENT


def reduce_angle(theta):
    """Reduce a numeric analyzer angle in degrees to [0, 180)."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ModelError(f"analyzer angle must be finite, got {theta!r}")
    return theta % 180.0


def _as_radians(theta):
    """Degrees to radians, array-safe, rejecting non-finite entries."""
    th = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(th)):
        raise ModelError("analyzer angle must be finite")
    return np.deg2rad(th)


@dataclass(frozen=True)
class EntangledState:
    """The state |HH> + f |VV>, normalized by 1 + |f|^2.

    f = 0 is the product state |HH>; |f| = 1 is maximally entangled.
    f may be complex; only Re(f) enters the interference cross term.
    """

    f: complex = 1.0

    def __post_init__(self):
        fc = complex(self.f)
        if not (math.isfinite(fc.real) and math.isfinite(fc.imag)):
            raise ModelError("state amplitude ratio f must be finite")
        object.__setattr__(self, "f", fc)

    @property
    def norm_factor(self):
        """1 / (1 + |f|^2), the squared normalization of the state."""
        return 1.0 / (1.0 + abs(self.f) ** 2)

    @property
    def is_product(self):
        return self.f == 0

    @property
    def is_maximal(self):
        return abs(self.f) == 1.0


@dataclass(frozen=True)
class PolarizerModel:
    """Principal transmittances of the two analyzers.

    eps_par_i is the intensity transmission for light polarized along the
    pass axis of analyzer i, eps_perp_i across it. An ideal polarizer has
    eps_par = 1, eps_perp = 0.
    """

    eps_par_1: float = 1.0
    eps_perp_1: float = 0.0
    eps_par_2: float = 1.0
    eps_perp_2: float = 0.0

    def __post_init__(self):
        for arm in (1, 2):
            par, perp = self.arm(arm)
            ok = (
                math.isfinite(par)
                and math.isfinite(perp)
                and 0.0 <= perp <= par <= 1.0
            )
            if not ok:
                raise ModelError(
                    "polarizer transmittances must satisfy "
                    f"0 <= eps_perp <= eps_par <= 1 on arm {arm}, got "
                    f"eps_par={par!r}, eps_perp={perp!r}"
                )

    @classmethod
    def ideal(cls):
        return cls(1.0, 0.0, 1.0, 0.0)

    @classmethod
    def symmetric(cls, eps_par, eps_perp):
        """Same transmittances on both arms."""
        return cls(eps_par, eps_perp, eps_par, eps_perp)

    def arm(self, arm):
        if arm == 1:
            return self.eps_par_1, self.eps_perp_1
        if arm == 2:
            return self.eps_par_2, self.eps_perp_2
        raise ModelError(f"arm must be 1 or 2, got {arm!r}")

    def white_pass(self, arm):
        """Transmission of unpolarized light through analyzer `arm`."""
        par, perp = self.arm(arm)
        return 0.5 * (par + perp)


@dataclass(frozen=True)
class DetectionModel:
    """Detector efficiencies, darks, source brightness and timing.

    pair_rate is the entangled-pair production rate in pairs/s, window the
    coincidence window in seconds and duration the integration time per
    setting in seconds. The default is a unit-normalized ideal detector
    (pair_rate = 1, duration = 1), under which expected coincidence
    "counts" are per-pair probabilities.
    """

    eta_1: float = 1.0
    eta_2: float = 1.0
    dark_1: float = 0.0
    dark_2: float = 0.0
    pair_rate: float = 1.0
    window: float = 0.0
    duration: float = 1.0

    def __post_init__(self):
        fields = {
            "eta_1": self.eta_1,
            "eta_2": self.eta_2,
            "dark_1": self.dark_1,
            "dark_2": self.dark_2,
            "pair_rate": self.pair_rate,
            "window": self.window,
            "duration": self.duration,
        }
        for name, value in fields.items():
            if not (math.isfinite(value) and value >= 0.0):
                raise ModelError(f"{name} must be finite and >= 0, got {value!r}")
        if self.eta_1 > 1.0 or self.eta_2 > 1.0:
            raise ModelError("detector efficiencies must not exceed 1")

    @classmethod
    def ideal(cls):
        return cls()

    def eta(self, arm):
        return self.eta_1 if arm == 1 else self.eta_2

    def dark(self, arm):
        return self.dark_1 if arm == 1 else self.dark_2


def _axis_transmissions(theta, par, perp):
    """Transmissions of the H and V components through one analyzer.

    Returns (t_h, t_v, x) where t_h = eps_par sin^2 + eps_perp cos^2,
    t_v = eps_par cos^2 + eps_perp sin^2, and x = (eps_par - eps_perp)
    sin cos is the coherence factor entering the interference term.
    """
    th = _as_radians(theta)
    s, c = np.sin(th), np.cos(th)
    s2, c2 = s * s, c * c
    t_h = par * s2 + perp * c2
    t_v = par * c2 + perp * s2
    return t_h, t_v, (par - perp) * s * c


def joint_pass_probability(state, theta1, theta2, pol=None):
    """Probability that both photons pass their analyzers.

    Both angles must be numeric (use single_pass_probability or
    pass_probability when an analyzer is removed). Works elementwise
    on array angles.
    """
    if is_absent(theta1) or is_absent(theta2):
        raise ModelError("joint_pass_probability needs two numeric angles")
    pol = pol or PolarizerModel.ideal()
    f = state.f
    t1h, t1v, x1 = _axis_transmissions(theta1, *pol.arm(1))
    t2h, t2v, x2 = _axis_transmissions(theta2, *pol.arm(2))
    cross = 2.0 * f.real  # f + conj(f)
    p = (t1h * t2h + abs(f) ** 2 * t1v * t2v + cross * x1 * x2) * state.norm_factor
    return p if isinstance(p, np.ndarray) else float(p)


def single_pass_probability(state, theta, arm, pol=None):
    """Marginal pass probability on one arm, the other photon untouched.

    Tracing out the partner kills the interference term, leaving
    (T^H + |f|^2 T^V) / (1 + |f|^2).
    """
    if is_absent(theta):
        raise ModelError("single_pass_probability needs a numeric angle")
    pol = pol or PolarizerModel.ideal()
    t_h, t_v, _ = _axis_transmissions(theta, *pol.arm(arm))
    p = (t_h + abs(state.f) ** 2 * t_v) * state.norm_factor
    return p if isinstance(p, np.ndarray) else float(p)


def arm_pass_probability(state, theta, arm, pol=None):
    """Like single_pass_probability but ABSENT transmits everything."""
    if is_absent(theta):
        return 1.0
    return single_pass_probability(state, theta, arm, pol)


def pass_probability(state, theta1, theta2, pol=None):
    """Joint pass probability allowing ABSENT on either arm.

    Degrades to the appropriate marginal with one analyzer removed and
    to 1 with both removed.
    """
    a1, a2 = is_absent(theta1), is_absent(theta2)
    if a1 and a2:
        return 1.0
    if a1:
        return single_pass_probability(state, theta2, 2, pol)
    if a2:
        return single_pass_probability(state, theta1, 1, pol)
    return joint_pass_probability(state, theta1, theta2, pol)


def singles_rate(state, theta, arm, pol=None, det=None):
    """Singles rate on one arm: pair_rate * eta * P(pass) + dark."""
    det = det or DetectionModel.ideal()
    p = arm_pass_probability(state, theta, arm, pol)
    return det.pair_rate * det.eta(arm) * p + det.dark(arm)


def _rate_from_probs(p_joint, p1, p2, det):
    """Assemble a coincidence rate from pass probabilities.

    True coincidences plus the accidental floor S1*S2*window from
    uncorrelated singles. Shared by the analytic path and the simulator
    (which feeds in noise-mixed probabilities).
    """
    s1 = det.pair_rate * det.eta_1 * p1 + det.dark_1
    s2 = det.pair_rate * det.eta_2 * p2 + det.dark_2
    for arm, s in ((1, s1), (2, s2)):
        if det.window * s >= 1.0:
            raise SaturationError(
                f"window * singles = {det.window * s:.3g} on arm {arm}; "
                "the accidental model needs window * singles << 1"
            )
    return det.pair_rate * det.eta_1 * det.eta_2 * p_joint + s1 * s2 * det.window


def coincidence_rate(state, theta1, theta2, pol=None, det=None):
    """Coincidence counting rate for one analyzer setting, in counts/s.

    Either angle may be ABSENT (transparent analyzer). Includes the
    accidental contribution S1*S2*window and raises SaturationError
    when window * singles reaches order one.
    """
    det = det or DetectionModel.ideal()
    p_joint = pass_probability(state, theta1, theta2, pol)
    p1 = arm_pass_probability(state, theta1, 1, pol)
    p2 = arm_pass_probability(state, theta2, 2, pol)
    return _rate_from_probs(p_joint, p1, p2, det)


def fringe_scan(state, theta_fixed, arm_fixed=1, pol=None, n_points=181):
    """Joint pass probability vs the scanned analyzer angle.

    One analyzer sits at theta_fixed while the other sweeps a uniform
    grid over [0, 180). Returns a list of (angle, probability) pairs.
    """
    if is_absent(theta_fixed):
        raise ModelError("fringe_scan needs a numeric fixed angle")
    if arm_fixed not in (1, 2):
        raise ModelError(f"arm_fixed must be 1 or 2, got {arm_fixed!r}")
    n_points = int(n_points)
    if n_points < 3:
        raise ModelError("fringe_scan needs at least 3 points")
    angles = np.linspace(0.0, 180.0, n_points, endpoint=False)
    if arm_fixed == 1:
        probs = joint_pass_probability(state, theta_fixed, angles, pol)
    else:
        probs = joint_pass_probability(state, angles, theta_fixed, pol)
    return list(zip(angles.tolist(), np.asarray(probs).tolist()))


def visibility(fringe):
    """Michelson visibility (max - min) / (max + min) of a fringe.

    Accepts any iterable of (angle, value) pairs with non-negative values,
    at least three points, not all zero.
    """
    values = np.asarray([v for _, v in fringe], dtype=float)
    if values.size < 3:
        raise ModelError("visibility needs at least 3 fringe points")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ModelError("fringe values must be finite and non-negative")
    hi, lo = values.max(), values.min()
    if hi == 0.0:
        raise ModelError("visibility of an all-zero fringe is undefined")
    return float((hi - lo) / (hi + lo))
