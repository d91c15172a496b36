"""Clauser-Horne sum, the ratio R, Poisson errors, and the LHV bound.

The measured object is the sextet of coincidence counts

    N(t1,t2), N(t1,t2'), N(t1',t2), N(t1',t2'), N(t1',inf), N(inf,t2)

where inf marks a removed analyzer. The CH combination

    ch = N(t1,t2) - N(t1,t2') + N(t1',t2) + N(t1',t2') - N(t1',inf) - N(inf,t2)

is non-positive for every local realistic model, and the equivalent ratio

    R = [N(t1,t2) - N(t1,t2') + N(t1',t2) + N(t1',t2')] / [N(t1',inf) + N(inf,t2)]

exceeds 1 exactly when ch > 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import qm
from .qm import ABSENT, DetectionModel, ModelError, PolarizerModel, reduce_angle


class DegenerateInputError(ValueError):
    """A counts sextet whose denominator sum is zero has no ratio R."""


# Accepted spellings of the two counting modes.
MODE_COINCIDENCE = "coincidence-normalized"
MODE_SINGLES = "singles"
_MODE_ALIASES = {
    "coincidence": MODE_COINCIDENCE,
    "coincidence-normalized": MODE_COINCIDENCE,
    "singles": MODE_SINGLES,
}


def normalize_mode(mode):
    try:
        return _MODE_ALIASES[str(mode).lower()]
    except KeyError:
        raise ModelError(
            f"mode must be one of {sorted(set(_MODE_ALIASES))}, got {mode!r}"
        ) from None


@dataclass(frozen=True)
class AnalyzerQuad:
    """The four analyzer angles (theta1, theta2, theta1', theta2') in degrees.

    Stored reduced mod 180.
    """

    theta1: float
    theta2: float
    theta1_prime: float
    theta2_prime: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta1_prime", "theta2_prime"):
            object.__setattr__(self, name, reduce_angle(getattr(self, name)))

    @classmethod
    def from_iterable(cls, angles):
        t = tuple(angles)
        if len(t) != 4:
            raise ModelError(f"a quad needs exactly 4 angles, got {len(t)}")
        return cls(*t)

    def as_tuple(self):
        return (self.theta1, self.theta2, self.theta1_prime, self.theta2_prime)

    def settings(self):
        """The six analyzer settings in measurement order, ABSENT for inf."""
        t1, t2, t1p, t2p = self.as_tuple()
        return (
            (t1, t2),
            (t1, t2p),
            (t1p, t2),
            (t1p, t2p),
            (t1p, ABSENT),
            (ABSENT, t2),
        )


@dataclass(frozen=True)
class CountsSextet:
    """Six coincidence counts (or rates), optionally with Poisson sigmas.

    Field order follows the CH sum: n_ab, n_ab_prime, n_a_prime_b,
    n_a_prime_b_prime, then the removed-analyzer terms n_a_prime_inf and
    n_inf_b. Values are non-negative reals so that per-pair probabilities
    and integer counts share one code path.
    """

    n_ab: float
    n_ab_prime: float
    n_a_prime_b: float
    n_a_prime_b_prime: float
    n_a_prime_inf: float
    n_inf_b: float
    sigmas: tuple | None = None

    _FIELDS = (
        "n_ab",
        "n_ab_prime",
        "n_a_prime_b",
        "n_a_prime_b_prime",
        "n_a_prime_inf",
        "n_inf_b",
    )

    def __post_init__(self):
        for name in self._FIELDS:
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0.0):
                raise ModelError(f"count {name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)
        if self.sigmas is not None:
            s = tuple(float(x) for x in self.sigmas)
            if len(s) != 6:
                raise ModelError("sigmas must hold one value per count")
            if any(not math.isfinite(x) or x < 0.0 for x in s):
                raise ModelError("sigmas must be finite and >= 0")
            object.__setattr__(self, "sigmas", s)

    @classmethod
    def poissonized(cls, values):
        """Sextet of counts with sigmas = sqrt(count)."""
        vals = tuple(float(v) for v in values)
        return cls(*vals, sigmas=tuple(math.sqrt(v) for v in vals))

    def as_array(self):
        return np.array([getattr(self, f) for f in self._FIELDS], dtype=float)

    @property
    def has_sigmas(self):
        return self.sigmas is not None


@dataclass(frozen=True)
class CHReport:
    """CH sum and ratio R with first-order Poisson uncertainties.

    sigma fields are None when the input sextet carried no uncertainties.
    """

    ch: float
    sigma_ch: float | None
    r: float
    sigma_r: float | None


_SIGNS = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])


def ch_sum(counts: CountsSextet) -> CHReport:
    """Evaluate the CH combination and the ratio R of a counts sextet.

    sigma_ch is the square root of the summed variances (the six signs all
    square to one); sigma_r follows from first-order propagation of the
    quotient. Raises DegenerateInputError when the denominator sum is zero,
    since the report's R field would be undefined.
    """
    n = counts.as_array()
    ch = float(_SIGNS @ n)
    num = float(n[:4] @ _SIGNS[:4])
    den = float(n[4] + n[5])
    if den <= 0.0:
        raise DegenerateInputError(
            "denominator counts N(t1',inf) + N(inf,t2) sum to zero"
        )
    r = num / den
    sigma_ch = sigma_r = None
    if counts.has_sigmas:
        var = np.asarray(counts.sigmas, dtype=float) ** 2
        sigma_ch = float(math.sqrt(var.sum()))
        var_num = float(var[:4].sum())
        var_den = float(var[4] + var[5])
        sigma_r = math.sqrt(var_num + r * r * var_den) / den
    return CHReport(ch=ch, sigma_ch=sigma_ch, r=r, sigma_r=sigma_r)


def ratio_r(counts: CountsSextet) -> float:
    """The ratio R alone; see ch_sum for the uncertainty-carrying report."""
    return ch_sum(counts).r


def qm_counts(state, quad, pol=None, det=None, mode=MODE_COINCIDENCE):
    """Expected counts sextet for a quad under the quantum model.

    In coincidence-normalized mode all six terms are two-detector
    coincidences, the removed-analyzer ones with that analyzer transparent;
    every term carries eta1*eta2, so R is efficiency-independent. In
    singles mode the two removed-analyzer terms are true single-arm counts
    (proportional to eta_i), the construction under which the CH violation
    acquires its efficiency dependence.

    With the default unit detector (pair_rate=1, duration=1, eta=1) the
    entries are per-pair probabilities.
    """
    mode = normalize_mode(mode)
    pol = pol or PolarizerModel.ideal()
    det = det or DetectionModel.ideal()
    t1, t2, t1p, t2p = quad.as_tuple()
    joint_settings = quad.settings()[:4]
    values = [
        qm.coincidence_rate(state, a, b, pol, det) * det.duration
        for a, b in joint_settings
    ]
    if mode == MODE_COINCIDENCE:
        values.append(
            qm.coincidence_rate(state, t1p, ABSENT, pol, det) * det.duration
        )
        values.append(qm.coincidence_rate(state, ABSENT, t2, pol, det) * det.duration)
    else:
        values.append(qm.singles_rate(state, t1p, 1, pol, det) * det.duration)
        values.append(qm.singles_rate(state, t2, 2, pol, det) * det.duration)
    return CountsSextet(*values)


def lhv_strategies():
    """All 16 deterministic local strategies and their normalized CH values.

    A strategy fixes pass/fail outcomes (a1, a2) for the two settings on
    arm 1 and (b1, b2) on arm 2. The normalized CH expression with unit
    singles is a1*b1 - a1*b2 + a2*b1 + a2*b2 - a2 - b1. Yields tuples
    ((a1, a2, b1, b2), value).
    """
    for a1, a2, b1, b2 in itertools.product((0, 1), repeat=4):
        value = a1 * b1 - a1 * b2 + a2 * b1 + a2 * b2 - a2 - b1
        yield (a1, a2, b1, b2), float(value)


def lhv_extrema():
    """(max, min) of the normalized CH value over deterministic strategies.

    By convexity these bound every local hidden variable model.
    """
    values = [v for _, v in lhv_strategies()]
    return max(values), min(values)


def lhv_mixture_extrema(n_samples, seed=0):
    """(max, min) CH over random convex mixtures of the 16 strategies.

    Weights are drawn uniformly from the simplex (flat Dirichlet). Since
    the CH value is linear in the strategy distribution, every mixture must
    stay within the deterministic extrema; this is the randomized check.
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ModelError("need at least one mixture sample")
    vertex_values = np.array([v for _, v in lhv_strategies()])
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(vertex_values.size), size=n_samples)
    mixed = weights @ vertex_values
    return float(mixed.max()), float(mixed.min())
