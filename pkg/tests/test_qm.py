"""Probability-model tests: transmissions, joint/single probabilities, fringes.

The randomized suites draw at least 1e4 parameter sets each and check the
structural identities of the model at tolerance 1e-10.
"""

import math

import numpy as np
import pytest

from bell_lab import (
    ABSENT,
    DetectionModel,
    EntangledState,
    ModelError,
    PolarizerModel,
    SaturationError,
    arm_pass_probability,
    coincidence_rate,
    fit_fringe,
    fringe_scan,
    joint_pass_probability,
    single_pass_probability,
    singles_rate,
    visibility,
)

N_DRAWS = 10_000
TOL = 1e-10


def _random_pols(rng, n):
    """n random physical polarizer pairs, 0 <= eps_perp <= eps_par <= 1."""
    par = rng.uniform(0.05, 1.0, size=(n, 2))
    perp = par * rng.uniform(0.0, 1.0, size=(n, 2))
    return [PolarizerModel(p1, q1, p2, q2) for (p1, p2), (q1, q2) in zip(par, perp)]


# ---------------------------------------------------------------- fixed values

def test_joint_probability_known_point():
    s = EntangledState(0.4)
    got = joint_pass_probability(s, 72.24, 45.0, PolarizerModel.ideal())
    assert got == pytest.approx(0.4975164661556222, abs=1e-12)


def test_single_probability_known_point():
    s = EntangledState(0.4)
    got = single_pass_probability(s, 17.76, 1, PolarizerModel.ideal())
    assert got == pytest.approx(0.20530744708615556, abs=1e-12)


def test_maximal_state_joint_depends_on_angle_difference():
    # at f=1 the ideal joint probability is cos^2(theta1 - theta2) / 2
    s = EntangledState(1.0)
    rng = np.random.default_rng(11)
    t1 = rng.uniform(0.0, 180.0, N_DRAWS)
    t2 = rng.uniform(0.0, 180.0, N_DRAWS)
    got = joint_pass_probability(s, t1, t2)
    want = 0.5 * np.cos(np.radians(t1 - t2)) ** 2
    assert np.max(np.abs(got - want)) < TOL


def test_product_state_probabilities():
    # f=0 is |HH>; under the sin^2 convention the ideal single-arm pass
    # probability is sin^2(theta) and the joint factorizes exactly
    s = EntangledState(0.0)
    assert s.is_product
    assert single_pass_probability(s, 30.0, 1) == pytest.approx(
        math.sin(math.radians(30.0)) ** 2, abs=1e-15
    )
    assert joint_pass_probability(s, 30.0, 70.0) == pytest.approx(
        math.sin(math.radians(30.0)) ** 2 * math.sin(math.radians(70.0)) ** 2,
        abs=1e-15,
    )


# ------------------------------------------------------------ property suites

def test_normalization_over_pass_fail_outcomes():
    # ideal polarizers: the four joint outcomes obtained by rotating either
    # analyzer by 90 deg are an exhaustive partition and sum to 1
    rng = np.random.default_rng(101)
    t1 = rng.uniform(0.0, 180.0, N_DRAWS)
    t2 = rng.uniform(0.0, 180.0, N_DRAWS)
    fs = rng.uniform(0.0, 3.0, N_DRAWS)
    worst = 0.0
    for f in np.unique(np.round(fs, 2))[:50]:
        s = EntangledState(float(f))
        total = (
            joint_pass_probability(s, t1, t2)
            + joint_pass_probability(s, t1 + 90.0, t2)
            + joint_pass_probability(s, t1, t2 + 90.0)
            + joint_pass_probability(s, t1 + 90.0, t2 + 90.0)
        )
        worst = max(worst, float(np.max(np.abs(total - 1.0))))
    assert worst < TOL


def test_marginal_trace_consistency():
    # summing the joint over a 90 deg-rotated partner analyzer recovers the
    # single-arm probability, for every f and both arms (ideal polarizers)
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(40):
        s = EntangledState(float(rng.uniform(0.0, 3.0)))
        t1 = rng.uniform(0.0, 180.0, N_DRAWS // 40 + 1)
        t2 = rng.uniform(0.0, 180.0, t1.size)
        lhs1 = joint_pass_probability(s, t1, t2) + joint_pass_probability(
            s, t1, t2 + 90.0
        )
        lhs2 = joint_pass_probability(s, t1, t2) + joint_pass_probability(
            s, t1 + 90.0, t2
        )
        worst = max(
            worst,
            float(np.max(np.abs(lhs1 - single_pass_probability(s, t1, 1)))),
            float(np.max(np.abs(lhs2 - single_pass_probability(s, t2, 2)))),
        )
    assert worst < TOL


def test_f_inversion_symmetry():
    # swapping H and V in both arms maps f -> 1/f and theta -> 90 - theta;
    # the joint probability is invariant, for arbitrary real polarizers
    rng = np.random.default_rng(303)
    pols = _random_pols(rng, 25)
    worst = 0.0
    for pol in pols:
        f = float(rng.uniform(0.05, 3.0))
        t1 = rng.uniform(0.0, 180.0, N_DRAWS // 25 + 1)
        t2 = rng.uniform(0.0, 180.0, t1.size)
        a = joint_pass_probability(EntangledState(f), t1, t2, pol)
        b = joint_pass_probability(EntangledState(1.0 / f), 90.0 - t1, 90.0 - t2, pol)
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst < TOL


def test_product_state_factorizes_with_any_polarizers():
    rng = np.random.default_rng(404)
    s = EntangledState(0.0)
    pols = _random_pols(rng, 25)
    worst = 0.0
    for pol in pols:
        t1 = rng.uniform(0.0, 180.0, N_DRAWS // 25 + 1)
        t2 = rng.uniform(0.0, 180.0, t1.size)
        joint = joint_pass_probability(s, t1, t2, pol)
        product = single_pass_probability(s, t1, 1, pol) * single_pass_probability(
            s, t2, 2, pol
        )
        worst = max(worst, float(np.max(np.abs(joint - product))))
    assert worst < TOL


def test_joint_never_exceeds_either_single():
    rng = np.random.default_rng(505)
    pols = _random_pols(rng, 25)
    for pol in pols:
        f = float(rng.uniform(0.0, 3.0))
        s = EntangledState(f)
        t1 = rng.uniform(0.0, 180.0, N_DRAWS // 25 + 1)
        t2 = rng.uniform(0.0, 180.0, t1.size)
        joint = joint_pass_probability(s, t1, t2, pol)
        s1 = single_pass_probability(s, t1, 1, pol)
        s2 = single_pass_probability(s, t2, 2, pol)
        assert np.all(joint <= np.minimum(s1, s2) + TOL)
        assert np.all(joint >= -TOL)
        assert np.all(joint <= 1.0 + TOL)


def test_angles_reduce_modulo_180():
    s = EntangledState(0.7)
    pol = PolarizerModel(0.9, 0.02, 0.85, 0.01)
    a = joint_pass_probability(s, 200.0, -30.0, pol)
    b = joint_pass_probability(s, 20.0, 150.0, pol)
    assert a == pytest.approx(b, abs=1e-15)


# ---------------------------------------------------------------- odd inputs

def test_state_validation():
    assert EntangledState(1.0).is_maximal
    assert EntangledState(complex(0.0, 1.0)).is_maximal
    assert not EntangledState(0.4).is_maximal
    with pytest.raises(ModelError):
        EntangledState(float("nan"))
    with pytest.raises(ModelError):
        EntangledState(float("inf"))


def test_polarizer_validation():
    with pytest.raises(ModelError):
        PolarizerModel(0.5, 0.9)  # cross above pass axis
    with pytest.raises(ModelError):
        PolarizerModel(1.2, 0.0)
    with pytest.raises(ModelError):
        PolarizerModel(-0.1, -0.2)
    pol = PolarizerModel.symmetric(0.9, 0.02)
    assert pol.arm(1) == (0.9, 0.02)
    assert pol.arm(2) == (0.9, 0.02)


def test_detector_validation():
    with pytest.raises(ModelError):
        DetectionModel(eta_1=1.5)
    with pytest.raises(ModelError):
        DetectionModel(eta_2=-0.1)
    with pytest.raises(ModelError):
        DetectionModel(dark_1=-1.0)


def test_removed_analyzer_passes_everything():
    s = EntangledState(0.4)
    assert arm_pass_probability(s, ABSENT, 1) == 1.0
    assert arm_pass_probability(s, ABSENT, 2, PolarizerModel(0.8, 0.1, 0.8, 0.1)) == 1.0
    with pytest.raises(ModelError):
        joint_pass_probability(s, ABSENT, 45.0)
    with pytest.raises(ModelError):
        single_pass_probability(s, ABSENT, 1)


def test_non_finite_angle_rejected():
    s = EntangledState(1.0)
    with pytest.raises(ModelError):
        joint_pass_probability(s, float("nan"), 45.0)
    with pytest.raises(ModelError):
        single_pass_probability(s, float("inf"), 2)


# ------------------------------------------------------------------- rates

def test_coincidence_rate_composes_pairs_and_accidentals():
    s = EntangledState(0.4)
    pol = PolarizerModel.ideal()
    det = DetectionModel(
        eta_1=0.2,
        eta_2=0.25,
        dark_1=100.0,
        dark_2=50.0,
        pair_rate=1e5,
        window=2e-8,
        duration=1.0,
    )
    p = joint_pass_probability(s, 30.0, 60.0, pol)
    p1 = single_pass_probability(s, 30.0, 1, pol)
    p2 = single_pass_probability(s, 60.0, 2, pol)
    s1 = 1e5 * 0.2 * p1 + 100.0
    s2 = 1e5 * 0.25 * p2 + 50.0
    want = 1e5 * 0.2 * 0.25 * p + s1 * s2 * 2e-8
    got = coincidence_rate(s, 30.0, 60.0, pol, det)
    assert got == pytest.approx(want, rel=1e-12)
    assert singles_rate(s, 30.0, 1, pol, det) == pytest.approx(s1, rel=1e-12)


def test_zero_window_means_no_accidentals():
    s = EntangledState(1.0)
    det = DetectionModel(eta_1=0.5, eta_2=0.5, dark_1=1e6, dark_2=1e6, pair_rate=1e3)
    got = coincidence_rate(s, 45.0, 45.0, det=det)
    assert got == pytest.approx(1e3 * 0.25 * 0.5, rel=1e-12)


def test_saturated_window_raises():
    s = EntangledState(1.0)
    det = DetectionModel(dark_1=1e9, pair_rate=1e3, window=1e-2)
    with pytest.raises(SaturationError):
        coincidence_rate(s, 45.0, 45.0, det=det)


# ------------------------------------------------------------------ fringes

def test_fringe_scan_maximal_state():
    # f=1 fringe is cos^2(theta_f - theta)/2: minimum 0, maximum 0.5
    s = EntangledState(1.0)
    pts = fringe_scan(s, 45.0, arm_fixed=1, n_points=180)
    angles = np.array([a for a, _ in pts])
    probs = np.array([p for _, p in pts])
    assert angles[0] == 0.0 and angles[-1] < 180.0
    want = 0.5 * np.cos(np.radians(45.0 - angles)) ** 2
    assert np.max(np.abs(probs - want)) < 1e-12
    assert probs.min() == pytest.approx(0.0, abs=1e-12)
    assert probs.max() == pytest.approx(0.5, abs=1e-12)
    assert visibility(pts) == pytest.approx(1.0, abs=1e-12)


def test_fringe_scan_product_state_follows_sin_squared():
    s = EntangledState(0.0)
    pts = fringe_scan(s, 90.0, arm_fixed=1, n_points=90)
    angles = np.array([a for a, _ in pts])
    probs = np.array([p for _, p in pts])
    want = np.sin(np.radians(angles)) ** 2  # fixed arm passes with certainty
    assert np.max(np.abs(probs - want)) < 1e-12


def test_fringe_touches_zero_for_any_real_f():
    # the ideal joint probability is (sin t1 sin t2 + f cos t1 cos t2)^2
    # up to normalization, so the fringe dips to an exact zero
    for f, theta_fixed in [(0.4, 45.0), (0.4, 72.24), (1.7, 10.0)]:
        s = EntangledState(f)
        t_zero = math.degrees(
            math.atan2(-f * math.cos(math.radians(theta_fixed)),
                       math.sin(math.radians(theta_fixed)))
        )
        p = joint_pass_probability(s, theta_fixed, t_zero)
        assert p == pytest.approx(0.0, abs=1e-15)


def test_fringe_visibility_is_unity_without_noise():
    # a fit on the noiseless fringe recovers visibility 1 regardless of the
    # discrete grid, because the minimum of the underlying cosine is zero
    s = EntangledState(0.4)
    pts = fringe_scan(s, 72.24, arm_fixed=1, n_points=181)
    assert visibility(pts) > 0.999  # grid-sampled extrema
    fit = fit_fringe([(a, 1e6 * p) for a, p in pts])
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)


def test_fringe_scan_arm_choice_matters():
    s = EntangledState(0.4)
    pol = PolarizerModel(1.0, 0.0, 0.8, 0.05)
    pts1 = fringe_scan(s, 30.0, arm_fixed=1, pol=pol, n_points=45)
    pts2 = fringe_scan(s, 30.0, arm_fixed=2, pol=pol, n_points=45)
    assert not np.allclose([p for _, p in pts1], [p for _, p in pts2])


def test_visibility_input_validation():
    with pytest.raises(ModelError):
        visibility([(0.0, 1.0), (1.0, 2.0)])
    with pytest.raises(ModelError):
        visibility([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
    with pytest.raises(ModelError):
        visibility([(0.0, -1.0), (1.0, 2.0), (2.0, 3.0)])
    flat = [(0.0, 2.0), (60.0, 2.0), (120.0, 2.0)]
    assert visibility(flat) == 0.0
