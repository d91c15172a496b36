"""Optimizer tests: canonical angle quads, closed-form maxima, thresholds."""

import math

import numpy as np
import pytest

from bell_lab import (
    DetectionModel,
    EntangledState,
    MODE_SINGLES,
    ModelError,
    NoThresholdError,
    PolarizerModel,
    critical_efficiency,
    ideal_ch_max,
    optimize_angles,
    scan_f,
)

ETA_STAR_MAXIMAL = 2.0 / (1.0 + math.sqrt(2.0))


def test_closed_form_maximum():
    assert ideal_ch_max(1.0) == pytest.approx((math.sqrt(2.0) - 1.0) / 2.0, abs=1e-15)
    assert ideal_ch_max(0.0) == pytest.approx(0.0, abs=1e-15)
    # lambda = 2f/(1+f^2) parametrizes the correlation strength
    f = 0.37
    lam = 2.0 * f / (1.0 + f * f)
    assert ideal_ch_max(f) == pytest.approx(
        0.5 * (math.sqrt(1.0 + lam * lam) - 1.0), abs=1e-15
    )


def test_maximal_state_optimum_is_canonical():
    result = optimize_angles(EntangledState(1.0))
    assert result.converged
    got = np.array(result.quad.as_tuple())
    assert np.max(np.abs(got - np.array([67.5, 45.0, 22.5, 0.0]))) < 1e-3
    assert result.ch_max == pytest.approx((math.sqrt(2.0) - 1.0) / 2.0, abs=1e-9)
    assert result.r_at_max == pytest.approx((1.0 + math.sqrt(2.0)) / 2.0, abs=1e-8)


def test_non_maximal_state_optimum():
    result = optimize_angles(EntangledState(0.4))
    assert result.converged
    got = np.array(result.quad.as_tuple())
    want = np.array([72.70385565624503, 45.0, 17.29614434375497, 0.0])
    assert np.max(np.abs(got - want)) < 1e-3
    assert result.ch_max == pytest.approx(ideal_ch_max(0.4), abs=1e-9)
    assert result.r_at_max > 1.14


def test_optimum_matches_closed_form_across_f():
    for f in (0.2, 0.4, 1.0):
        result = optimize_angles(EntangledState(f))
        assert result.ch_max == pytest.approx(ideal_ch_max(f), abs=1e-9), f


def test_product_state_cannot_violate():
    result = optimize_angles(EntangledState(0.0))
    assert result.converged
    assert abs(result.ch_max) < 1e-9


def test_inversion_symmetry_of_the_maximum():
    a = optimize_angles(EntangledState(0.4)).ch_max
    b = optimize_angles(EntangledState(2.5)).ch_max
    assert a == pytest.approx(b, abs=1e-9)


def test_optimizer_is_deterministic():
    r1 = optimize_angles(EntangledState(0.63))
    r2 = optimize_angles(EntangledState(0.63))
    assert r1.quad.as_tuple() == r2.quad.as_tuple()
    assert r1.ch_max == r2.ch_max
    assert r1.evaluations == r2.evaluations


def test_coarser_grid_still_reaches_the_maximum():
    result = optimize_angles(EntangledState(0.4), grid_deg=9.0)
    assert result.ch_max == pytest.approx(ideal_ch_max(0.4), abs=1e-9)


def test_budget_is_respected():
    with pytest.raises(ModelError):
        optimize_angles(EntangledState(1.0), budget=4)
    starved = optimize_angles(EntangledState(1.0), budget=8)
    assert not starved.converged
    healthy = optimize_angles(EntangledState(1.0))
    assert healthy.evaluations <= 20000


def test_lossy_polarizers_lower_the_maximum():
    pol = PolarizerModel.symmetric(0.9, 0.02)
    lossy = optimize_angles(EntangledState(1.0), pol=pol)
    assert lossy.converged
    assert lossy.ch_max < ideal_ch_max(1.0)


def test_singles_mode_sign_flips_around_threshold():
    state = EntangledState(1.0)
    below = optimize_angles(
        state, mode=MODE_SINGLES, det=DetectionModel(eta_1=0.7, eta_2=0.7)
    )
    above = optimize_angles(
        state, mode=MODE_SINGLES, det=DetectionModel(eta_1=0.95, eta_2=0.95)
    )
    assert below.ch_max < 0.0
    assert above.ch_max > 0.0


def test_scan_f_is_monotone_in_f():
    report = scan_f([0.0, 0.4, 1.0])
    assert report.ch_nondecreasing
    assert report.violations == ()
    values = [r.ch_max for r in report.results]
    assert values[0] == pytest.approx(0.0, abs=1e-9)
    assert values[2] == pytest.approx(ideal_ch_max(1.0), abs=1e-9)
    assert values[0] < values[1] < values[2]


def test_critical_efficiency_maximal_state():
    threshold = critical_efficiency(1.0, tol=1e-3)
    assert abs(threshold.eta_star - ETA_STAR_MAXIMAL) <= 1e-3
    assert threshold.f == 1.0
    quad = np.array(threshold.quad_at_threshold.as_tuple())
    assert np.max(np.abs(quad - np.array([67.5, 45.0, 22.5, 0.0]))) < 0.1


def test_critical_efficiency_weak_state_limit():
    # as f -> 0 the threshold approaches 2/3
    threshold = critical_efficiency(0.01, tol=1e-3)
    assert threshold.eta_star == pytest.approx(2.0 / 3.0, abs=0.01)


def test_no_threshold_cases():
    with pytest.raises(NoThresholdError):
        critical_efficiency(0.0)
    with pytest.raises(NoThresholdError):
        critical_efficiency(1.5)
    with pytest.raises(NoThresholdError):
        critical_efficiency(1.0, background=1.0)
