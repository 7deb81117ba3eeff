import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from vrteh.estimation import (
    ArmSummary,
    DegenerateArmError,
    estimate,
    estimate_from_raw,
    ln_vr_point,
    ln_vr_se,
    normal_quantile,
    sample_sd,
)

# frozen from 40-digit mpmath evaluation of the closed forms
LN_VR_EXAMPLE = 0.18732155679395462
SE_EXAMPLE = 0.12247448713915890
CI_EXAMPLE = (0.94864177585504836, 1.5332154640672752)


def test_sample_sd_examples():
    assert sample_sd([1, 1, 1], 1) == 0
    assert sample_sd([0, 2], 1) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert sample_sd([0, 2], 0) == 1.0


@pytest.mark.parametrize("values, offset", [([], 0), ([1.0], 1)])
def test_sample_sd_insufficient(values, offset):
    with pytest.raises(DegenerateArmError):
        sample_sd(values, offset)


def test_ln_vr_point_examples():
    assert ln_vr_point(ArmSummary(50, 1), ArmSummary(50, 1)) == 0
    assert ln_vr_point(ArmSummary(51, 1.2), ArmSummary(101, 1.0)) == pytest.approx(LN_VR_EXAMPLE, abs=1e-15)
    assert ln_vr_point(ArmSummary(11, 1), ArmSummary(101, 1)) == pytest.approx(0.045, abs=1e-15)


def test_ln_vr_point_degenerate():
    with pytest.raises(DegenerateArmError):
        ln_vr_point(ArmSummary(50, 0.0), ArmSummary(50, 1.0))
    with pytest.raises(DegenerateArmError):
        ln_vr_point(ArmSummary(50, 1.0), ArmSummary(50, 0.0))


def test_ln_vr_se_examples():
    assert ln_vr_se(51, 101) == pytest.approx(SE_EXAMPLE, abs=1e-15)
    assert ln_vr_se(2, 2) == 1.0
    for n in (3, 17, 500):
        assert ln_vr_se(n, n) == pytest.approx(math.sqrt(1 / (n - 1)), rel=1e-15)
    with pytest.raises(DegenerateArmError):
        ln_vr_se(1, 10)


def test_estimate_example():
    est = estimate(ArmSummary(51, 1.2), ArmSummary(101, 1.0), 0.95)
    assert est.ln_vr == pytest.approx(LN_VR_EXAMPLE, abs=1e-15)
    assert est.se_ln_vr == pytest.approx(SE_EXAMPLE, abs=1e-15)
    assert (est.ci_low, est.ci_high) == pytest.approx(CI_EXAMPLE, rel=1e-13)
    assert est.vr == math.exp(est.ln_vr)


def test_estimate_balanced_is_symmetric_on_log_scale():
    est = estimate(ArmSummary(50, 1), ArmSummary(50, 1), 0.95)
    assert est.vr == 1.0
    assert math.log(est.ci_low) == pytest.approx(-math.log(est.ci_high), rel=1e-14)


def test_estimate_degenerate_and_level():
    with pytest.raises(DegenerateArmError):
        estimate(ArmSummary(50, 0), ArmSummary(50, 1), 0.95)
    with pytest.raises(ValueError):
        estimate(ArmSummary(50, 1), ArmSummary(50, 1), 1.0)


def test_estimate_from_raw_examples():
    assert estimate_from_raw([0, 2, 4], [1, 3, 5]).vr == 1.0
    assert estimate_from_raw([0, 4, 8], [1, 3, 5]).ln_vr == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(DegenerateArmError):
        estimate_from_raw([5, 5, 5], [1, 2, 3])
    with pytest.raises(DegenerateArmError):
        estimate_from_raw([5], [1, 2, 3])


@pytest.mark.parametrize("p", [1e-300, 1e-20, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999, 1 - 1e-16])
def test_normal_quantile_against_scipy(p):
    assert abs(normal_quantile(p) - special.ndtri(p)) < 1e-9


arm = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=30).filter(
    lambda v: np.std(v) > 1e-3)


@given(arm, arm, st.floats(0.01, 100))
def test_scale_equivariance(t, c, k):
    base = estimate_from_raw(t, c).ln_vr
    assert estimate_from_raw(np.multiply(t, k), c).ln_vr == pytest.approx(base + math.log(k), abs=1e-9)
    assert estimate_from_raw(t, np.multiply(c, k)).ln_vr == pytest.approx(base - math.log(k), abs=1e-9)


@given(arm, arm)
def test_arm_swap_antisymmetry(t, c):
    assert estimate_from_raw(c, t).ln_vr == pytest.approx(-estimate_from_raw(t, c).ln_vr, abs=1e-12)


@given(arm, arm, st.floats(-1e3, 1e3))
def test_shift_invariance(t, c, shift):
    a = estimate_from_raw(t, c)
    b = estimate_from_raw(np.add(t, shift), c)
    assert b.ln_vr == pytest.approx(a.ln_vr, abs=1e-6)
    assert b.se_ln_vr == a.se_ln_vr


@given(st.integers(2, 10_000), st.floats(0.01, 100), st.integers(2, 10_000), st.floats(0.01, 100),
       st.floats(0.5, 0.999))
def test_ci_contains_point(n1, s1, n0, s0, level):
    est = estimate(ArmSummary(n1, s1), ArmSummary(n0, s0), level)
    assert est.ci_low <= est.vr <= est.ci_high


@pytest.mark.slow
def test_bias_correction_monte_carlo():
    rng = np.random.default_rng(20240501)
    reps = 200_000
    s1 = rng.standard_normal((reps, 10)).std(axis=1, ddof=1)
    s0 = rng.standard_normal((reps, 40)).std(axis=1, ddof=1)
    naive = np.log(s1 / s0)
    corrected = naive + 1 / 18 - 1 / 78
    assert abs(corrected.mean()) < abs(naive.mean())
    assert abs(corrected.mean()) < 0.005


@pytest.mark.slow
def test_ci_coverage_monte_carlo():
    rng = np.random.default_rng(7)
    ratio = 1.5
    reps, n = 10_000, 50
    t = rng.standard_normal((reps, n)) * ratio
    c = rng.standard_normal((reps, n))
    hits = 0
    for s1, s0 in zip(t.std(axis=1, ddof=1), c.std(axis=1, ddof=1)):
        est = estimate(ArmSummary(n, float(s1)), ArmSummary(n, float(s0)), 0.95)
        hits += est.ci_low <= ratio <= est.ci_high
    assert 0.93 <= hits / reps <= 0.97
