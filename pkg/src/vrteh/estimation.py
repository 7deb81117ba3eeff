"""Variability ratio (VR) effect size from two arms.

The point estimate is the bias-corrected log ratio of sample SDs,

    ln VR = ln(s1/s0) + 1/(2(n1 - 1)) - 1/(2(n0 - 1)),

with sampling variance ``1/(2(n1 - 1)) + 1/(2(n0 - 1))``.  Some texts print
the variance with a minus sign between the two terms; that form is zero for
balanced arms and negative when ``n0 < n1``, so the sum is used here.
Confidence intervals are Wald intervals on the log scale, exponentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernels import ndtri_scalar


class DegenerateArmError(ValueError):
    """An arm has too few units or zero spread, so ln VR is undefined."""


@dataclass(frozen=True)
class ArmSummary:
    n: int
    sd: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DegenerateArmError(f"arm needs n >= 2 units, got n={self.n!r}")
        if not (self.sd >= 0 and math.isfinite(self.sd)):
            raise ValueError(f"sd must be non-negative and finite, got {self.sd!r}")


@dataclass(frozen=True)
class VrEstimate:
    ln_vr: float
    se_ln_vr: float
    vr: float
    ci_level: float
    ci_low: float
    ci_high: float

    def as_dict(self) -> dict:
        return {
            "ln_vr": self.ln_vr,
            "se_ln_vr": self.se_ln_vr,
            "vr": self.vr,
            "ci_level": self.ci_level,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def sample_sd(values: Sequence[float], denominator_offset: int = 1) -> float:
    """Standard deviation with divisor ``len(values) - denominator_offset``.

    Parameters
    ----------
    values : sequence of float
    denominator_offset : {0, 1}
        0 gives the population SD, 1 the usual sample SD.
    """
    if denominator_offset not in (0, 1):
        raise ValueError("denominator_offset must be 0 or 1")
    x = np.asarray(values, dtype=np.float64).ravel()
    need = 2 if denominator_offset == 1 else 1
    if x.size < need:
        raise DegenerateArmError(
            f"SD undefined for {x.size} value(s) with denominator offset {denominator_offset}"
        )
    d = x - x.mean()
    return math.sqrt(float(np.dot(d, d)) / (x.size - denominator_offset))


def normal_quantile(p: float) -> float:
    """Standard-normal quantile (AS241 rational approximation)."""
    return ndtri_scalar(p)


def ln_vr_point(treat: ArmSummary, ctrl: ArmSummary) -> float:
    if treat.sd <= 0 or ctrl.sd <= 0:
        side = "treatment" if treat.sd <= 0 else "control"
        raise DegenerateArmError(f"{side} arm has zero standard deviation")
    return math.log(treat.sd / ctrl.sd) + 1.0 / (2 * (treat.n - 1)) - 1.0 / (2 * (ctrl.n - 1))


def ln_vr_se(treat_n: int, ctrl_n: int) -> float:
    if treat_n < 2 or ctrl_n < 2:
        raise DegenerateArmError(f"need n >= 2 in both arms, got {treat_n} and {ctrl_n}")
    return math.sqrt(1.0 / (2 * (treat_n - 1)) + 1.0 / (2 * (ctrl_n - 1)))


def estimate(treat: ArmSummary, ctrl: ArmSummary, ci_level: float = 0.95) -> VrEstimate:
    """ln VR, its standard error, VR and a log-scale Wald interval."""
    if not (0.0 < ci_level < 1.0):
        raise ValueError(f"ci_level must lie in (0, 1), got {ci_level!r}")
    ln_vr = ln_vr_point(treat, ctrl)
    se = ln_vr_se(treat.n, ctrl.n)
    z = normal_quantile(0.5 + ci_level / 2.0)
    return VrEstimate(
        ln_vr=ln_vr,
        se_ln_vr=se,
        vr=math.exp(ln_vr),
        ci_level=ci_level,
        ci_low=math.exp(ln_vr - z * se),
        ci_high=math.exp(ln_vr + z * se),
    )


def summarize_arm(values: Sequence[float]) -> ArmSummary:
    x = np.asarray(values, dtype=np.float64).ravel()
    return ArmSummary(n=int(x.size), sd=sample_sd(x, 1))


def estimate_from_raw(treat_values: Sequence[float], ctrl_values: Sequence[float],
                      ci_level: float = 0.95) -> VrEstimate:
    return estimate(summarize_arm(treat_values), summarize_arm(ctrl_values), ci_level)
