"""Potential-outcomes decomposition and population variance identities.

A unit's endpoint score under arm ``a`` decomposes as
``alpha + tau + a*delta``: baseline, change under control, and the
individual treatment effect.  Every other module works on the response
scale (endpoint minus baseline), where ``alpha`` cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class UnitPotentialOutcomes:
    """One unit's decomposed potential outcomes.

    Baseline is shared by both arms (no effect at baseline), so there is a
    single ``alpha`` per unit.
    """

    alpha: float
    tau: float
    delta: float


@dataclass(frozen=True)
class PopulationMoments:
    """Population SDs of ``tau`` and ``delta`` and their correlation."""

    sigma_tau: float
    sigma_delta: float
    rho: float

    def __post_init__(self):
        if not (self.sigma_tau > 0 and math.isfinite(self.sigma_tau)):
            raise ValueError(f"sigma_tau must be a positive finite number, got {self.sigma_tau!r}")
        if not (self.sigma_delta >= 0 and math.isfinite(self.sigma_delta)):
            raise ValueError(f"sigma_delta must be non-negative and finite, got {self.sigma_delta!r}")
        if not (-1.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho!r}")

    @property
    def treated_variance(self) -> float:
        """Variance of the treated response ``tau + delta``."""
        return self.sigma_tau ** 2 + variance_gap(self)


def _check_arm(arm):
    if arm not in (0, 1):
        raise ValueError(f"arm must be 0 or 1, got {arm!r}")


def endpoint_score(u: UnitPotentialOutcomes, arm: int) -> float:
    _check_arm(arm)
    return u.alpha + u.tau + arm * u.delta


def response_from_scores(endpoint: float, baseline: float) -> float:
    return endpoint - baseline


def response(u: UnitPotentialOutcomes, arm: int) -> float:
    """Response under ``arm`` computed from the endpoint score; ``alpha`` cancels."""
    return response_from_scores(endpoint_score(u, arm), u.alpha)


def variance_gap(m: PopulationMoments) -> float:
    """``Var(tau + delta) - Var(tau)`` for the given moments.

    Equals ``sigma_delta**2 + 2*rho*sigma_tau*sigma_delta``.
    """
    return m.sigma_delta * (m.sigma_delta + 2.0 * m.rho * m.sigma_tau)
