"""Identification of TEH from the variability ratio.

On the response scale, with ``r = nu**2 - 1`` and ``g = sigma_delta/sigma_tau``,

    r = g**2 + 2*rho*g = (g + rho)**2 - rho**2,

so ``r >= -rho**2`` is necessary and the compatible values are
``g = +-sqrt(r + rho**2) - rho``, keeping only non-negative roots.

* ``r > 0``: exactly one root (the ``+`` branch).
* ``r == 0``: ``rho >= 0`` gives ``g = 0``; ``rho < 0`` gives ``{0, -2*rho}``.
* ``-rho**2 < r < 0``: two roots when ``rho < 0``, none when ``rho >= 0``.
* ``r == -rho**2`` with ``rho < 0``: a double root ``g = -rho``.

Over all ``rho`` in [-1, 1] the roots satisfy ``|1 - nu| <= g <= 1 + nu``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import PopulationMoments, variance_gap

#: Relative slack on ``r >= -rho**2``; within it the root is clamped to the double root.
FEASIBILITY_TOL = 1e-12


class RegionClass(enum.Enum):
    INFEASIBLE = "INFEASIBLE"
    UNIQUE = "UNIQUE"
    DUAL = "DUAL"
    BOUNDARY_DUAL = "BOUNDARY_DUAL"

    @property
    def n_solutions(self) -> int:
        return {"INFEASIBLE": 0, "UNIQUE": 1, "DUAL": 2, "BOUNDARY_DUAL": 1}[self.value]


# integer codes used by the vectorised paths, in RegionClass declaration order
_CODES = tuple(RegionClass)
_INFEASIBLE, _UNIQUE, _DUAL, _BOUNDARY = range(4)


@dataclass(frozen=True)
class SolveInput:
    nu: float
    sigma_tau: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be non-negative and finite, got {self.nu!r}")
        if not (self.sigma_tau > 0 and math.isfinite(self.sigma_tau)):
            raise ValueError(f"sigma_tau must be positive and finite, got {self.sigma_tau!r}")
        if not (-1.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho!r}")


@dataclass(frozen=True)
class Solution:
    sigma_delta: float
    branch: str  # "plus" or "minus"


@dataclass(frozen=True)
class SolutionSet:
    feasible: bool
    solutions: tuple[Solution, ...] = ()
    region: RegionClass = RegionClass.INFEASIBLE

    @property
    def values(self) -> list[float]:
        return [s.sigma_delta for s in self.solutions]

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "region": self.region.value,
            "solutions": [{"sigma_delta": s.sigma_delta, "branch": s.branch} for s in self.solutions],
        }


@dataclass(frozen=True)
class RegionGrid:
    """Band membership over a ``(rho, teh_ratio)`` grid; rows follow ``rho``."""

    nu_low: float
    nu_high: float
    rho: np.ndarray
    teh_ratio: np.ndarray
    nu: np.ndarray = field(repr=False)
    member: np.ndarray = field(repr=False)


def _classify_arrays(r, rho):
    r = np.asarray(r, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    rho2 = rho * rho
    disc = r + rho2
    tol = FEASIBILITY_TOL * np.maximum(1.0, rho2)
    code = np.full(np.broadcast(r, rho).shape, _UNIQUE, dtype=np.int8)
    neg = r < 0
    code[neg & (rho < 0)] = _DUAL
    code[neg & (rho < 0) & (np.abs(disc) <= tol)] = _BOUNDARY
    code[(r == 0) & (rho < 0)] = _DUAL
    code[(disc < -tol) | (neg & (rho > 0))] = _INFEASIBLE
    return code


def _solve_arrays(nu, sigma_tau, rho):
    """Vectorised solver: returns ``(code, low, high)`` with NaN for absent roots."""
    nu = np.asarray(nu, dtype=np.float64)
    sigma_tau = np.asarray(sigma_tau, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    r = nu * nu - 1.0
    code = _classify_arrays(r, rho)
    code, sigma_tau, rho, r = np.broadcast_arrays(code, sigma_tau, rho, r)
    s = np.sqrt(np.maximum(r + rho * rho, 0.0))
    s = np.where(code == _BOUNDARY, 0.0, s)
    plus = sigma_tau * (s - rho)
    minus = sigma_tau * (-s - rho)
    # r == 0, rho < 0: the lower root is exactly zero
    minus = np.where((r == 0) & (rho < 0), 0.0, minus)
    plus = np.where((r == 0) & (rho < 0), -2.0 * rho * sigma_tau, plus)

    high = np.where(code == _INFEASIBLE, np.nan, plus)
    low = np.where(code == _DUAL, minus, high)
    return code, low, high


def nu_from_teh(m: PopulationMoments) -> float:
    """Variability ratio implied by the population moments."""
    return math.sqrt(max(0.0, 1.0 + variance_gap(m) / m.sigma_tau ** 2))


def nu_from_teh_array(teh_ratio, rho):
    """Vectorised ``nu`` for ``sigma_tau = 1`` and ``sigma_delta = teh_ratio``."""
    g = np.asarray(teh_ratio, dtype=np.float64)
    return np.sqrt(np.maximum(0.0, 1.0 + g * (g + 2.0 * np.asarray(rho, dtype=np.float64))))


def _to_solution_set(code, low, high) -> SolutionSet:
    region = _CODES[int(code)]
    if region is RegionClass.INFEASIBLE:
        return SolutionSet(False, (), region)
    if region is RegionClass.DUAL:
        sols = (Solution(float(low), "minus"), Solution(float(high), "plus"))
    else:
        sols = (Solution(float(high), "plus"),)
    return SolutionSet(True, sols, region)


def solve_sigma_delta(inp: SolveInput) -> SolutionSet:
    """All non-negative ``sigma_delta`` compatible with ``(nu, sigma_tau, rho)``.

    Examples
    --------
    >>> solve_sigma_delta(SolveInput(nu=1.0, sigma_tau=1.0, rho=-0.5)).values
    [0.0, 1.0]
    """
    code, low, high = _solve_arrays(inp.nu, inp.sigma_tau, inp.rho)
    return _to_solution_set(code, low, high)


def solve(nu: float, sigma_tau: float = 1.0, rho: float = 0.0) -> SolutionSet:
    return solve_sigma_delta(SolveInput(nu, sigma_tau, rho))


def universal_bounds(nu: float) -> tuple[float, float]:
    """Bounds on ``sigma_delta/sigma_tau`` valid for every ``rho`` in [-1, 1]."""
    if not nu >= 0:
        raise ValueError(f"nu must be non-negative, got {nu!r}")
    return abs(1.0 - nu), 1.0 + nu


def classify_region(r: float, rho: float) -> RegionClass:
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"rho must lie in [-1, 1], got {rho!r}")
    return _CODES[int(_classify_arrays(r, rho))]


def curve_nu_vs_teh(rho: float, teh_ratio_grid: Sequence[float]) -> np.ndarray:
    """``(teh_ratio, nu)`` rows for a fixed ``rho`` at ``sigma_tau = 1``."""
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"rho must lie in [-1, 1], got {rho!r}")
    g = np.asarray(teh_ratio_grid, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("teh_ratio grid values must be non-negative")
    return np.column_stack([g, nu_from_teh_array(g, rho)])


def curve_rho_vs_teh(nu: float, rho_grid: Sequence[float]) -> list[tuple[float, SolutionSet]]:
    """Solution sets along ``rho`` for a fixed ``nu`` at ``sigma_tau = 1``."""
    SolveInput(nu)  # validates nu
    rho = np.asarray(rho_grid, dtype=np.float64)
    if np.any(np.abs(rho) > 1):
        raise ValueError("rho grid values must lie in [-1, 1]")
    codes, low, high = _solve_arrays(nu, 1.0, rho)
    return [(float(p), _to_solution_set(c, lo, hi)) for p, c, lo, hi in zip(rho, codes, low, high)]


def band_region(nu_low: float, nu_high: float, rho_grid: Sequence[float],
                teh_grid: Sequence[float]) -> RegionGrid:
    """Cells whose implied ``nu`` lies strictly inside ``(nu_low, nu_high)``."""
    if not (0 <= nu_low < nu_high):
        raise ValueError(f"need 0 <= nu_low < nu_high, got ({nu_low!r}, {nu_high!r})")
    rho = np.asarray(rho_grid, dtype=np.float64)
    g = np.asarray(teh_grid, dtype=np.float64)
    nu = nu_from_teh_array(g[None, :], rho[:, None])
    return RegionGrid(nu_low, nu_high, rho, g, nu, (nu > nu_low) & (nu < nu_high))
