"""Propagate a prior on the unidentified correlation ``rho`` to ``sigma_delta``.

``nu`` and ``sigma_tau`` are held fixed.  Each prior draw of ``rho`` is
pushed through the exact solver; draws with no compatible ``sigma_delta``
are dropped and their prior mass reported as ``infeasible_mass``.  Where a
draw has two compatible values the ``branch_policy`` decides how they are
weighted:

``equal_weight``
    both roots kept, each with half the draw's weight
``min_only`` / ``max_only``
    only the smaller / larger root, with the full weight

Uniform priors are sampled with ``n_samples`` draws from a PCG64 stream
seeded by ``seed``.  Point and discrete priors are enumerated exactly, one
draw per atom, so ``n_samples`` and ``seed`` do not affect them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import bounds

BRANCH_POLICIES = ("equal_weight", "min_only", "max_only")
INFEASIBLE_POLICIES = ("reject", "error_if_all")


class InfeasiblePriorError(ValueError):
    """No prior mass on ``rho`` is compatible with the given ``nu``."""


@dataclass(frozen=True)
class RhoPrior:
    kind: str
    values: tuple[float, ...]
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("point", "uniform", "discrete"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if any(not (-1.0 <= v <= 1.0) for v in self.values):
            raise ValueError("prior support must lie within [-1, 1]")
        if self.kind == "uniform":
            a, b = self.values
            if not a < b:
                raise ValueError(f"uniform prior needs a < b, got ({a}, {b})")
        elif self.kind == "point" and len(self.values) != 1:
            raise ValueError("point prior takes exactly one value")
        elif self.kind == "discrete":
            if not self.values or len(self.values) != len(self.weights):
                raise ValueError("discrete prior needs one positive weight per value")
            if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
                raise ValueError("discrete prior weights must be positive and finite")

    @classmethod
    def point(cls, value: float) -> "RhoPrior":
        return cls("point", (float(value),), (1.0,))

    @classmethod
    def uniform(cls, a: float, b: float) -> "RhoPrior":
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def discrete(cls, atoms: Sequence[tuple[float, float]]) -> "RhoPrior":
        atoms = list(atoms)
        return cls("discrete", tuple(float(v) for v, _ in atoms), tuple(float(w) for _, w in atoms))

    def describe(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform", "a": self.values[0], "b": self.values[1]}
        if self.kind == "point":
            return {"kind": "point", "value": self.values[0]}
        return {"kind": "discrete", "atoms": [[v, w] for v, w in zip(self.values, self.weights)]}


@dataclass(frozen=True)
class SigmaDeltaPosterior:
    """Weighted ``sigma_delta`` samples; one row per retained root.

    ``draw`` indexes the prior draw each row came from, so rows sharing a
    ``draw`` are the two roots of a dual-region draw.
    """

    draw: np.ndarray
    rho: np.ndarray
    sigma_delta: np.ndarray
    branch: np.ndarray
    weight: np.ndarray
    infeasible_mass: float
    branch_policy: str
    infeasible_policy: str
    exact: bool

    def __len__(self):
        return int(self.sigma_delta.shape[0])


def propagate(nu: float, sigma_tau: float, prior: RhoPrior, n_samples: int = 100_000,
              seed: int = 0, branch_policy: str = "equal_weight",
              infeasible_policy: str = "reject") -> SigmaDeltaPosterior:
    """Posterior sample of ``sigma_delta`` induced by ``prior`` on ``rho``.

    Raises
    ------
    InfeasiblePriorError
        If every prior draw is incompatible with ``nu``.  This holds under
        both infeasible policies; ``reject`` renormalises over whatever
        feasible mass remains.
    """
    bounds.SolveInput(nu, sigma_tau, 0.0)
    if branch_policy not in BRANCH_POLICIES:
        raise ValueError(f"branch_policy must be one of {BRANCH_POLICIES}, got {branch_policy!r}")
    if infeasible_policy not in INFEASIBLE_POLICIES:
        raise ValueError(f"infeasible_policy must be one of {INFEASIBLE_POLICIES}, got {infeasible_policy!r}")

    if prior.kind == "uniform":
        if int(n_samples) != n_samples or n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {n_samples!r}")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
        a, b = prior.values
        rho = a + (b - a) * rng.random(int(n_samples))
        prior_w = np.full(rho.shape, 1.0 / rho.shape[0])
        exact = False
    else:
        rho = np.asarray(prior.values, dtype=np.float64)
        w = np.asarray(prior.weights, dtype=np.float64)
        prior_w = w / w.sum()
        exact = True

    code, low, high = bounds._solve_arrays(nu, sigma_tau, rho)
    feasible = code != bounds._INFEASIBLE
    infeasible_mass = float(prior_w[~feasible].sum())
    if not feasible.any():
        raise InfeasiblePriorError(
            f"no value of rho under the {prior.kind} prior {prior.describe()} is compatible "
            f"with nu={nu!r}: need nu**2 - 1 >= -rho**2, and rho < 0 when nu < 1"
        )

    idx = np.flatnonzero(feasible)
    dual = code[idx] == bounds._DUAL
    w = prior_w[idx] / prior_w[idx].sum()

    if branch_policy == "equal_weight":
        # dual draws expand to (minus, plus) rows with half weight each
        reps = np.where(dual, 2, 1)
        draw = np.repeat(idx, reps)
        first = np.concatenate([[True], draw[1:] != draw[:-1]])
        is_dual_row = np.repeat(dual, reps)
        take_low = is_dual_row & first
        sd = np.where(take_low, np.repeat(low[idx], reps), np.repeat(high[idx], reps))
        branch = np.where(take_low, "minus", "plus")
        weight = np.repeat(w, reps) / reps.repeat(reps)
    else:
        draw = idx
        pick_low = dual & (branch_policy == "min_only")
        sd = np.where(pick_low, low[idx], high[idx])
        branch = np.where(pick_low, "minus", "plus")
        weight = w

    return SigmaDeltaPosterior(
        draw=draw.astype(np.int64),
        rho=rho[draw],
        sigma_delta=sd,
        branch=branch,
        weight=weight,
        infeasible_mass=infeasible_mass,
        branch_policy=branch_policy,
        infeasible_policy=infeasible_policy,
        exact=exact,
    )


def weighted_quantile(x: np.ndarray, w: np.ndarray, q: float) -> float:
    """Smallest ``x`` whose cumulative weight reaches ``q`` (lower rule)."""
    order = np.argsort(x, kind="stable")
    cum = np.cumsum(w[order]) / w.sum()
    k = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return float(x[order][min(k, len(x) - 1)])


def summarize(post: SigmaDeltaPosterior, quantiles: Sequence[float] = (0.025, 0.5, 0.975)) -> dict:
    """Weighted mean, SD, quantiles and the posterior mass at zero.

    ``mc_se`` is the Monte Carlo standard error of the mean, computed over
    prior draws; it is 0 for exactly enumerated priors.
    """
    if len(post) == 0:
        raise ValueError("cannot summarize an empty posterior")
    x, w = post.sigma_delta, post.weight
    w = w / w.sum()
    mean = float(np.dot(w, x))
    sd = math.sqrt(max(0.0, float(np.dot(w, (x - mean) ** 2))))

    mc_se = 0.0
    if not post.exact:
        # per-draw conditional means; draws are equally weighted a priori
        draws, inv = np.unique(post.draw, return_inverse=True)
        per_draw = np.bincount(inv, weights=w * x) / np.bincount(inv, weights=w)
        if draws.size > 1:
            mc_se = float(per_draw.std(ddof=1) / math.sqrt(draws.size))

    qs = {}
    for q in quantiles:
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantiles must lie in (0, 1), got {q!r}")
        qs[repr(float(q))] = weighted_quantile(x, w, q)

    return {
        "mean": mean,
        "sd": sd,
        "quantiles": qs,
        "p_zero": float(w[x == 0.0].sum()),
        "mc_se": mc_se,
        "n_rows": len(post),
        "n_draws": int(np.unique(post.draw).size),
        "infeasible_mass": post.infeasible_mass,
        "branch_policy": post.branch_policy,
        "infeasible_policy": post.infeasible_policy,
    }
