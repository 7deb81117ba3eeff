"""Monte Carlo study of VR under known treatment effect heterogeneity.

Each replicate draws a fresh finite population of ``(Y0, Y1)`` responses
from the bivariate normal toy model, completely randomizes ``n_treated``
units to treatment, and records

* ``vr``: SD of observed treated responses over SD of observed control
  responses, both with ``n - 1`` divisors, and
* ``sd_delta``: SD of ``Y1 - Y0`` over all units, which needs both
  potential outcomes and is therefore not observable in a real trial.

Replicate ``i`` owns the stream ``PCG64(SeedSequence([seed, i]))`` and
consumes ``2*n_units + n_treated`` uniforms from it in this order: the
``tau`` normals, the second normal component of ``delta``, then the
Fisher-Yates steps.  Results therefore do not depend on ``parallelism``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .estimation import DegenerateArmError


class ReplicateError(DegenerateArmError):
    """A replicate produced a constant arm; carries the replicate index."""

    def __init__(self, replicate: int, message: str):
        super().__init__(f"replicate {replicate}: {message}")
        self.replicate = replicate


@dataclass(frozen=True)
class ToyModelConfig:
    rho: float = -0.5
    mu_tau: float = 0.0
    sigma_tau: float = 1.0
    mu_delta: float = 0.0
    sigma_delta: float = 1.0
    n_units: int = 10_000
    n_treated: Optional[int] = None  # defaults to n_units // 2
    seed: int = 1
    sd_delta_denominator_offset: int = 0

    def __post_init__(self):
        if self.n_treated is None:
            object.__setattr__(self, "n_treated", self.n_units // 2)
        if not (-1.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho!r}")
        if not (self.sigma_tau >= 0 and self.sigma_delta >= 0):
            raise ValueError("sigma_tau and sigma_delta must be non-negative")
        if not all(math.isfinite(v) for v in (self.mu_tau, self.mu_delta, self.sigma_tau, self.sigma_delta)):
            raise ValueError("model parameters must be finite")
        if self.n_units < 4:
            raise ValueError(f"n_units must be at least 4, got {self.n_units}")
        if not 0 < self.n_treated < self.n_units:
            raise ValueError(f"need 0 < n_treated < n_units, got {self.n_treated} of {self.n_units}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.sd_delta_denominator_offset not in (0, 1):
            raise ValueError("sd_delta_denominator_offset must be 0 or 1")

    @property
    def covariance(self) -> np.ndarray:
        c = self.rho * self.sigma_tau * self.sigma_delta
        return np.array([[self.sigma_tau ** 2, c], [c, self.sigma_delta ** 2]])

    def with_(self, **changes) -> "ToyModelConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ReplicateResult:
    vr: float
    sd_delta: float


@dataclass(frozen=True)
class SimulationAggregate:
    replicates: int
    mean_vr: float
    sd_vr: float
    mean_sd_delta: float
    sd_sd_delta: float
    vr: Optional[np.ndarray] = field(default=None, repr=False)
    sd_delta: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def per_replicate(self) -> Optional[list[ReplicateResult]]:
        if self.vr is None:
            return None
        return [ReplicateResult(float(a), float(b)) for a, b in zip(self.vr, self.sd_delta)]

    def as_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "mean_vr": self.mean_vr,
            "sd_vr": self.sd_vr,
            "mean_sd_delta": self.mean_sd_delta,
            "sd_sd_delta": self.sd_sd_delta,
        }


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def draw_potential_outcomes(cfg: ToyModelConfig, stream: np.random.Generator,
                            backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(y0, y1)`` for ``cfg.n_units`` units: ``y0 = tau``, ``y1 = tau + delta``."""
    be = backend or kernels.active
    n = cfg.n_units
    u = kernels.uniforms(stream, 2 * n)
    return be.potential_outcomes(u[:n], u[n:], cfg.mu_tau, cfg.sigma_tau, cfg.mu_delta,
                                 cfg.sigma_delta, cfg.rho)


def assign_treatment(n_units: int, n_treated: int, stream: np.random.Generator,
                     backend=None) -> np.ndarray:
    """Complete randomization: boolean mask with exactly ``n_treated`` True."""
    if not 0 < n_treated < n_units:
        raise ValueError(f"need 0 < n_treated < n_units, got {n_treated} of {n_units}")
    be = backend or kernels.active
    return be.select_treated(int(n_units), int(n_treated), kernels.uniforms(stream, n_treated))


def run_replicate(cfg: ToyModelConfig, stream: np.random.Generator, index: int = 0,
                  backend=None) -> ReplicateResult:
    be = backend or kernels.active
    n, n1 = cfg.n_units, cfg.n_treated
    u = kernels.uniforms(stream, 2 * n + n1)
    sd1, sd0, sd_delta = be.replicate(u[:n], u[n:2 * n], u[2 * n:], n1, cfg.mu_tau, cfg.sigma_tau,
                                      cfg.mu_delta, cfg.sigma_delta, cfg.rho,
                                      cfg.sd_delta_denominator_offset)
    if not sd1 > 0:
        raise ReplicateError(index, "treated arm responses are constant")
    if not sd0 > 0:
        raise ReplicateError(index, "control arm responses are constant")
    return ReplicateResult(sd1 / sd0, sd_delta)


def _sd(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def run_simulation(cfg: ToyModelConfig, replicates: int = 1000, parallelism: int = 1,
                   keep_replicates: bool = True, backend=None) -> SimulationAggregate:
    """Run ``replicates`` independent replicates and aggregate them.

    Replicates are split into contiguous blocks across ``parallelism``
    threads.  Output is identical for every ``parallelism``.  If several
    replicates fail, the error from the lowest index is raised.
    """
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    vr = np.empty(replicates)
    sd_delta = np.empty(replicates)

    def work(block):
        for i in block:
            try:
                res = run_replicate(cfg, replicate_stream(cfg.seed, i), i, backend)
            except ReplicateError as exc:
                return exc
            vr[i] = res.vr
            sd_delta[i] = res.sd_delta
        return None

    blocks = np.array_split(np.arange(replicates), min(parallelism, replicates))
    if len(blocks) == 1:
        errors = [work(blocks[0].tolist())]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            errors = list(pool.map(work, [b.tolist() for b in blocks]))
    errors = [e for e in errors if e is not None]
    if errors:
        raise min(errors, key=lambda e: e.replicate)

    return SimulationAggregate(
        replicates=replicates,
        mean_vr=float(vr.mean()),
        sd_vr=_sd(vr),
        mean_sd_delta=float(sd_delta.mean()),
        sd_sd_delta=_sd(sd_delta),
        vr=vr if keep_replicates else None,
        sd_delta=sd_delta if keep_replicates else None,
    )
