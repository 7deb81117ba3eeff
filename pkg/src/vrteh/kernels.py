"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba is importable and the environment
variable ``VRTEH_DISABLE_NUMBA`` is not set to a truthy value.  Both
backends implement the same algorithms in the same order of operations for
everything except floating-point summation, so they agree to rounding
(~1e-12 relative) but are not guaranteed bit-identical to each other.
A given backend is bit-reproducible run to run.

Algorithms
----------
* Inverse standard-normal CDF: Wichura's AS241 (PPND16) rational
  approximation, absolute error below 1e-15 over (0, 1).
* Bivariate normal draw: lower-triangular square root of the covariance,
  ``tau = mu_tau + sigma_tau*z1`` and
  ``delta = mu_delta + sigma_delta*(rho*z1 + sqrt(1 - rho**2)*z2)``.
  ``sigma_delta == 0`` and ``|rho| == 1`` fall out exactly.
* Complete randomization: partial Fisher-Yates on ``0..n-1``; step ``i``
  swaps position ``i`` with ``i + floor(u_i*(n - i))``.  The first
  ``n_treated`` positions are the treated units.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("VRTEH_DISABLE_NUMBA", "").strip().lower() not in _TRUTHY
BACKEND = "numba" if USE_NUMBA else "numpy"

# AS241 coefficients (Wichura 1988, Applied Statistics 37, 477-484).
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _horner(c, x):
    return (((((((c[7] * x + c[6]) * x + c[5]) * x + c[4]) * x + c[3]) * x + c[2]) * x + c[1]) * x
            + c[0])


def ndtri_scalar(p: float) -> float:
    """Inverse standard-normal CDF of a single probability.

    Returns ``-inf``/``inf`` at 0/1 and ``nan`` outside [0, 1].
    """
    if not (0.0 <= p <= 1.0):
        return math.nan
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return math.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _horner(_A, r) / _horner(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _horner(_C, r) / _horner(_D, r)
    else:
        r -= 5.0
        val = _horner(_E, r) / _horner(_F, r)
    return -val if q < 0.0 else val


# -- pure numpy --------------------------------------------------------------

def _ndtri_np(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    central = np.abs(q) <= 0.425
    out = np.empty_like(u)

    qc = q[central]
    rc = 0.180625 - qc * qc
    out[central] = qc * _horner(_A, rc) / _horner(_B, rc)

    tail = ~central
    qt = q[tail]
    with np.errstate(divide="ignore", invalid="ignore"):
        rt = np.sqrt(-np.log(np.where(qt < 0.0, u[tail], 1.0 - u[tail])))
        near = rt <= 5.0
        rn = rt - 1.6
        rf = rt - 5.0
        vt = np.where(near, _horner(_C, rn) / _horner(_D, rn), _horner(_E, rf) / _horner(_F, rf))
    vt = np.where(rt == np.inf, np.inf, vt)
    out[tail] = np.where(qt < 0.0, -vt, vt)
    out[(u < 0.0) | (u > 1.0) | np.isnan(u)] = np.nan
    return out


def _potential_outcomes_np(u_tau, u_delta, mu_tau, sigma_tau, mu_delta, sigma_delta, rho):
    z1 = _ndtri_np(u_tau)
    z2 = _ndtri_np(u_delta)
    tau = mu_tau + sigma_tau * z1
    delta = mu_delta + sigma_delta * (rho * z1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * z2)
    return tau, tau + delta


def _fisher_yates_np(n_units, n_treated, u):
    idx = list(range(n_units))
    steps = (np.arange(n_treated) + np.floor(u[:n_treated] * (n_units - np.arange(n_treated)))).astype(np.int64)
    np.minimum(steps, n_units - 1, out=steps)
    for i, j in enumerate(steps.tolist()):
        idx[i], idx[j] = idx[j], idx[i]
    mask = np.zeros(n_units, dtype=np.bool_)
    mask[idx[:n_treated]] = True
    return mask


def _sd_np(x, ddof):
    n = x.shape[0]
    if n - ddof <= 0:
        return math.nan
    m = x.sum() / n
    d = x - m
    return math.sqrt(float((d * d).sum()) / (n - ddof))


def _replicate_np(u_tau, u_delta, u_assign, n_treated, mu_tau, sigma_tau, mu_delta, sigma_delta,
                  rho, sd_delta_ddof):
    y0, y1 = _potential_outcomes_np(u_tau, u_delta, mu_tau, sigma_tau, mu_delta, sigma_delta, rho)
    mask = _fisher_yates_np(y0.shape[0], n_treated, u_assign)
    return _sd_np(y1[mask], 1), _sd_np(y0[~mask], 1), _sd_np(y1 - y0, sd_delta_ddof)


numpy_backend = SimpleNamespace(
    name="numpy",
    ndtri=_ndtri_np,
    potential_outcomes=_potential_outcomes_np,
    select_treated=_fisher_yates_np,
    sample_sd=_sd_np,
    replicate=_replicate_np,
)


# -- numba ------------------------------------------------------------------

def _build_numba_backend():
    njit = numba.njit
    horner = njit(cache=True, nogil=True)(_horner)
    A, B, C, D, E, F = _A, _B, _C, _D, _E, _F

    @njit(cache=True, nogil=True)
    def ndtri1(p):
        if not (0.0 <= p <= 1.0):
            return math.nan
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        q = p - 0.5
        if abs(q) <= 0.425:
            r = 0.180625 - q * q
            return q * horner(A, r) / horner(B, r)
        r = p if q < 0.0 else 1.0 - p
        r = math.sqrt(-math.log(r))
        if r <= 5.0:
            r -= 1.6
            val = horner(C, r) / horner(D, r)
        else:
            r -= 5.0
            val = horner(E, r) / horner(F, r)
        return -val if q < 0.0 else val

    @njit(cache=True, nogil=True)
    def ndtri(u):
        out = np.empty(u.shape[0])
        for i in range(u.shape[0]):
            out[i] = ndtri1(u[i])
        return out

    @njit(cache=True, nogil=True)
    def potential_outcomes(u_tau, u_delta, mu_tau, sigma_tau, mu_delta, sigma_delta, rho):
        n = u_tau.shape[0]
        load = math.sqrt(max(0.0, 1.0 - rho * rho))
        y0 = np.empty(n)
        y1 = np.empty(n)
        for i in range(n):
            z1 = ndtri1(u_tau[i])
            z2 = ndtri1(u_delta[i])
            tau = mu_tau + sigma_tau * z1
            delta = mu_delta + sigma_delta * (rho * z1 + load * z2)
            y0[i] = tau
            y1[i] = tau + delta
        return y0, y1

    @njit(cache=True, nogil=True)
    def select_treated(n_units, n_treated, u):
        idx = np.arange(n_units)
        for i in range(n_treated):
            j = i + np.int64(math.floor(u[i] * (n_units - i)))
            if j > n_units - 1:
                j = n_units - 1
            t = idx[i]
            idx[i] = idx[j]
            idx[j] = t
        mask = np.zeros(n_units, dtype=np.bool_)
        for i in range(n_treated):
            mask[idx[i]] = True
        return mask

    @njit(cache=True, nogil=True)
    def sample_sd(x, ddof):
        n = x.shape[0]
        if n - ddof <= 0:
            return math.nan
        s = 0.0
        for i in range(n):
            s += x[i]
        m = s / n
        ss = 0.0
        for i in range(n):
            d = x[i] - m
            ss += d * d
        return math.sqrt(ss / (n - ddof))

    @njit(cache=True, nogil=True)
    def replicate(u_tau, u_delta, u_assign, n_treated, mu_tau, sigma_tau, mu_delta, sigma_delta,
                  rho, sd_delta_ddof):
        y0, y1 = potential_outcomes(u_tau, u_delta, mu_tau, sigma_tau, mu_delta, sigma_delta, rho)
        n = y0.shape[0]
        mask = select_treated(n, n_treated, u_assign)
        treated = np.empty(n_treated)
        control = np.empty(n - n_treated)
        diff = np.empty(n)
        a = 0
        b = 0
        for i in range(n):
            if mask[i]:
                treated[a] = y1[i]
                a += 1
            else:
                control[b] = y0[i]
                b += 1
            diff[i] = y1[i] - y0[i]
        return sample_sd(treated, 1), sample_sd(control, 1), sample_sd(diff, sd_delta_ddof)

    return SimpleNamespace(
        name="numba",
        ndtri=ndtri,
        potential_outcomes=potential_outcomes,
        select_treated=select_treated,
        sample_sd=sample_sd,
        replicate=replicate,
    )


numba_backend = _build_numba_backend() if HAVE_NUMBA else None
active = numba_backend if USE_NUMBA else numpy_backend


def uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1) from ``rng``.

    ``Generator.random`` yields multiples of 2**-53 on [0, 1); an exact zero
    is replaced by 2**-54 so the inverse-CDF transform stays finite.
    """
    u = rng.random(size)
    u[u == 0.0] = 2.0 ** -54
    return u
