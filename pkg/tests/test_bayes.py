import math

import numpy as np
import pytest
from scipy import integrate

from vrteh import bounds
from vrteh.bayes import InfeasiblePriorError, RhoPrior, propagate, summarize, weighted_quantile


def quad_feasible_mass(nu, a, b):
    """Prior mass of uniform(a, b) on rho values with a compatible sigma_delta."""
    ind = lambda p: float(bounds.solve(nu, 1.0, p).feasible)
    pts = [p for p in (-math.sqrt(max(0.0, 1 - nu * nu)), 0.0) if a < p < b]
    return integrate.quad(ind, a, b, points=pts or None, limit=200)[0] / (b - a)


def test_point_prior_closed_form():
    post = propagate(1.41421356, 1.0, RhoPrior.point(0.0), 10, seed=3)
    assert np.allclose(post.sigma_delta, 1.0, atol=1e-8)
    s = summarize(post, [0.1, 0.5, 0.9])
    assert s["mean"] == pytest.approx(1.0, abs=1e-8)
    assert s["sd"] == 0.0
    assert all(v == pytest.approx(1.0, abs=1e-8) for v in s["quantiles"].values())
    assert post.infeasible_mass == 0.0


def test_point_prior_matches_solver_support():
    for nu, rho in [(1.0, -0.5), (0.9, -0.5), (1.3, 0.4), (0.8, -0.6)]:
        post = propagate(nu, 2.0, RhoPrior.point(rho), 1, seed=0)
        assert sorted(post.sigma_delta.tolist()) == bounds.solve(nu, 2.0, rho).values


def test_uniform_dual_posterior_mean_and_zero_mass():
    # oracle: E over rho ~ U(-1, 0) of the equal mixture of {0, -2 rho}
    oracle = integrate.quad(lambda p: 0.5 * (-2 * p), -1, 0)[0]
    post = propagate(1.0, 1.0, RhoPrior.uniform(-1, 0), 200_000, seed=11)
    s = summarize(post, [0.5])
    assert abs(s["mean"] - oracle) < 3 * s["mc_se"]
    assert s["p_zero"] == pytest.approx(0.5, abs=1e-9)
    assert s["quantiles"]["0.5"] == 0.0


def test_infeasible_mass_against_quadrature():
    post = propagate(0.8, 1.0, RhoPrior.uniform(-1, 1), 200_000, seed=5)
    oracle = 1.0 - quad_feasible_mass(0.8, -1, 1)
    assert oracle == pytest.approx(0.8, abs=1e-9)
    se = math.sqrt(oracle * (1 - oracle) / 200_000)
    assert abs(post.infeasible_mass - oracle) < 4 * se
    assert post.weight.sum() == pytest.approx(1.0, abs=1e-12)


def test_discrete_prior_is_exact():
    prior = RhoPrior.discrete([(-0.5, 1.0), (0.5, 3.0)])
    post = propagate(0.9, 1.0, prior, 5, seed=0)
    # rho=0.5 is infeasible for nu<1, so exactly 3/4 of the mass drops out
    assert post.infeasible_mass == 0.75
    assert post.weight.tolist() == [0.5, 0.5]
    assert summarize(post)["mc_se"] == 0.0


def test_all_infeasible_raises():
    for policy in ("reject", "error_if_all"):
        with pytest.raises(InfeasiblePriorError, match="nu=0.5"):
            propagate(0.5, 1.0, RhoPrior.point(0.9), 10, seed=0, infeasible_policy=policy)


def test_policy_validation_and_prior_validation():
    with pytest.raises(ValueError):
        propagate(1.0, 1.0, RhoPrior.point(0.0), 10, 0, branch_policy="mean")
    with pytest.raises(ValueError):
        RhoPrior.uniform(0.5, -0.5)
    with pytest.raises(ValueError):
        RhoPrior.point(1.5)
    with pytest.raises(ValueError):
        RhoPrior.discrete([(0.0, -1.0)])


def test_min_only_is_zero_at_r_zero():
    post = propagate(1.0, 1.0, RhoPrior.uniform(-1, 0), 5000, seed=2, branch_policy="min_only")
    assert (post.sigma_delta == 0).all()
    assert summarize(post)["mean"] == 0.0


def test_monotone_policy_ordering():
    prior = RhoPrior.uniform(-1, 1)
    runs = {p: propagate(0.92, 1.3, prior, 20_000, seed=9, branch_policy=p)
            for p in ("min_only", "equal_weight", "max_only")}
    lo, eq, hi = runs["min_only"], runs["equal_weight"], runs["max_only"]
    assert np.array_equal(lo.draw, hi.draw)
    lo_by_draw = dict(zip(lo.draw.tolist(), lo.sigma_delta.tolist()))
    hi_by_draw = dict(zip(hi.draw.tolist(), hi.sigma_delta.tolist()))
    for d, v in zip(eq.draw.tolist(), eq.sigma_delta.tolist()):
        assert lo_by_draw[d] <= v <= hi_by_draw[d]


def test_determinism():
    a = propagate(1.0, 1.0, RhoPrior.uniform(-1, 0), 10_000, seed=4)
    b = propagate(1.0, 1.0, RhoPrior.uniform(-1, 0), 10_000, seed=4)
    for field in ("draw", "rho", "sigma_delta", "weight"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
    assert a.branch.tolist() == b.branch.tolist()


@pytest.mark.slow
@pytest.mark.parametrize("n", [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
def test_monte_carlo_consistency(n):
    s = summarize(propagate(1.0, 1.0, RhoPrior.uniform(-1, 0), n, seed=n))
    assert abs(s["mean"] - 0.5) < 3 * s["mc_se"]


def test_weighted_quantile_lower_rule():
    x = np.array([3.0, 1.0, 2.0])
    w = np.array([1.0, 1.0, 2.0])
    assert weighted_quantile(x, w, 0.25) == 1.0
    assert weighted_quantile(x, w, 0.26) == 2.0
    assert weighted_quantile(x, w, 0.75) == 2.0
    assert weighted_quantile(x, w, 0.76) == 3.0


def test_summarize_rejects_bad_quantile():
    post = propagate(1.2, 1.0, RhoPrior.point(0.0), 1, 0)
    with pytest.raises(ValueError):
        summarize(post, [1.5])
