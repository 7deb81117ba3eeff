"""Variability ratio (VR) effect size and treatment effect heterogeneity (TEH).

The VR compares response SDs between treated and control arms.  It does not
identify the SD of individual treatment effects on its own: that also needs
the unobservable correlation between the control response and the effect.
This package estimates VR, solves the exact relationship in both
directions, propagates priors on the correlation, and simulates trials where
VR = 1 despite substantial TEH.
"""

__version__ = "0.1.0"

from .bayes import InfeasiblePriorError, RhoPrior, SigmaDeltaPosterior, propagate, summarize
from .bounds import (
    RegionClass,
    RegionGrid,
    Solution,
    SolutionSet,
    SolveInput,
    band_region,
    classify_region,
    curve_nu_vs_teh,
    curve_rho_vs_teh,
    nu_from_teh,
    solve,
    solve_sigma_delta,
    universal_bounds,
)
from .estimation import (
    ArmSummary,
    DegenerateArmError,
    VrEstimate,
    estimate,
    estimate_from_raw,
    ln_vr_point,
    ln_vr_se,
    sample_sd,
)
from .model import (
    PopulationMoments,
    UnitPotentialOutcomes,
    endpoint_score,
    response_from_scores,
    variance_gap,
)
from .simulation import (
    ReplicateError,
    ReplicateResult,
    SimulationAggregate,
    ToyModelConfig,
    assign_treatment,
    draw_potential_outcomes,
    run_replicate,
    run_simulation,
)
