"""screenlab: optimal dynamic screening of a privately informed agent
under limited liability.

A principal hires an agent for ``N`` periods.  Each period the agent learns a
fresh i.i.d. cost and decides whether to work; the principal values each unit
of work at ``alpha`` and may only make nonnegative payments.  The package
builds the optimal history-dependent threshold mechanism, checks it against a
brute-force oracle, and stress-tests it by simulation.
"""

from .dist import (
    AssumptionReport,
    CostDistribution,
    DistributionError,
    check_assumption1,
    check_assumption2,
    make_scaled_beta,
    make_truncated_normal,
    make_uniform,
    virtual_cost,
    virtual_cost_inverse,
)
from .history import MissingThresholdError, WorkHistory
from .mechanism import (
    Environment,
    LimitedLiabilityError,
    Mechanism,
    StaleRentError,
    ThresholdProfile,
    backload,
    check_interim_ir,
    principal_payoff,
    u1_star,
)
from .solver import (
    BracketError,
    ConsecMenu,
    Regime,
    SizeError,
    SolveReport,
    SolverRefusal,
    brute_force,
    find_alpha_hat,
    solve,
    sweep_alpha,
)
from .stochastic import InapplicableError, build_improvement, verify_stochastic
from .sim import SimConfig, simulate, simulate_stochastic

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "BracketError",
    "ConsecMenu",
    "CostDistribution",
    "DistributionError",
    "Environment",
    "InapplicableError",
    "LimitedLiabilityError",
    "Mechanism",
    "MissingThresholdError",
    "Regime",
    "SimConfig",
    "SizeError",
    "SolveReport",
    "SolverRefusal",
    "StaleRentError",
    "ThresholdProfile",
    "WorkHistory",
    "backload",
    "brute_force",
    "build_improvement",
    "check_assumption1",
    "check_assumption2",
    "check_interim_ir",
    "find_alpha_hat",
    "make_scaled_beta",
    "make_truncated_normal",
    "make_uniform",
    "principal_payoff",
    "simulate",
    "simulate_stochastic",
    "solve",
    "sweep_alpha",
    "u1_star",
    "verify_stochastic",
    "virtual_cost",
    "virtual_cost_inverse",
]
