"""Risk certificates for sampled decisions, with an MPC iteration-count harness.

The bound functions live in :mod:`scenariocert.bounds`, the scalar scenario
programs in :mod:`scenariocert.scenario`, the QP solver and sampling pipeline
in :mod:`scenariocert.qp` and :mod:`scenariocert.mpc`, and Monte-Carlo
checks in :mod:`scenariocert.validation`.
"""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bounds import (
    BoundQuery,
    EpsilonInterval,
    EpsilonResult,
    RootConfig,
    binomial_epsilon,
    epsilon_interval,
    epsilon_posteriori,
    log_binomial,
    testset_epsilon,
)
from .errors import DomainError, NumericalFailure, SamplingAbort
from .scenario import (
    NonAccumulationWarning,
    RelaxedSolution,
    RobustSolution,
    SampleValues,
    TradeoffPoint,
    certify_relaxed,
    certify_robust,
    empirical_violation,
    rho_from_target,
    solve_relaxed,
    solve_robust,
    sweep_budget,
    sweep_metric_budgets,
    sweep_rho,
    tie_diagnostics,
)

__all__ = [
    "BoundQuery",
    "EpsilonInterval",
    "EpsilonResult",
    "RootConfig",
    "binomial_epsilon",
    "epsilon_interval",
    "epsilon_posteriori",
    "log_binomial",
    "testset_epsilon",
    "DomainError",
    "NumericalFailure",
    "SamplingAbort",
    "NonAccumulationWarning",
    "RelaxedSolution",
    "RobustSolution",
    "SampleValues",
    "TradeoffPoint",
    "certify_relaxed",
    "certify_robust",
    "empirical_violation",
    "rho_from_target",
    "solve_relaxed",
    "solve_robust",
    "sweep_budget",
    "sweep_metric_budgets",
    "sweep_rho",
    "tie_diagnostics",
]
