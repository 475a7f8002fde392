"""One-dimensional scenario programs over recorded sample values.

The robust program ``min y s.t. y >= v_i`` and its slack-relaxed version
``min y + rho * sum xi_i s.t. y + xi_i >= v_i, y, xi >= 0`` are solved exactly
by inspecting breakpoints. The ``certify_*`` functions attach risk bounds from
:mod:`scenariocert.bounds`, and the sweeps produce trade-off curves.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import bounds
from .errors import DomainError, NumericalFailure

__all__ = [
    "SampleValues",
    "RobustSolution",
    "RelaxedSolution",
    "TradeoffPoint",
    "TieReport",
    "NonAccumulationWarning",
    "solve_robust",
    "solve_relaxed",
    "rho_from_target",
    "certify_robust",
    "certify_relaxed",
    "sweep_rho",
    "sweep_budget",
    "sweep_metric_budgets",
    "empirical_violation",
    "tie_diagnostics",
]


class NonAccumulationWarning(UserWarning):
    """Duplicated sample values make the two-sided bound unreliable.

    The one-sided a-posteriori bound remains valid in that case.
    """


@dataclass(frozen=True)
class SampleValues:
    """Nonnegative per-sample values with parallel identifiers."""

    values: np.ndarray
    sample_ids: tuple

    def __init__(self, values, sample_ids=None):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.size == 0:
            raise DomainError("sample values must be nonempty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("sample values must be finite")
        if np.any(arr < 0):
            raise DomainError("sample values must be nonnegative")
        if sample_ids is None:
            ids = tuple(range(arr.size))
        else:
            ids = tuple(sample_ids)
            if len(ids) != arr.size:
                raise DomainError("sample_ids and values differ in length")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "sample_ids", ids)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, SampleValues):
            return NotImplemented
        return self.sample_ids == other.sample_ids and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.sample_ids, self.values.tobytes()))

    def extended(self, extra):
        """A new collection with ``extra`` appended after these samples."""
        extra = extra if isinstance(extra, SampleValues) else SampleValues(extra)
        offset = len(self)
        ids = self.sample_ids + tuple(
            sid if not isinstance(sid, int) else sid + offset for sid in extra.sample_ids
        )
        return SampleValues(np.concatenate([self.values, extra.values]), ids)


def _as_samples(samples):
    return samples if isinstance(samples, SampleValues) else SampleValues(samples)


@dataclass(frozen=True)
class RobustSolution:
    y_star: float
    argmax_id: object


@dataclass(frozen=True)
class RelaxedSolution:
    y_star: float
    rho: float
    xi_star: np.ndarray
    q_star: int
    s_star: int
    objective: float


@dataclass(frozen=True)
class TradeoffPoint:
    """One point of a trade-off curve.

    ``control`` is the swept quantity (rho, an iteration budget, or an
    iteration count). Fields that do not apply to a sweep are ``None``.
    """

    control: float
    y_value: float
    q_star: int
    s_star: Optional[int]
    epsilon: float
    epsilon_lower: Optional[float]
    empirical_violation: float


@dataclass(frozen=True)
class TieReport:
    distinct_count: int
    max_multiplicity: int
    duplicated_mass: float


def solve_robust(samples):
    """Smallest ``y`` dominating every sample: the maximum value.

    Ties for the maximum report the smallest sample id.
    """
    samples = _as_samples(samples)
    y = float(samples.values.max())
    ids = [sid for sid, v in zip(samples.sample_ids, samples.values) if v == y]
    try:
        argmax = min(ids)
    except TypeError:
        argmax = ids[0]
    return RobustSolution(y, argmax)


def _max_violations(rho):
    """Largest integer k with ``k * rho <= 1``.

    A ``rho`` equal to the double nearest ``1/k`` (e.g. ``0.2`` or
    ``rho_from_target(k)``) is read as exactly ``1/k``; otherwise the
    comparison is exact on the binary value.
    """
    k = round(1.0 / rho)
    if k >= 1 and rho == 1.0 / k:
        return k
    return int(Fraction(1) / Fraction(rho))


def solve_relaxed(samples, rho):
    """Smallest minimizer of ``f(y) = y + rho * sum max(0, v_i - y)`` on y >= 0.

    ``f`` is convex and piecewise linear with right slope
    ``1 - rho * #{v_i > y}``, so the smallest minimizer is the smallest
    candidate in ``{0} | {v_i}`` where at most ``1/rho`` samples lie strictly
    above. The comparison with ``1/rho`` is exact, so flat optima (e.g.
    ``rho = 1/q`` with exactly ``q`` samples above a breakpoint) resolve
    to the lower end deterministically.
    """
    samples = _as_samples(samples)
    rho = float(rho)
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError(f"rho must be a positive finite number, got {rho}")
    v = samples.values
    n = v.size
    k_max = _max_violations(rho)

    candidates = np.unique(np.concatenate([[0.0], v]))
    v_sorted = np.sort(v)
    # number of samples strictly above each candidate
    above = n - np.searchsorted(v_sorted, candidates, side="right")
    idx = int(np.argmax(above <= k_max))
    y = float(candidates[idx])

    xi = np.maximum(0.0, v - y)
    q = int(np.count_nonzero(xi > 0))
    objective = float(Fraction(y) + Fraction(rho) * Fraction(math.fsum(xi)))
    xi.setflags(write=False)
    return RelaxedSolution(y, rho, xi, q, q + 1, objective)


def rho_from_target(q_hat):
    """Penalty weight that targets ``q_hat`` violated samples: ``1 / q_hat``."""
    if isinstance(q_hat, bool) or int(q_hat) != q_hat:
        raise DomainError(f"q_hat must be an integer, got {q_hat!r}")
    q_hat = int(q_hat)
    if q_hat < 1:
        raise DomainError("q_hat must be at least 1; use solve_robust for zero violations")
    return 1.0 / q_hat


def certify_robust(samples, beta):
    samples = _as_samples(samples)
    sol = solve_robust(samples)
    return sol, bounds.binomial_epsilon(len(samples), beta, 1)


def tie_diagnostics(samples):
    """Exact-duplicate statistics of the sample values."""
    samples = _as_samples(samples)
    counts = Counter(samples.values.tolist())
    dup = sum(c for c in counts.values() if c > 1)
    return TieReport(len(counts), max(counts.values()), dup / len(samples))


def certify_relaxed(samples, rho, beta, theorem="posteriori", tie_threshold=0.0):
    """Solve the relaxed program and bound the risk at complexity ``1 + q*``.

    ``theorem`` is ``"posteriori"`` (valid with ties) or ``"interval"``
    (two-sided, assumes non-accumulation). In interval mode, a duplicated mass
    above ``tie_threshold`` sets ``accumulation_warning`` on the result and
    emits :class:`NonAccumulationWarning`. If the interval roots cannot be
    bracketed the trivial interval ``[0, 1]`` is returned with ``fallback`` set.
    """
    samples = _as_samples(samples)
    sol = solve_relaxed(samples, rho)
    n = len(samples)
    theorem = theorem.lower()
    if theorem == "posteriori":
        return sol, bounds.epsilon_posteriori(n, beta, sol.s_star)
    if theorem != "interval":
        raise DomainError(f"unknown theorem {theorem!r}")
    ties = tie_diagnostics(samples)
    flagged = ties.duplicated_mass > tie_threshold
    try:
        interval = bounds.epsilon_interval(n, beta, sol.s_star)
    except NumericalFailure as exc:
        interval = bounds.EpsilonInterval(
            0.0, 1.0, 0.0, math.inf, math.inf, math.inf, n, float(beta),
            min(sol.s_star, n), fallback=True, notes=(str(exc),),
        )
    if flagged:
        warnings.warn(
            f"duplicated mass {ties.duplicated_mass:.3g} exceeds {tie_threshold:g}; "
            "two-sided bound assumes non-accumulation",
            NonAccumulationWarning,
            stacklevel=2,
        )
        interval = dataclasses.replace(interval, accumulation_warning=True)
    return sol, interval


def empirical_violation(samples, y):
    """Fraction of samples strictly above ``y``."""
    samples = _as_samples(samples)
    return float(np.count_nonzero(samples.values > y)) / len(samples)


def sweep_rho(samples, targets: Sequence[int], beta, theorem="posteriori"):
    """Relaxed solutions for ``rho = 1/q_hat`` over the target counts.

    Output is sorted by rho ascending.
    """
    samples = _as_samples(samples)
    if len(targets) == 0:
        raise DomainError("targets must be nonempty")
    points = []
    for q_hat in targets:
        rho = rho_from_target(q_hat)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonAccumulationWarning)
            sol, bound = certify_relaxed(samples, rho, beta, theorem)
        points.append(TradeoffPoint(
            control=rho,
            y_value=sol.y_star,
            q_star=sol.q_star,
            s_star=sol.s_star,
            epsilon=bound.epsilon,
            epsilon_lower=getattr(bound, "epsilon_lower", None),
            empirical_violation=empirical_violation(samples, sol.y_star),
        ))
    points.sort(key=lambda p: p.control)
    return points


def sweep_budget(samples, grid, beta_total):
    """Test-set bounds at fixed budgets, splitting confidence uniformly.

    Each budget is certified at ``beta_total / len(grid)`` so the whole curve
    holds jointly with confidence ``1 - beta_total``.
    """
    samples = _as_samples(samples)
    grid = [float(g) for g in grid]
    if not grid:
        raise DomainError("grid must be nonempty")
    n = len(samples)
    beta = float(beta_total) / len(grid)
    v_sorted = np.sort(samples.values)
    points = []
    for budget in grid:
        k = int(n - np.searchsorted(v_sorted, budget, side="right"))
        res = bounds.testset_epsilon(n, beta, k)
        points.append(TradeoffPoint(budget, budget, k, None, res.epsilon, None, k / n))
    return points


def sweep_metric_budgets(values_by_k, beta):
    """Robust metric bound per iteration count.

    ``values_by_k`` maps an iteration count k to the metric values of every
    sample after k iterations. Each point is certified with the a-priori
    bound at d = 1.
    """
    points = []
    for k in sorted(values_by_k):
        samples = _as_samples(values_by_k[k])
        sol, res = certify_robust(samples, beta)
        points.append(TradeoffPoint(
            float(k), sol.y_star, 0, 1, res.epsilon, None,
            empirical_violation(samples, sol.y_star),
        ))
    return points
