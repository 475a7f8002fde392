"""Risk bounds for scenario programs and their test-set counterpart.

Every bound here is obtained by inverting a polynomial (or binomial tail)
equation in one variable. All sums are normalized by the leading binomial
coefficient and accumulated with log-sum-exp, so ``n_samples`` in the tens of
thousands evaluates without overflow.

Four families are provided:

* :func:`binomial_epsilon` -- the a-priori bound for convex programs with
  ``d`` decision variables.
* :func:`epsilon_posteriori` -- the a-posteriori bound indexed by the
  realized complexity, valid without non-accumulation.
* :func:`epsilon_interval` -- the two-sided bound that requires
  non-accumulation of the constraint values.
* :func:`testset_epsilon` -- inverse binomial tail for a decision fixed
  before seeing the samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, NumericalFailure

__all__ = [
    "RootConfig",
    "BoundQuery",
    "EpsilonResult",
    "EpsilonInterval",
    "log_binomial",
    "binomial_epsilon",
    "epsilon_posteriori",
    "epsilon_interval",
    "testset_epsilon",
]

BINOMIAL = "Binomial"
POSTERIORI = "Posteriori"
TESTSET = "TestSet"
INTERVAL = "Interval"

# geometric limits for locating the two roots of the interval equation
_T_MIN = 1e-6
_T_MAX = 1e6


@dataclass(frozen=True)
class RootConfig:
    """Bisection controls shared by every root solve."""

    abs_tolerance_t: float = 1e-12
    max_bisection_steps: int = 200
    bracket_growth: float = 2.0

    def __post_init__(self):
        if not self.abs_tolerance_t > 0:
            raise DomainError("abs_tolerance_t must be positive")
        if not self.bracket_growth > 1:
            raise DomainError("bracket_growth must exceed 1")
        if self.max_bisection_steps < 1:
            raise DomainError("max_bisection_steps must be at least 1")


DEFAULT_ROOT_CONFIG = RootConfig()


@dataclass(frozen=True)
class BoundQuery:
    """Validated inputs of a bound evaluation.

    ``complexity`` above ``n_samples`` is clamped to ``n_samples``: the
    a-posteriori complexity ``1 + q`` can reach ``N + 1`` when every sample is
    violated, and the only consistent value there is the vacuous bound.
    """

    n_samples: int
    confidence_beta: float
    complexity: int = 0
    dimension: int = 1

    def __post_init__(self):
        n = _as_int(self.n_samples, "n_samples")
        if n < 1:
            raise DomainError(f"n_samples must be positive, got {n}")
        beta = float(self.confidence_beta)
        if not 0.0 < beta < 1.0:
            raise DomainError(f"confidence_beta must lie in (0, 1), got {beta}")
        q = _as_int(self.complexity, "complexity")
        if q < 0:
            raise DomainError(f"complexity must be nonnegative, got {q}")
        d = _as_int(self.dimension, "dimension")
        if d < 1:
            raise DomainError(f"dimension must be at least 1, got {d}")
        object.__setattr__(self, "n_samples", n)
        object.__setattr__(self, "confidence_beta", beta)
        object.__setattr__(self, "complexity", min(q, n))
        object.__setattr__(self, "dimension", d)


@dataclass(frozen=True)
class EpsilonResult:
    """A one-sided risk bound together with how it was obtained."""

    epsilon: float
    method: str
    n_samples: int
    beta: float
    complexity: int
    root_t: Optional[float] = None
    residual: float = 0.0
    iterations_used: int = 0

    def to_dict(self):
        return {
            "method": self.method,
            "n": self.n_samples,
            "beta": self.beta,
            "q_or_d": self.complexity,
            "epsilon": self.epsilon,
            "root_t": self.root_t,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class EpsilonInterval:
    """Two-sided risk bound ``[epsilon_lower, epsilon_upper]``."""

    epsilon_lower: float
    epsilon_upper: float
    root_t_lower: float
    root_t_upper: float
    residual_lower: float
    residual_upper: float
    n_samples: int
    beta: float
    complexity: int
    iterations_used: int = 0
    accumulation_warning: bool = False
    fallback: bool = False
    notes: tuple = field(default=())

    method = INTERVAL

    @property
    def epsilon(self):
        return self.epsilon_upper

    @property
    def residual(self):
        return max(self.residual_lower, self.residual_upper)

    def to_dict(self):
        return {
            "method": INTERVAL,
            "n": self.n_samples,
            "beta": self.beta,
            "q_or_d": self.complexity,
            "epsilon": self.epsilon_upper,
            "epsilon_lower": self.epsilon_lower,
            "epsilon_upper": self.epsilon_upper,
            "root_t": [self.root_t_lower, self.root_t_upper],
            "residual": self.residual,
        }


def _as_int(value, name):
    if isinstance(value, bool):
        raise DomainError(f"{name} must be an integer")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise DomainError(f"{name} must be an integer, got {value!r}")


def log_binomial(m, q):
    """Natural log of the binomial coefficient ``C(m, q)``.

    Small arguments go through exact integer arithmetic; larger ones through
    log-gamma.
    """
    m = _as_int(m, "m")
    q = _as_int(q, "q")
    if q < 0 or m < 0 or q > m:
        raise DomainError(f"log_binomial needs 0 <= q <= m, got m={m}, q={q}")
    if m <= 1000:
        return math.log(math.comb(m, q))
    return float(gammaln(m + 1) - gammaln(q + 1) - gammaln(m - q + 1))


def _log_binom_ratio(m, q, n):
    """Vectorized ``ln C(m, q) - ln C(n, q)`` for an integer array ``m``."""
    m = np.asarray(m, dtype=float)
    return (gammaln(m + 1) - gammaln(m - q + 1)) - (gammaln(n + 1.0) - gammaln(n - q + 1.0))


def _bisect(sign_fn, lo, hi, config, f_lo, f_hi):
    """Bisection on a bracket whose endpoints have opposite signs.

    ``sign_fn`` returns a float whose sign matches the defining equation and
    ``f_lo``/``f_hi`` are its values at the endpoints (infinite values are
    allowed). Bisection stops when the bracket is narrower than the tolerance
    or cannot shrink further; the final bracket is then refined by one linear
    interpolation step. Returns candidate points and the evaluation count.
    """
    steps = 0
    tol = config.abs_tolerance_t
    lo_positive = f_lo > 0.0
    while hi - lo > tol and steps < config.max_bisection_steps:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        value = sign_fn(mid)
        steps += 1
        if value == 0.0:
            return (mid,), steps
        if (value > 0.0) == lo_positive:
            lo, f_lo = mid, value
        else:
            hi, f_hi = mid, value
    candidates = [lo, 0.5 * (lo + hi), hi]
    if math.isfinite(f_lo) and math.isfinite(f_hi) and f_lo != f_hi:
        t = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if lo <= t <= hi:
            candidates.append(t)
    return candidates, steps


def _best_of(points, residual_fn):
    best = None
    for t in points:
        r = residual_fn(t)
        if best is None or r < best[1]:
            best = (t, r)
    return best


# ---------------------------------------------------------------------------
# binomial tail (a-priori and test-set bounds)


def _log_binomial_tail(n, k, eps):
    """``ln sum_{i=0}^{k} C(n, i) eps^i (1 - eps)^(n - i)`` for 0 < eps < 1."""
    i = np.arange(k + 1, dtype=float)
    log_coef = gammaln(n + 1.0) - gammaln(i + 1) - gammaln(n - i + 1)
    return float(logsumexp(log_coef + i * math.log(eps) + (n - i) * math.log1p(-eps)))


def _invert_binomial_tail(n, k, beta, config):
    """Unique eps in (0, 1) with ``P(Bin(n, eps) <= k) = beta``, for k < n."""
    log_beta = math.log(beta)

    def sign_fn(eps):
        # the tail decreases in eps: positive left of the root
        return _log_binomial_tail(n, k, eps) - log_beta

    # tail is 1 at eps = 0 and 0 at eps = 1 (k < n)
    points, steps = _bisect(sign_fn, 0.0, 1.0, config, -log_beta, -math.inf)

    def residual(eps):
        if eps <= 0.0 or eps >= 1.0:
            return math.inf
        return beta * abs(math.expm1(_log_binomial_tail(n, k, eps) - log_beta))

    eps, res = _best_of(points, residual)
    return eps, res, steps


def binomial_epsilon(n_samples, beta, dimension=1, config=DEFAULT_ROOT_CONFIG):
    """Risk bound for a convex scenario program with ``dimension`` variables.

    Solves ``beta = sum_{i<d} C(N, i) eps^i (1 - eps)^(N - i)`` for eps. For a
    scalar decision this is the closed form ``1 - beta**(1/N)``.

    Examples
    --------
    >>> round(binomial_epsilon(1000, 1e-4).epsilon, 6)
    0.009168
    """
    query = BoundQuery(n_samples, beta, 0, dimension)
    n, beta, d = query.n_samples, query.confidence_beta, query.dimension
    if d > n:
        raise DomainError(f"dimension {d} exceeds n_samples {n}")
    if d == 1:
        eps = 1.0 - beta ** (1.0 / n)
        residual = abs((1.0 - eps) ** n - beta)
        return EpsilonResult(eps, BINOMIAL, n, beta, d, None, residual, 0)
    eps, residual, steps = _invert_binomial_tail(n, d - 1, beta, config)
    return EpsilonResult(eps, BINOMIAL, n, beta, d, None, residual, steps)


def testset_epsilon(n_samples, beta, violations, config=DEFAULT_ROOT_CONFIG):
    """Test-set bound on the risk of a decision fixed independently of the data.

    Returns eps with ``P(Bin(N, eps) <= k) = beta`` where ``k`` is the number of
    observed violations, so that ``P(V > eps) <= beta``. With every sample
    violated the tail is identically one and the vacuous bound 1 is returned.
    """
    query = BoundQuery(n_samples, beta, 0, 1)
    n, beta = query.n_samples, query.confidence_beta
    k = _as_int(violations, "violations")
    if k < 0 or k > n:
        raise DomainError(f"violations must lie in [0, {n}], got {k}")
    if k == n:
        return EpsilonResult(1.0, TESTSET, n, beta, k, None, 0.0, 0)
    eps, residual, steps = _invert_binomial_tail(n, k, beta, config)
    return EpsilonResult(eps, TESTSET, n, beta, k, None, residual, steps)


# ---------------------------------------------------------------------------
# a-posteriori bound valid under accumulation


class _PosterioriEquation:
    """``(beta/N) sum_{m=q}^{N-1} C(m,q)/C(N,q) t^(m-q) - t^(N-q)``."""

    def __init__(self, n, q, beta):
        self.n, self.q, self.beta = n, q, beta
        m = np.arange(q, n, dtype=float)
        self.log_coef = math.log(beta / n) + _log_binom_ratio(m, q, n)
        self.powers = m - q

    def log_parts(self, t):
        log_t = math.log(t)
        log_sum = float(logsumexp(self.log_coef + self.powers * log_t))
        return log_sum, (self.n - self.q) * log_t

    def sign(self, t):
        log_sum, log_lead = self.log_parts(t)
        return log_sum - log_lead

    def residual(self, t):
        if t <= 0.0:
            return math.inf
        log_sum, log_lead = self.log_parts(t)
        return math.exp(log_lead) * abs(math.expm1(log_sum - log_lead))


def epsilon_posteriori(n_samples, beta, complexity, config=DEFAULT_ROOT_CONFIG):
    """A-posteriori risk bound at complexity ``q`` that tolerates ties.

    For ``q < N`` the unique root ``t(q)`` in (0, 1) of the polynomial
    ``(beta/N) sum_{m=q}^{N-1} C(m,q) t^(m-q) = C(N,q) t^(N-q)`` gives
    ``eps = 1 - t(q)``; ``q = N`` gives 1. Complexities above ``N`` are clamped.

    Raises
    ------
    NumericalFailure
        If no positive lower bracket is found within ``max_bisection_steps``
        halvings.
    """
    query = BoundQuery(n_samples, beta, complexity)
    n, beta, q = query.n_samples, query.confidence_beta, query.complexity
    if q == n:
        return EpsilonResult(1.0, POSTERIORI, n, beta, q, None, 0.0, 0)
    if q == n - 1:
        # single-term sum: beta / N**2 = t after normalization
        t = beta / (n * n)
        residual = _PosterioriEquation(n, q, beta).residual(t)
        return EpsilonResult(1.0 - t, POSTERIORI, n, beta, q, t, residual, 0)

    eq = _PosterioriEquation(n, q, beta)
    t_lo, trace = 1.0, []
    for _ in range(config.max_bisection_steps):
        t_lo *= 0.5
        value = eq.sign(t_lo)
        trace.append((t_lo, value))
        if value > 0.0:
            break
    else:
        raise NumericalFailure(
            f"no positive bracket for posteriori equation (N={n}, q={q}, beta={beta})",
            trace[-5:],
        )
    points, steps = _bisect(eq.sign, t_lo, 1.0, config, value, eq.sign(1.0))
    t, residual = _best_of(points, eq.residual)
    return EpsilonResult(1.0 - t, POSTERIORI, n, beta, q, t, residual, steps + len(trace))


# ---------------------------------------------------------------------------
# two-sided bound under non-accumulation


class _IntervalEquation:
    """Interval polynomial, divided by its leading term ``C(N,q) t^(N-q)``.

    With ``s = ln t`` the ratio of the tail sums to the leading term is
    ``exp(D(s))`` where ``D`` is a log-sum-exp of affine functions of ``s``,
    hence convex. The defining polynomial is positive exactly where
    ``D(s) < 0``, which is an interval in ``s`` bounded by the two roots.
    """

    def __init__(self, n, q, beta):
        self.n, self.q, self.beta = n, q, beta
        low = np.arange(q, n, dtype=float)
        high = np.arange(n + 1, 4 * n + 1, dtype=float)
        self.log_coef = np.concatenate([
            math.log(beta / (2 * n)) + _log_binom_ratio(low, q, n),
            math.log(beta / (6 * n)) + _log_binom_ratio(high, q, n),
        ])
        self.powers = np.concatenate([low, high]) - n

    def log_ratio(self, t):
        return float(logsumexp(self.log_coef + self.powers * math.log(t)))

    def sign(self, t):
        # sign of C(N,q) t^(N-q) - tail sums
        return -self.log_ratio(t)

    def slope(self, s):
        """dD/ds, increasing in s; zero at the peak of the polynomial."""
        a = self.log_coef + self.powers * s
        w = np.exp(a - a.max())
        return float(np.dot(w, self.powers) / w.sum())

    def residual(self, t):
        if t <= 0.0:
            return math.inf
        lead = min(1.0, math.exp((self.n - self.q) * math.log(t)))
        return lead * abs(math.expm1(self.log_ratio(t)))


class _TerminalIntervalEquation:
    """``1 - (beta/6N) sum_{i=N+1}^{4N} C(i,N) t^(i-N)``, decreasing in t."""

    def __init__(self, n, beta):
        i = np.arange(n + 1, 4 * n + 1, dtype=float)
        self.log_coef = math.log(beta / (6 * n)) + _log_binom_ratio(i, n, n)
        self.powers = i - n

    def log_sum(self, t):
        return float(logsumexp(self.log_coef + self.powers * math.log(t)))

    def sign(self, t):
        return -self.log_sum(t)

    def residual(self, t):
        if t <= 0.0:
            return math.inf
        return abs(math.expm1(self.log_sum(t)))


def _interval_terminal(n, beta, config):
    eq = _TerminalIntervalEquation(n, beta)
    hi, trace = 1.0, []
    while eq.sign(hi) > 0.0:
        trace.append((hi, eq.sign(hi)))
        hi *= config.bracket_growth
        if hi > _T_MAX:
            raise NumericalFailure(f"terminal interval root above {_T_MAX:g}", trace[-5:])
    # shrink toward zero until positive so the bracket has finite logs
    lo = hi
    while eq.sign(lo) <= 0.0:
        trace.append((lo, eq.sign(lo)))
        lo /= config.bracket_growth
        if lo < np.finfo(float).tiny:
            raise NumericalFailure("terminal interval root not bracketed", trace[-5:])
    points, steps = _bisect(eq.sign, lo, hi, config, eq.sign(lo), eq.sign(hi))
    t, residual = _best_of(points, eq.residual)
    return t, residual, steps + len(trace)


def _peak_log_t(eq, config):
    """Log of the point maximizing the normalized interval polynomial."""
    lo, hi = math.log(_T_MIN), math.log(_T_MAX)
    if eq.slope(lo) >= 0.0 or eq.slope(hi) <= 0.0:
        raise NumericalFailure(
            f"interval peak outside [{_T_MIN:g}, {_T_MAX:g}]",
            [(_T_MIN, eq.slope(lo)), (_T_MAX, eq.slope(hi))],
        )
    # slope tolerance is in log-t; 1e-14 keeps the peak well inside the bracket
    steps = 0
    while hi - lo > 1e-14 and steps < config.max_bisection_steps:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if eq.slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        steps += 1
    return 0.5 * (lo + hi), steps


def epsilon_interval(n_samples, beta, complexity, config=DEFAULT_ROOT_CONFIG):
    """Two-sided risk bound at complexity ``q`` assuming non-accumulation.

    For ``q < N`` the polynomial
    ``C(N,q) t^(N-q) - beta/(2N) sum_{i=q}^{N-1} C(i,q) t^(i-q)
    - beta/(6N) sum_{i=N+1}^{4N} C(i,q) t^(i-q)`` has two nonnegative roots
    ``t_lo <= t_hi``; for ``q = N`` a single root ``t_hi`` is taken from the
    terminal equation and ``t_lo = 0``. The bound is
    ``[max(0, 1 - t_hi), 1 - t_lo]``.

    Raises
    ------
    NumericalFailure
        When the polynomial has no positive point in ``[1e-6, 1e6]``; callers
        fall back to the trivial interval ``[0, 1]``.
    """
    query = BoundQuery(n_samples, beta, complexity)
    n, beta, q = query.n_samples, query.confidence_beta, query.complexity
    if q == n:
        t_hi, res_hi, steps = _interval_terminal(n, beta, config)
        return EpsilonInterval(
            max(0.0, 1.0 - t_hi), 1.0, 0.0, t_hi, 0.0, res_hi, n, beta, q, steps
        )

    eq = _IntervalEquation(n, q, beta)
    s_peak, steps = _peak_log_t(eq, config)
    t_peak = math.exp(s_peak)
    peak_value = eq.sign(t_peak)
    if not peak_value > 0.0:
        raise NumericalFailure(
            f"interval polynomial has no positive point (N={n}, q={q}, beta={beta})",
            [(t_peak, peak_value)],
        )
    growth = config.bracket_growth
    trace = []

    lower = t_peak
    while eq.sign(lower) > 0.0:
        trace.append((lower, eq.sign(lower)))
        lower /= growth
        if lower < np.finfo(float).tiny:
            raise NumericalFailure("lower interval root not bracketed", trace[-5:])
    points, n1 = _bisect(eq.sign, lower, t_peak, config, eq.sign(lower), peak_value)
    t_lo, res_lo = _best_of(points, eq.residual)

    upper = t_peak
    while eq.sign(upper) > 0.0:
        trace.append((upper, eq.sign(upper)))
        upper *= growth
        if upper > _T_MAX:
            raise NumericalFailure(f"upper interval root above {_T_MAX:g}", trace[-5:])
    points, n2 = _bisect(eq.sign, t_peak, upper, config, peak_value, eq.sign(upper))
    t_hi, res_hi = _best_of(points, eq.residual)

    return EpsilonInterval(
        max(0.0, 1.0 - t_hi),
        1.0 - t_lo,
        t_lo,
        t_hi,
        res_lo,
        res_hi,
        n,
        beta,
        q,
        steps + n1 + n2 + len(trace),
    )
