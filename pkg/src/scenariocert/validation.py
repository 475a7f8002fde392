"""Synthetic ground truth for the risk certificates.

A :class:`SyntheticSpec` is a finite distribution over nonnegative values,
optionally smeared by uniform jitter so that ties have probability zero. Its
tail mass is known in closed form, so the true risk of any certified decision
can be compared with the certificate over many independent repetitions.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bounds
from ._parallel import ordered_map
from .errors import DomainError
from .scenario import NonAccumulationWarning, SampleValues, solve_relaxed, solve_robust

ROBUST = "robust"
RELAXED = "relaxed"
INTERVAL = "interval"
MODES = (ROBUST, RELAXED, INTERVAL)


@dataclass(frozen=True)
class SyntheticSpec:
    """Discrete distribution over ``support`` with optional uniform jitter.

    A draw is ``support[j] + jitter * U`` with ``j ~ probabilities`` and
    ``U ~ Uniform[0, 1)``. A positive ``jitter`` must be smaller than half the
    smallest support gap, which keeps the jittered atoms disjoint.
    """

    support: tuple
    probabilities: tuple
    seed: int = 0
    jitter: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float).reshape(-1)
        p = np.asarray(self.probabilities, dtype=float).reshape(-1)
        if s.size == 0 or s.size != p.size:
            raise DomainError("support and probabilities must be nonempty and equally long")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise DomainError("support values must be finite and nonnegative")
        if np.any(np.diff(s) <= 0):
            raise DomainError("support must be strictly increasing")
        if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise DomainError("probabilities must be nonnegative and sum to 1")
        w = float(self.jitter)
        if not (w >= 0 and math.isfinite(w)):
            raise DomainError("jitter must be a nonnegative finite number")
        if w > 0 and s.size > 1 and not w < 0.5 * float(np.diff(s).min()):
            raise DomainError("jitter must be smaller than half the minimal support gap")
        object.__setattr__(self, "support", tuple(s.tolist()))
        object.__setattr__(self, "probabilities", tuple(p.tolist()))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "jitter", w)

    @property
    def continuous(self):
        return self.jitter > 0

    def sample(self, n, rng):
        """``n`` i.i.d. draws using the generator ``rng``."""
        idx = rng.choice(len(self.support), size=int(n), p=np.asarray(self.probabilities))
        values = np.asarray(self.support)[idx]
        if self.jitter > 0:
            values = values + self.jitter * rng.random(int(n))
        return values

    def to_dict(self):
        return {"support": list(self.support), "probabilities": list(self.probabilities),
                "jitter": self.jitter, "seed": self.seed}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"support", "probabilities", "jitter", "seed"}
        if unknown:
            raise DomainError(f"unknown synthetic spec fields: {sorted(unknown)}")
        if "support" not in data or "probabilities" not in data:
            raise DomainError("synthetic spec needs 'support' and 'probabilities'")
        return cls(data["support"], data["probabilities"], data.get("seed", 0),
                   data.get("jitter", 0.0))


def exact_risk(spec, y):
    """Probability that a fresh draw from ``spec`` exceeds ``y`` strictly."""
    s = np.asarray(spec.support)
    p = np.asarray(spec.probabilities)
    y = float(y)
    if spec.jitter == 0:
        return float(min(1.0, math.fsum(p[s > y])))
    w = spec.jitter
    tail = np.clip((s + w - y) / w, 0.0, 1.0)
    return float(min(1.0, math.fsum(p * tail)))


@dataclass(frozen=True)
class CoverageReport:
    """Outcome of repeated certification against the exact risk.

    ``binomial_3sigma`` is ``beta + 3 * sqrt(beta * (1 - beta) / repetitions)``,
    the allowance for the failure rate of a certificate that is exact at
    level ``beta``. ``assumption_warning`` marks interval-mode runs on a
    discrete spec, where the two-sided statement is not guaranteed.
    """

    repetitions: int
    failures: int
    failure_rate: float
    beta: float
    binomial_3sigma: float
    mode: str = ROBUST
    rho: Optional[float] = None
    n_samples: int = 0
    assumption_warning: bool = False

    @property
    def within_band(self):
        return self.failure_rate <= self.binomial_3sigma

    def to_dict(self):
        return {
            "repetitions": self.repetitions,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
            "beta": self.beta,
            "binomial_3sigma": self.binomial_3sigma,
            "mode": self.mode,
            "rho": self.rho,
            "n_samples": self.n_samples,
            "assumption_warning": self.assumption_warning,
        }


@functools.lru_cache(maxsize=4096)
def _certificate(mode, n, beta, complexity):
    # repetitions share few distinct complexities, so caching saves root solves
    if mode == ROBUST:
        return 0.0, bounds.binomial_epsilon(n, beta, 1).epsilon
    if mode == RELAXED:
        return 0.0, bounds.epsilon_posteriori(n, beta, complexity).epsilon
    res = bounds.epsilon_interval(n, beta, complexity)
    return res.epsilon_lower, res.epsilon_upper


def _repetition(args):
    spec, n, beta, mode, rho, seed, rep = args
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, rep])
    samples = SampleValues(spec.sample(n, rng))
    if mode == ROBUST:
        y, s_star = solve_robust(samples).y_star, 1
    else:
        sol = solve_relaxed(samples, rho)
        y, s_star = sol.y_star, min(sol.s_star, n)
    lower, upper = _certificate(mode, n, beta, s_star)
    risk = exact_risk(spec, y)
    return risk > upper or risk < lower


def repetition_outcomes(spec, n_samples, beta, mode=ROBUST, rho=None, repetitions=1000,
                        seed=None, workers=1):
    """Per-repetition failure flags of :func:`pac_monte_carlo`, in order."""
    mode = mode.lower()
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if mode != ROBUST:
        if rho is None or not float(rho) > 0:
            raise DomainError(f"{mode} mode needs a positive rho")
        rho = float(rho)
    n_samples = int(n_samples)
    bounds.BoundQuery(n_samples, beta)  # validates n and beta
    seed = spec.seed if seed is None else int(seed)
    jobs = [(spec, n_samples, float(beta), mode, rho, seed, r) for r in range(int(repetitions))]
    return ordered_map(_repetition, jobs, workers)


def pac_monte_carlo(spec, n_samples, beta, mode=ROBUST, rho=None, repetitions=1000,
                    seed=None, workers=1):
    """Empirical failure rate of a risk certificate on a synthetic spec.

    Parameters
    ----------
    spec : SyntheticSpec
        Sampling distribution; its ``seed`` is used unless ``seed`` is given.
    n_samples, beta
        Sample size and confidence parameter of each certificate.
    mode : {"robust", "relaxed", "interval"}
        ``robust`` certifies the sample maximum with the a-priori bound at
        d = 1; ``relaxed`` solves the penalized program at ``rho`` and uses the
        one-sided a-posteriori bound at s*; ``interval`` uses the two-sided
        bound at s* and counts risks on either side as failures.
    repetitions : int
        At least 100. Repetition ``r`` draws from the substream
        ``(seed, r)``, so the report does not depend on ``workers``.

    Returns
    -------
    CoverageReport
    """
    if int(repetitions) < 100:
        raise DomainError("repetitions must be at least 100")
    flags = repetition_outcomes(spec, n_samples, beta, mode, rho, repetitions, seed, workers)
    mode = mode.lower()
    warn = mode == INTERVAL and not spec.continuous
    if warn:
        warnings.warn("interval coverage on a discrete spec is not guaranteed: "
                      "ties violate non-accumulation", NonAccumulationWarning, stacklevel=2)
    reps = len(flags)
    failures = int(sum(flags))
    beta = float(beta)
    return CoverageReport(
        repetitions=reps,
        failures=failures,
        failure_rate=failures / reps,
        beta=beta,
        binomial_3sigma=beta + 3.0 * math.sqrt(beta * (1.0 - beta) / reps),
        mode=mode,
        rho=None if mode == ROBUST else float(rho),
        n_samples=int(n_samples),
        assumption_warning=warn,
    )


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-condition outcome; ``None`` marks a condition the data cannot test.

    ``confirmation`` applies when every extra value is at most y*,
    ``responsiveness`` when at least one exceeds it.
    """

    y_star: float
    q_star: int
    permutation: bool
    confirmation: Optional[bool]
    responsiveness: Optional[bool]

    @property
    def passed(self):
        return all(c is not False for c in (self.permutation, self.confirmation,
                                            self.responsiveness))


def consistency_check(values, extra, rho, seed=0, permutations=3):
    """Check the three consistency conditions of the relaxed solver on data.

    Permutation invariance is tested on the reversed order and on
    ``permutations`` seeded shuffles. Appending ``extra`` then tests either
    confirmation (all extra values at most y*: the pair (y*, q*) must not
    change) or responsiveness (some extra value above y*: it must change).
    """
    values = values if isinstance(values, SampleValues) else SampleValues(values)
    extra = extra if isinstance(extra, SampleValues) else SampleValues(extra)
    base = solve_relaxed(values, rho)
    pair = (base.y_star, base.q_star)

    rng = np.random.default_rng(seed)
    orders = [np.arange(len(values))[::-1]]
    orders += [rng.permutation(len(values)) for _ in range(permutations)]
    permuted_ok = True
    for order in orders:
        sol = solve_relaxed(SampleValues(values.values[order]), rho)
        permuted_ok &= (sol.y_star, sol.q_star) == pair

    grown = solve_relaxed(values.extended(extra), rho)
    changed = (grown.y_star, grown.q_star) != pair
    if np.all(extra.values <= base.y_star):
        confirmation, responsiveness = not changed, None
    else:
        confirmation, responsiveness = None, changed
    return ConsistencyReport(base.y_star, base.q_star, bool(permuted_ok),
                             confirmation, responsiveness)
