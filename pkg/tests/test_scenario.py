import math
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from scenariocert import bounds, io
from scenariocert.errors import DomainError
from scenariocert.scenario import (
    NonAccumulationWarning,
    SampleValues,
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

FIXTURE = Path(__file__).parent / "data" / "iterations_fixture.csv"

int_values = st.lists(st.integers(0, 30).map(float), min_size=1, max_size=20)
real_values = st.lists(st.floats(0, 1e3, allow_nan=False, allow_infinity=False),
                       min_size=1, max_size=20)


@st.composite
def relaxed_instances(draw):
    values = draw(st.one_of(int_values, real_values))
    n = len(values)
    log_rho = draw(st.floats(math.log(1.0 / (2 * n)), math.log(4.0)))
    return values, math.exp(log_rho)


class TestSampleValues:
    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            SampleValues([])

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            SampleValues([1.0, -0.5])

    def test_rejects_mismatched_ids(self):
        with pytest.raises(DomainError):
            SampleValues([1.0, 2.0], ["a"])

    def test_extension_keeps_ids_unique(self):
        s = SampleValues([1, 2]).extended([3])
        assert s.sample_ids == (0, 1, 2)


class TestRobust:
    def test_maximum(self):
        assert solve_robust([3, 9, 5]).y_star == 9

    def test_singleton_zero(self):
        assert solve_robust([0]).y_star == 0

    def test_tie_reports_smallest_id(self):
        sol = solve_robust(SampleValues([9, 1, 9], sample_ids=[5, 2, 3]))
        assert sol.argmax_id == 3

    def test_fixture_maximum(self):
        samples = io.read_samples_csv(FIXTURE)
        sol, res = certify_robust(samples, 1e-4)
        assert sol.y_star == 8200
        assert res.epsilon == pytest.approx(0.009168, abs=5e-7)


class TestRelaxedExamples:
    def test_duplicate_breakpoint(self):
        sol = solve_relaxed([3, 5, 5, 9], 0.5)
        assert (sol.y_star, sol.q_star, sol.s_star, sol.objective) == (5, 1, 2, 7)

    def test_flat_optimum_takes_smallest(self):
        sol = solve_relaxed([2, 7], 1.0)
        assert (sol.y_star, sol.q_star, sol.objective) == (2, 1, 7)

    def test_large_rho_is_robust(self):
        sol = solve_relaxed([4, 1, 7, 7, 2], 2.0)
        assert sol.y_star == 7 and sol.q_star == 0

    def test_small_rho_hits_zero(self):
        sol = solve_relaxed([4, 6, 8], 0.1)
        assert (sol.y_star, sol.q_star) == (0, 3)

    def test_rejects_nonpositive_rho(self):
        with pytest.raises(DomainError):
            solve_relaxed([1, 2], 0.0)

    def test_fixture_target_five(self):
        samples = io.read_samples_csv(FIXTURE)
        top = np.sort(samples.values)[-6:]
        assert len(set(top)) == 6
        sol = solve_relaxed(samples, rho_from_target(5))
        assert sol.q_star == 5
        assert sol.y_star == top[0]


@pytest.mark.parametrize("k", [3, 5, 10, 100, 500])
def test_reciprocal_rho_gives_flat_optimum_at_target(k):
    values = list(range(1, 2 * k + 1))
    sol = solve_relaxed(values, rho_from_target(k))
    assert sol.q_star == k
    _check_subgradient(values, sol)


@given(st.lists(st.integers(0, 40).map(float), min_size=1, max_size=20), st.integers(1, 25))
@settings(max_examples=100, deadline=None)
def test_reciprocal_rho_matches_rational_oracle(values, k):
    sol = solve_relaxed(values, rho_from_target(k))
    y, q, _ = oracles.relaxed_bruteforce(values, Fraction(1, k))
    assert (sol.y_star, sol.q_star) == (y, q)


class TestRhoFromTarget:
    @pytest.mark.parametrize("q_hat,rho", [(500, 0.002), (100, 0.01), (50, 0.02),
                                           (10, 0.1), (5, 0.2), (1, 1.0), (4, 0.25)])
    def test_reciprocal(self, q_hat, rho):
        assert rho_from_target(q_hat) == rho

    @pytest.mark.parametrize("bad", [0, -3, 2.5])
    def test_rejects(self, bad):
        with pytest.raises(DomainError):
            rho_from_target(bad)


class TestCertify:
    def test_posteriori_composition(self):
        sol, res = certify_relaxed([3, 5, 5, 9], 0.5, 0.05)
        assert sol.s_star == 2
        assert res.epsilon == bounds.epsilon_posteriori(4, 0.05, 2).epsilon

    def test_robust_recovery_path(self):
        sol, res = certify_relaxed([1.5, 2.5, 0.5], 3.0, 0.05)
        assert sol.q_star == 0
        assert res.epsilon == bounds.epsilon_posteriori(3, 0.05, 1).epsilon

    def test_all_violated_is_vacuous(self):
        sol, res = certify_relaxed([4, 6, 8], 0.1, 0.05)
        assert sol.s_star == 4
        assert res.epsilon == 1.0

    def test_robust_uses_a_priori_bound(self):
        _, res = certify_robust(np.arange(200.0), 0.05)
        assert res.epsilon == pytest.approx(1 - 0.05 ** (1 / 200), rel=1e-13)

    def test_interval_flags_ties(self):
        with pytest.warns(NonAccumulationWarning):
            _, res = certify_relaxed([1, 1, 2, 3, 4, 5], 0.5, 0.05, theorem="interval")
        assert res.accumulation_warning

    def test_interval_on_distinct_values_is_quiet(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", NonAccumulationWarning)
            _, res = certify_relaxed(np.linspace(0.1, 5, 40), 0.25, 0.05, theorem="interval")
        assert not res.accumulation_warning
        assert res.epsilon_lower <= res.epsilon_upper

    def test_unknown_theorem(self):
        with pytest.raises(DomainError):
            certify_relaxed([1, 2], 0.5, 0.05, theorem="other")


class TestDiagnostics:
    @pytest.mark.parametrize("values,expected", [
        ([5, 5, 5], (1, 3, 1.0)),
        ([1, 2, 3], (3, 1, 0.0)),
        ([1, 1, 2, 3], (3, 2, 0.5)),
    ])
    def test_ties(self, values, expected):
        r = tie_diagnostics(values)
        assert (r.distinct_count, r.max_multiplicity, r.duplicated_mass) == expected

    def test_empirical_violation(self):
        assert empirical_violation([1, 2, 3], 2) == pytest.approx(1 / 3)
        assert empirical_violation([1, 2, 3], 3) == 0.0
        assert empirical_violation([1, 2, 3], 0.5) == 1.0


class TestSweeps:
    def test_rho_targets_above_n(self):
        pts = sweep_rho([1.0, 2.0, 3.0], [4], 0.05)
        assert pts[0].y_value == 0 and pts[0].epsilon == 1.0

    def test_target_one_on_distinct_values(self):
        pts = sweep_rho([4.0, 9.0, 1.0, 7.0], [1], 0.05)
        assert (pts[0].y_value, pts[0].q_star) == (7.0, 1)

    def test_rho_sorted_ascending(self):
        pts = sweep_rho(io.read_samples_csv(FIXTURE), [1, 500, 5, 50, 10, 100], 1e-4)
        assert [p.control for p in pts] == sorted(p.control for p in pts)

    def test_budget_grid(self):
        samples = io.read_samples_csv(FIXTURE)
        grid = [25.0 * i for i in range(1, 401)]
        pts = sweep_budget(samples, grid, 1e-4)
        assert len(pts) == 400
        assert pts[-1].q_star == 0
        assert pts[-1].epsilon == pytest.approx(1 - (1e-4 / 400) ** (1 / 1000), rel=1e-12)

    def test_budget_zero(self):
        pts = sweep_budget([1.0, 2.0, 5.0], [0.0], 0.05)
        assert pts[0].q_star == 3 and pts[0].epsilon == 1.0

    def test_metric_budgets_zero_trace(self):
        pts = sweep_metric_budgets({k: [0.0] * 30 for k in range(1, 51)}, 0.05)
        assert len(pts) == 50
        assert all(p.y_value == 0 for p in pts)

    def test_empty_inputs(self):
        with pytest.raises(DomainError):
            sweep_rho([1.0], [], 0.05)
        with pytest.raises(DomainError):
            sweep_budget([1.0], [], 0.05)


def _rational_rho(rho):
    # a double equal to the nearest 1/k stands for 1/k exactly
    k = round(1 / rho)
    return Fraction(1, k) if k >= 1 and rho == 1 / k else Fraction(rho)


def _check_subgradient(values, sol):
    v = np.asarray(values, dtype=float)
    r = _rational_rho(sol.rho)
    assert Fraction(int(np.count_nonzero(v > sol.y_star))) * r <= 1
    if sol.y_star > 0:
        assert Fraction(int(np.count_nonzero(v >= sol.y_star))) * r >= 1


@given(relaxed_instances())
@settings(max_examples=300, deadline=None)
def test_oracle_equivalence(instance):
    values, rho = instance
    sol = solve_relaxed(values, rho)
    y, q, obj = oracles.relaxed_bruteforce(values, _rational_rho(rho))
    assert sol.y_star == y
    assert sol.q_star == q
    assert sol.objective == pytest.approx(float(obj), rel=1e-12, abs=1e-300)
    if all(float(v).is_integer() for v in values) and _rational_rho(rho) == Fraction(rho):
        assert Fraction(sol.objective) == obj or sol.objective == float(obj)
    _check_subgradient(values, sol)


@given(relaxed_instances())
@settings(max_examples=150, deadline=None)
def test_solution_invariants(instance):
    values, rho = instance
    sol = solve_relaxed(values, rho)
    v = np.asarray(values, dtype=float)
    assert np.array_equal(sol.xi_star, np.maximum(0.0, v - sol.y_star))
    assert sol.q_star == int(np.count_nonzero(sol.xi_star > 0))
    assert sol.s_star == sol.q_star + 1
    assert sol.objective == pytest.approx(sol.y_star + rho * math.fsum(sol.xi_star), rel=1e-12)


@given(st.one_of(int_values, real_values), st.floats(1.0001, 50))
@settings(max_examples=100, deadline=None)
def test_robust_recovery(values, rho):
    sol = solve_relaxed(values, rho)
    assert sol.y_star == solve_robust(values).y_star
    assert sol.q_star == 0


@given(relaxed_instances(), st.sampled_from([0.25, 0.5, 2.0, 8.0, 1024.0]))
@settings(max_examples=100, deadline=None)
def test_scale_equivariance(instance, c):
    values, rho = instance
    assume(all(v * c < 1e300 for v in values))
    base = solve_relaxed(values, rho)
    scaled = solve_relaxed([v * c for v in values], rho)
    assert scaled.y_star == base.y_star * c
    assert scaled.q_star == base.q_star
    assert np.array_equal(scaled.xi_star, base.xi_star * c)


@given(st.lists(st.integers(0, 200).map(float), min_size=5, max_size=60),
       st.lists(st.integers(1, 80), min_size=1, max_size=8, unique=True))
@settings(max_examples=60, deadline=None)
def test_tradeoff_monotone(values, targets):
    pts = sweep_rho(values, targets, 0.05)
    # sorted by rho ascending; as rho decreases y* falls and q* grows
    for lo, hi in zip(pts, pts[1:]):
        assert lo.y_value <= hi.y_value
        assert lo.q_star >= hi.q_star
    for p in pts:
        assert p.empirical_violation == p.q_star / len(values)
