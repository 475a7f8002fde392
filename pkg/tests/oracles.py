"""Independent high-precision reference computations.

Nothing here imports the package under test. Binomial coefficients are exact
integers, polynomial evaluation is done in mpmath (or with Fractions) and
roots are located by sign scans plus bisection at 40 significant digits.
"""
import math
from fractions import Fraction

import mpmath

DPS = 40


def exact_log_binomial(m, q):
    return math.log(math.comb(m, q))


def rational_binomial_tail(n, k, eps):
    """``P(Bin(n, eps) <= k)`` exactly, for a Fraction ``eps``."""
    one_minus = 1 - eps
    return sum(math.comb(n, i) * eps**i * one_minus ** (n - i) for i in range(k + 1))


def rational_tail_inverse(n, k, beta, steps=48):
    """Bisection on the exact rational tail; returns a float eps."""
    beta = Fraction(beta)
    lo, hi = Fraction(0), Fraction(1)
    for _ in range(steps):
        mid = (lo + hi) / 2
        if rational_binomial_tail(n, k, mid) > beta:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


def _mp_bisect(fn, lo, hi, tol=mpmath.mpf("1e-30")):
    f_lo = fn(lo)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        f_mid = fn(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


def posteriori_root(n, beta, q):
    """Root in (0, 1) of (beta/N) sum_{m=q}^{N-1} C(m,q) t^(m-q) - C(N,q) t^(N-q)."""
    with mpmath.workdps(DPS):
        b = mpmath.mpf(beta) / n
        # coefficients from highest power down for polyval
        coeffs = [mpmath.mpf(0)] * (n - q + 1)
        for m in range(q, n):
            coeffs[m - q] = b * math.comb(m, q)
        coeffs[n - q] = -mpmath.mpf(math.comb(n, q))
        hi_first = coeffs[::-1]

        def poly(t):
            return mpmath.polyval(hi_first, t)

        t = _mp_bisect(poly, mpmath.mpf(0), mpmath.mpf(1))
        return float(t)


def interval_poly(n, beta, q):
    """Interval polynomial at complexity q < N as a callable in mpmath."""
    b = mpmath.mpf(beta)
    top = 4 * n - q
    coeffs = [mpmath.mpf(0)] * (top + 1)
    coeffs[n - q] = mpmath.mpf(math.comb(n, q))
    for i in range(q, n):
        coeffs[i - q] -= b / (2 * n) * math.comb(i, q)
    for i in range(n + 1, 4 * n + 1):
        coeffs[i - q] -= b / (6 * n) * math.comb(i, q)
    hi_first = coeffs[::-1]
    return lambda t: mpmath.polyval(hi_first, t)


def interval_roots(n, beta, q, grid_lo=0.5, grid_hi=1.5, step=0.002):
    """Both nonnegative roots of the interval polynomial for q < N.

    Sign changes are located on a uniform grid and refined by bisection;
    exactly two sign changes are required.
    """
    with mpmath.workdps(DPS):
        poly = interval_poly(n, beta, q)
        count = int(round((grid_hi - grid_lo) / step))
        grid = [mpmath.mpf(grid_lo) + j * mpmath.mpf(step) for j in range(count + 1)]
        values = [poly(t) for t in grid]
        changes = [j for j in range(count) if (values[j] > 0) != (values[j + 1] > 0)]
        if len(changes) != 2:
            raise AssertionError(f"expected two sign changes, found {len(changes)}")
        roots = [float(_mp_bisect(poly, grid[j], grid[j + 1])) for j in changes]
        return roots[0], roots[1]


def terminal_interval_root(n, beta):
    """Root of 1 - (beta/6N) sum_{i=N+1}^{4N} C(i,N) t^(i-N)."""
    with mpmath.workdps(DPS):
        b = mpmath.mpf(beta) / (6 * n)
        coeffs = [mpmath.mpf(1)] + [-b * math.comb(i, n) for i in range(n + 1, 4 * n + 1)]
        hi_first = coeffs[::-1]

        def poly(t):
            return mpmath.polyval(hi_first, t)

        hi = mpmath.mpf(1)
        while poly(hi) > 0:
            hi *= 2
        return float(_mp_bisect(poly, mpmath.mpf(0), hi))


def relaxed_bruteforce(values, rho):
    """Smallest minimizer of y + rho * sum max(0, v - y) over {0} and the values.

    Everything in exact rational arithmetic on the float inputs.
    Returns (y_star, q_star, objective) with objective as a Fraction.
    """
    vals = [Fraction(v) for v in values]
    r = Fraction(rho)
    best = None
    for c in sorted(set([Fraction(0)] + vals)):
        f = c + r * sum(max(Fraction(0), v - c) for v in vals)
        if best is None or f < best[1]:
            best = (c, f)
    y = best[0]
    q = sum(1 for v in vals if v > y)
    return float(y), q, best[1]
