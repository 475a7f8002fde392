"""Operator-splitting solver for small dense convex QPs.

Solves ``min 1/2 z'Pz + q'z  s.t.  l <= Az <= u`` with the alternating
linear-solve / projection scheme popularized by OSQP: fixed penalty, one
factorization of the regularized system, over-relaxation, and
certificate-based infeasibility detection. The iteration count until the
residual test passes is the quantity the rest of the toolkit certifies, so the
loop is kept deterministic and exposes per-iteration snapshots.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numba import njit

from .errors import DomainError

SOLVED = "Solved"
PRIMAL_INFEASIBLE = "PrimalInfeasible"
DUAL_INFEASIBLE = "DualInfeasible"
MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Dense QP data; equality rows have equal lower and upper bounds."""

    hessian: np.ndarray
    linear_cost: np.ndarray
    constraint_matrix: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.hessian, dtype=float)
        q = np.asarray(self.linear_cost, dtype=float).reshape(-1)
        A = np.asarray(self.constraint_matrix, dtype=float)
        l = np.asarray(self.lower_bounds, dtype=float).reshape(-1)
        u = np.asarray(self.upper_bounds, dtype=float).reshape(-1)
        n = q.size
        if P.shape != (n, n):
            raise DomainError(f"hessian shape {P.shape} does not match {n} variables")
        if A.ndim != 2 or A.shape[1] != n:
            raise DomainError(f"constraint matrix shape {A.shape} does not match {n} variables")
        if l.size != A.shape[0] or u.size != A.shape[0]:
            raise DomainError("bound vectors must have one entry per constraint row")
        if np.max(np.abs(P - P.T), initial=0.0) > 1e-12:
            raise DomainError("hessian must be symmetric")
        if np.any(l > u):
            raise DomainError("lower bounds exceed upper bounds")
        for name, arr in (("hessian", P), ("linear_cost", q), ("constraint_matrix", A),
                          ("lower_bounds", l), ("upper_bounds", u)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_variables(self):
        return self.linear_cost.size

    @property
    def n_constraints(self):
        return self.lower_bounds.size

    def objective(self, z):
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.hessian @ z + self.linear_cost @ z)

    def constraint_violation(self, z):
        """Infinity norm of the distance of ``Az`` to ``[l, u]``."""
        az = self.constraint_matrix @ np.asarray(z, dtype=float)
        gap = np.maximum(self.lower_bounds - az, az - self.upper_bounds)
        return float(max(0.0, gap.max(initial=0.0)))


@dataclass(frozen=True)
class SolverSettings:
    """Controls of :func:`admm_solve`.

    ``seed`` is carried for provenance only: the iteration starts from zero and
    draws no random numbers.
    """

    penalty: float = 0.1
    sigma: float = 1e-6
    relaxation_alpha: float = 1.6
    abs_tol: float = 1e-3
    rel_tol: float = 1e-3
    infeasibility_tol: float = 1e-4
    max_iterations: int = 10000
    check_interval: int = 25
    equality_penalty_scale: float = 1e3
    seed: int = 0

    def __post_init__(self):
        if not self.penalty > 0 or not self.sigma > 0:
            raise DomainError("penalty and sigma must be positive")
        if not 0 < self.relaxation_alpha < 2:
            raise DomainError("relaxation_alpha must lie in (0, 2)")
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.infeasibility_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_iterations < 1 or self.check_interval < 1:
            raise DomainError("max_iterations and check_interval must be positive")

    def to_dict(self):
        return {
            "penalty": self.penalty,
            "sigma": self.sigma,
            "relaxation_alpha": self.relaxation_alpha,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "infeasibility_tol": self.infeasibility_tol,
            "max_iterations": self.max_iterations,
            "check_interval": self.check_interval,
            "equality_penalty_scale": self.equality_penalty_scale,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown solver settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SolveReport:
    status: str
    iterations: int
    snapshots: dict = field(default_factory=dict)
    objective: float = float("nan")
    solution: np.ndarray = None
    dual: np.ndarray = None
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")


def _penalty_vector(qp, settings):
    rho = np.full(qp.n_constraints, settings.penalty)
    eq = qp.lower_bounds == qp.upper_bounds
    rho[eq] *= settings.equality_penalty_scale
    return rho


_STATUS_CODES = (MAX_ITERATIONS, SOLVED, PRIMAL_INFEASIBLE, DUAL_INFEASIBLE)


@njit(cache=True)
def _inf_norm(v):
    out = 0.0
    for i in range(v.size):
        a = abs(v[i])
        if a > out:
            out = a
    return out


@njit(cache=True)
def _primal_certificate(At, l, u, dy, tol):
    norm = _inf_norm(dy)
    if norm == 0.0:
        return False
    if _inf_norm(np.dot(At, dy)) > tol * norm:
        return False
    support = 0.0
    for i in range(dy.size):
        if dy[i] > 0.0:
            if np.isinf(u[i]):
                return False
            support += u[i] * dy[i]
        elif dy[i] < 0.0:
            if np.isinf(l[i]):
                return False
            support += l[i] * dy[i]
    return support < -tol * norm


@njit(cache=True)
def _dual_certificate(P, q, A, l, u, dx, tol):
    norm = _inf_norm(dx)
    if norm == 0.0:
        return False
    lim = tol * norm
    if _inf_norm(np.dot(P, dx)) > lim:
        return False
    if np.dot(q, dx) > -lim:
        return False
    adx = np.dot(A, dx)
    for i in range(adx.size):
        if not np.isinf(u[i]) and adx[i] > lim:
            return False
        if not np.isinf(l[i]) and adx[i] < -lim:
            return False
    return True


@njit(cache=True)
def _admm_kernel(solve_x, solve_z, offset, P, q, A, At, l, u, rho, alpha,
                 abs_tol, rel_tol, inf_tol, max_iterations, interval,
                 snap_k, snaps):
    n, m = q.size, l.size
    x = np.zeros(n)
    z = np.zeros(m)
    y = np.zeros(m)
    w = np.empty(m)
    dy = np.empty(m)
    dx = np.empty(n)
    next_snap = 0
    while next_snap < snap_k.size and snap_k[next_snap] == 0:
        snaps[next_snap, :] = x
        next_snap += 1

    code = 0
    pinf_run = 0
    dinf_run = 0
    r_prim = np.nan
    r_dual = np.nan
    k = 0
    while k < max_iterations:
        for i in range(m):
            w[i] = rho[i] * z[i] - y[i]
        x_tilde = np.dot(solve_x, x) + np.dot(solve_z, w) + offset
        z_tilde = np.dot(A, x_tilde)
        for j in range(n):
            x_new = alpha * x_tilde[j] + (1.0 - alpha) * x[j]
            dx[j] = x_new - x[j]
            x[j] = x_new
        for i in range(m):
            z_relaxed = alpha * z_tilde[i] + (1.0 - alpha) * z[i]
            z_new = min(max(z_relaxed + y[i] / rho[i], l[i]), u[i])
            dy[i] = rho[i] * (z_relaxed - z_new)
            y[i] += dy[i]
            z[i] = z_new
        k += 1
        while next_snap < snap_k.size and snap_k[next_snap] == k:
            snaps[next_snap, :] = x
            next_snap += 1

        pinf_run = pinf_run + 1 if _primal_certificate(At, l, u, dy, inf_tol) else 0
        dinf_run = dinf_run + 1 if _dual_certificate(P, q, A, l, u, dx, inf_tol) else 0

        if k % interval:
            continue
        ax = np.dot(A, x)
        px = np.dot(P, x)
        aty = np.dot(At, y)
        r_prim = _inf_norm(ax - z)
        r_dual = _inf_norm(px + q + aty)
        eps_prim = abs_tol + rel_tol * max(_inf_norm(ax), _inf_norm(z))
        eps_dual = abs_tol + rel_tol * max(_inf_norm(px), _inf_norm(aty), _inf_norm(q))
        if r_prim <= eps_prim and r_dual <= eps_dual:
            code = 1
            break
        if pinf_run >= interval:
            code = 2
            break
        if dinf_run >= interval:
            code = 3
            break

    while next_snap < snap_k.size:
        snaps[next_snap, :] = x
        next_snap += 1
    return code, k, x, y, r_prim, r_dual


def admm_solve(qp, settings=SolverSettings(), snapshot_at=()):
    """Run the splitting iteration on ``qp`` from the zero initialization.

    Termination is tested every ``check_interval`` iterations, so reported
    iteration counts are multiples of it unless the cap is hit first.
    Infeasibility is declared when the certificate condition has held for at
    least ``check_interval`` consecutive iterations at a check.

    ``snapshot_at`` lists iteration indices k whose iterate (after exactly k
    updates, before the termination test) is recorded. Requested indices past
    termination receive the final iterate.
    """
    P, q, A = qp.hessian, qp.linear_cost, qp.constraint_matrix
    l, u = qp.lower_bounds, qp.upper_bounds
    n = qp.n_variables
    sigma = settings.sigma
    rho = _penalty_vector(qp, settings)

    kkt = P + sigma * np.eye(n) + A.T @ (rho[:, None] * A)
    factor = sla.cho_factor(kkt)
    solve_x = np.ascontiguousarray(sla.cho_solve(factor, sigma * np.eye(n)))
    solve_z = np.ascontiguousarray(sla.cho_solve(factor, A.T))
    offset = -sla.cho_solve(factor, q)

    wanted = sorted({int(k) for k in snapshot_at})
    if wanted and wanted[0] < 0:
        raise DomainError("snapshot indices must be nonnegative")
    snap_k = np.asarray(wanted, dtype=np.int64)
    snaps = np.empty((snap_k.size, n))

    # writable contiguous copies keep a single compiled signature
    code, k, x, y, r_prim, r_dual = _admm_kernel(
        solve_x, solve_z, offset,
        np.array(P, order="C"), np.array(q), np.array(A, order="C"),
        np.array(A.T, order="C"), np.array(l), np.array(u),
        rho, float(settings.relaxation_alpha), float(settings.abs_tol),
        float(settings.rel_tol), float(settings.infeasibility_tol),
        int(settings.max_iterations), int(settings.check_interval), snap_k, snaps,
    )
    status = _STATUS_CODES[code]
    return SolveReport(
        status=status,
        iterations=int(k),
        snapshots={int(kk): snaps[i].copy() for i, kk in enumerate(wanted)},
        objective=qp.objective(x) if status == SOLVED else float("nan"),
        solution=x,
        dual=y,
        primal_residual=float(r_prim),
        dual_residual=float(r_dual),
    )


def kkt_residuals(qp, x, y):
    """Primal violation, stationarity and complementarity residuals."""
    A = qp.constraint_matrix
    ax = A @ x
    primal = qp.constraint_violation(x)
    stationarity = float(np.abs(qp.hessian @ x + qp.linear_cost + A.T @ y).max(initial=0.0))
    # sign conditions: y <= 0 where Ax > l, y >= 0 where Ax < u
    slack_l = ax - qp.lower_bounds
    slack_u = qp.upper_bounds - ax
    comp = np.maximum(np.minimum(slack_l, np.maximum(-y, 0.0)),
                      np.minimum(slack_u, np.maximum(y, 0.0)))
    complementarity = float(np.abs(comp).max(initial=0.0))
    return primal, stationarity, complementarity


def polish(qp, x, y):
    """Solve the equality-constrained KKT system on the guessed active set.

    The active set is read off the ADMM iterate: a row is treated as binding
    at its lower (upper) bound when the multiplier estimate is negative
    (positive) beyond the distance to the bound. Returns ``(x, y)`` of the
    polished point; the caller decides whether to accept it.
    """
    A, l, u = qp.constraint_matrix, qp.lower_bounds, qp.upper_bounds
    az = A @ x
    lower = (az - l < -y) | (l == u)
    upper = (u - az < y) & ~lower
    active = np.flatnonzero(lower | upper)
    rhs_b = np.where(lower, l, u)[active]
    n = qp.n_variables
    na = active.size
    kkt = np.zeros((n + na, n + na))
    kkt[:n, :n] = qp.hessian
    kkt[:n, n:] = A[active].T
    kkt[n:, :n] = A[active]
    rhs = np.concatenate([-qp.linear_cost, rhs_b])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    x_pol = sol[:n]
    y_pol = np.zeros(qp.n_constraints)
    y_pol[active] = sol[n:]
    return x_pol, y_pol
