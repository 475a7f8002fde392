"""Finite-horizon linear MPC instances and the sampling pipeline around them.

The decision vector stacks predicted states then inputs,
``z = (x_0, ..., x_T, u_0, ..., u_{T-1})``. The cost is
``sum_{i<T} |x_i|^2 + |u_i|^2``, the first state is pinned to the sampled
initial condition, the last one to the origin, and states/inputs stay in
infinity-norm boxes.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import DomainError, SamplingAbort
from .qp import (
    SOLVED,
    QpProblem,
    SolverSettings,
    admm_solve,
    kkt_residuals,
    polish,
)

DEFAULT_A = ((1.5, 1.0), (0.0, 1.0))
DEFAULT_B = ((1.5,), (1.0,))

REFERENCE_TOL = 1e-10


@dataclass(frozen=True)
class LtiMpcConfig:
    A: tuple = DEFAULT_A
    B: tuple = DEFAULT_B
    horizon_T: int = 10
    state_bound: float = 10.0
    input_bound: float = 5.0
    terminal: str = "origin"
    sampling_box: tuple = ((-10.0, 10.0), (-10.0, 10.0))

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("A must be square")
        if B.shape[0] != A.shape[0]:
            raise DomainError("B must have as many rows as A")
        if int(self.horizon_T) < 1:
            raise DomainError("horizon_T must be positive")
        if not (self.state_bound > 0 and self.input_bound > 0):
            raise DomainError("state and input bounds must be positive")
        if str(self.terminal).lower() != "origin":
            raise DomainError(f"unsupported terminal set {self.terminal!r}")
        box = tuple((float(lo), float(hi)) for lo, hi in self.sampling_box)
        if len(box) != A.shape[0] or any(lo > hi for lo, hi in box):
            raise DomainError("sampling_box needs one [lo, hi] interval per state")
        object.__setattr__(self, "A", tuple(map(tuple, A.tolist())))
        object.__setattr__(self, "B", tuple(map(tuple, B.tolist())))
        object.__setattr__(self, "horizon_T", int(self.horizon_T))
        object.__setattr__(self, "state_bound", float(self.state_bound))
        object.__setattr__(self, "input_bound", float(self.input_bound))
        object.__setattr__(self, "terminal", "origin")
        object.__setattr__(self, "sampling_box", box)

    @property
    def nx(self):
        return len(self.A)

    @property
    def nu(self):
        return len(self.B[0])

    @property
    def n_variables(self):
        return (self.horizon_T + 1) * self.nx + self.horizon_T * self.nu

    def to_dict(self):
        return {
            "A": [list(r) for r in self.A],
            "B": [list(r) for r in self.B],
            "T": self.horizon_T,
            "state_bound": self.state_bound,
            "input_bound": self.input_bound,
            "terminal": self.terminal,
            "sampling_box": [list(b) for b in self.sampling_box],
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kwargs = {}
        for key, name in (("A", "A"), ("B", "B"), ("T", "horizon_T"),
                          ("horizon_T", "horizon_T"), ("state_bound", "state_bound"),
                          ("input_bound", "input_bound"), ("terminal", "terminal"),
                          ("sampling_box", "sampling_box")):
            if key in data:
                kwargs[name] = data[key]
        return cls(**kwargs)


def load_config(data):
    """Split a config JSON object into ``(LtiMpcConfig, SolverSettings, seed)``."""
    config = LtiMpcConfig.from_dict(data)
    settings = SolverSettings.from_dict(data.get("solver", {}))
    return config, settings, data.get("seed")


def config_hash(config, settings):
    blob = json.dumps({"config": config.to_dict(), "solver": settings.to_dict()},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def build_qp(config, x0):
    """Stack the horizon into one QP; performs no feasibility analysis.

    Row order: initial state, dynamics, terminal state, state boxes for
    stages ``0..T-1``, input boxes.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    A = np.asarray(config.A)
    B = np.asarray(config.B)
    nx, nu, T = config.nx, config.nu, config.horizon_T
    if x0.size != nx:
        raise DomainError(f"x0 must have {nx} entries")
    n = config.n_variables
    ux = (T + 1) * nx  # offset of the first input

    def xs(i):
        return slice(i * nx, (i + 1) * nx)

    def us(i):
        return slice(ux + i * nu, ux + (i + 1) * nu)

    P = np.zeros((n, n))
    P[: T * nx, : T * nx] = 2.0 * np.eye(T * nx)
    P[ux:, ux:] = 2.0 * np.eye(T * nu)

    eq_rows = []
    eq_rhs = []
    row = np.zeros((nx, n))
    row[:, xs(0)] = np.eye(nx)
    eq_rows.append(row)
    eq_rhs.append(x0)
    for i in range(T):
        row = np.zeros((nx, n))
        row[:, xs(i + 1)] = np.eye(nx)
        row[:, xs(i)] = -A
        row[:, us(i)] = -B
        eq_rows.append(row)
        eq_rhs.append(np.zeros(nx))
    row = np.zeros((nx, n))
    row[:, xs(T)] = np.eye(nx)
    eq_rows.append(row)
    eq_rhs.append(np.zeros(nx))

    box_state = np.zeros((T * nx, n))
    box_state[:, : T * nx] = np.eye(T * nx)
    box_input = np.zeros((T * nu, n))
    box_input[:, ux:] = np.eye(T * nu)

    E = np.vstack(eq_rows)
    b = np.concatenate(eq_rhs)
    xb, ub = config.state_bound, config.input_bound
    A_all = np.vstack([E, box_state, box_input])
    lower = np.concatenate([b, np.full(T * nx, -xb), np.full(T * nu, -ub)])
    upper = np.concatenate([b, np.full(T * nx, xb), np.full(T * nu, ub)])
    return QpProblem(P, np.zeros(n), A_all, lower, upper)


def dynamics_residual(config, z):
    """Largest violation of ``x_{i+1} = A x_i + B u_i`` along ``z``."""
    A = np.asarray(config.A)
    B = np.asarray(config.B)
    states, inputs = split_decision(z, config.horizon_T, config.nx, config.nu)
    pred = states[:-1] @ A.T + inputs @ B.T
    return float(np.abs(states[1:] - pred).max())


def split_decision(z, horizon_T, nx=2, nu=1):
    z = np.asarray(z, dtype=float).reshape(-1)
    expected = (horizon_T + 1) * nx + horizon_T * nu
    if z.size != expected:
        raise DomainError(f"decision vector has {z.size} entries, expected {expected}")
    ux = (horizon_T + 1) * nx
    return z[:ux].reshape(horizon_T + 1, nx), z[ux:].reshape(horizon_T, nu)


def reference_solution(qp, settings=SolverSettings(), return_dual=False):
    """High-accuracy optimizer used as the convergence target.

    Runs the splitting method at tight tolerance, then polishes on the
    identified active set. The polished point is accepted when its KKT
    residuals are below 1e-10; otherwise the iteration continues at 1e-10
    tolerance. With ``return_dual`` the multiplier estimate is returned too,
    as ``(z, y)``.

    Raises
    ------
    DomainError
        If the instance is certified infeasible or does not converge.
    """
    warm = SolverSettings(**{**settings.to_dict(), "abs_tol": 1e-7, "rel_tol": 1e-7,
                             "max_iterations": max(settings.max_iterations, 50000),
                             "check_interval": 1})
    report = admm_solve(qp, warm)
    if report.status != SOLVED:
        raise DomainError(f"reference solve failed: {report.status}")
    x, y = polish(qp, report.solution, report.dual)
    if max(kkt_residuals(qp, x, y)) > REFERENCE_TOL:
        tight = SolverSettings(**{**warm.to_dict(), "abs_tol": REFERENCE_TOL,
                                  "rel_tol": REFERENCE_TOL, "max_iterations": 500000})
        report = admm_solve(qp, tight)
        if report.status != SOLVED:
            raise DomainError(f"reference solve failed: {report.status}")
        x, y = report.solution, report.dual
    return (x, y) if return_dual else x


def phi_metric(z_k, z_star, horizon_T, nx=2, nu=1):
    """Mean Euclidean distance of predicted states ``x_1..x_T`` to the target.

    Stage 0 is excluded (it is pinned to the initial condition) and so are
    the inputs.
    """
    xk, _ = split_decision(z_k, horizon_T, nx, nu)
    xs, _ = split_decision(z_star, horizon_T, nx, nu)
    return float(np.linalg.norm(xk[1:] - xs[1:], axis=1).mean())


@dataclass(frozen=True)
class SampleRecord:
    sample_id: int
    x0: tuple
    iterations: int
    status: str


@dataclass(frozen=True)
class Dataset:
    records: tuple
    config_hash: str
    seed: int
    candidates: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def iterations(self):
        return np.array([r.iterations for r in self.records], dtype=float)

    @property
    def sample_ids(self):
        return tuple(r.sample_id for r in self.records)

    def __len__(self):
        return len(self.records)


def candidate_state(config, seed, index):
    """Initial state for candidate ``index``, drawn from its own substream."""
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    lo = np.array([b[0] for b in config.sampling_box])
    hi = np.array([b[1] for b in config.sampling_box])
    return lo + (hi - lo) * rng.random(config.nx)


def _solve_candidate(args):
    config, settings, seed, index = args
    x0 = candidate_state(config, seed, index)
    report = admm_solve(build_qp(config, x0), settings)
    return index, tuple(float(v) for v in x0), report.iterations, report.status


def sample_dataset(config, settings, n_samples, seed, workers=1, batch_size=256,
                   max_candidates=10**6, min_acceptance=1e-3):
    """Rejection-sample ``n_samples`` solvable instances.

    Candidates are drawn uniformly from the sampling box with per-index
    substreams of ``seed``. Instances ending ``PrimalInfeasible``,
    ``DualInfeasible`` or ``MaxIterations`` are rejected; the first
    ``n_samples`` accepted in candidate order are kept, so the output does not
    depend on ``workers``.

    Raises
    ------
    SamplingAbort
        If ``max_candidates`` candidates were examined with an acceptance rate
        below ``min_acceptance``.
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    records = []
    examined = 0
    while len(records) < n_samples:
        if examined >= max_candidates and len(records) < min_acceptance * examined:
            raise SamplingAbort(
                f"accepted {len(records)} of {examined} candidates "
                f"(rate below {min_acceptance:g})",
                candidates=examined, accepted=len(records),
            )
        need = n_samples - len(records)
        size = max(batch_size, need)
        if examined < max_candidates:
            size = min(size, max_candidates - examined)
        jobs = [(config, settings, seed, examined + j) for j in range(size)]
        for index, x0, iters, status in ordered_map(_solve_candidate, jobs, workers):
            if status == SOLVED and len(records) < n_samples:
                records.append(SampleRecord(index, x0, iters, status))
        examined += size
    last = records[-1].sample_id + 1
    return Dataset(
        tuple(records),
        config_hash(config, settings),
        int(seed),
        candidates=last,
        metadata={"config": config.to_dict(), "solver": settings.to_dict()},
    )


def _metric_rows(args):
    config, settings, record, budgets = args
    qp = build_qp(config, record.x0)
    z_star = reference_solution(qp, settings)
    report = admm_solve(qp, settings, snapshot_at=budgets)
    return [
        (record.sample_id, k,
         phi_metric(report.snapshots[k], z_star, config.horizon_T, config.nx, config.nu))
        for k in budgets
    ]


def record_metrics(config, settings, dataset, budgets, workers=1):
    """Long-format ``(sample_id, k, phi)`` rows for every sample and budget."""
    budgets = sorted({int(k) for k in budgets})
    if not budgets:
        raise DomainError("budgets must be nonempty")
    jobs = [(config, settings, rec, budgets) for rec in dataset.records]
    rows = []
    for chunk in ordered_map(_metric_rows, jobs, workers):
        rows.extend(chunk)
    return rows

