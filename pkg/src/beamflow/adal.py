"""Accelerated distributed augmented Lagrangian (ADAL) solver.

Each outer iteration every node minimises its local augmented Lagrangian over
its own outgoing flows, starting from a common snapshot of the iteration-``k``
state (Jacobi semantics). The minimiser is relaxed by ``tau`` and the
multipliers move by ``rho * tau`` times the conservation residual.

A node's subproblem is assembled in :class:`NodeLocalView` from flows of nodes
at most two hops away and multipliers of its one-hop neighbours. Rows of the
penalty outside ``{i} + N_i`` do not depend on node ``i``'s flows, so the view
drops them; :meth:`NodeLocalView.value` is therefore the local augmented
Lagrangian up to an additive constant that is fixed for the whole inner solve.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, LineSearchError
from .netmodel import build_neighborhoods
from .problem import LN2, ProblemQ, objective
from .trace import ArmijoRecord, SolveTrace, violation_metric

log = logging.getLogger(__name__)

SCALINGS = ("paper_diagonal", "full_diagonal", "unscaled")
MAX_ARMIJO_TRIALS = 60
_ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class ArmijoParams:
    s: float = 1.0
    beta: float = 0.5
    sigma: float = 0.1

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("armijo s must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("armijo beta must lie in (0, 1)")
        if not 0 < self.sigma < 1:
            raise ValueError("armijo sigma must lie in (0, 1)")


@dataclass(frozen=True)
class AdalConfig:
    """Solver settings. ``tau=None`` means ``0.9 / d_max`` for the problem's graph."""

    rho: float = 1.0
    tau: float | None = None
    inner_tol: float = 1e-3
    inner_max_iters: int = 200
    armijo: ArmijoParams = field(default_factory=ArmijoParams)
    scaling: str = "paper_diagonal"
    max_iters: int = 5000
    violation_tol: float = 1e-3
    threads: int | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.inner_max_iters < 1 or self.max_iters < 1:
            raise ValueError("iteration limits must be at least 1")

    def resolve_tau(self, d_max: int) -> float:
        tau = 0.9 / d_max if self.tau is None else self.tau
        if not 0 < tau < 1.0 / d_max:
            raise ValueError(f"tau must lie in (0, 1/d_max) = (0, {1.0 / d_max:.4g})")
        return tau


class Snapshot:
    """Read access to the iteration-``k`` flows and multipliers, by node index."""

    def __init__(self, problem: ProblemQ, x: np.ndarray, lam: np.ndarray):
        self.problem = problem
        self._x = x
        self._lam = lam

    def flows(self, j: int) -> np.ndarray:
        """Outgoing flows held by node ``j``, shape ``(out_degree, M)``."""
        return self._x[self.problem.out_arcs(j)]

    def multiplier(self, j: int) -> np.ndarray:
        return self._lam[j]


class AuditedSnapshot(Snapshot):
    """Snapshot that records every node whose data is read, per reader."""

    def __init__(self, problem, x, lam):
        super().__init__(problem, x, lam)
        self.reader: int | None = None
        self.flow_reads: dict[int, set[int]] = {}
        self.multiplier_reads: dict[int, set[int]] = {}

    def flows(self, j):
        self.flow_reads.setdefault(self.reader, set()).add(j)
        return super().flows(j)

    def multiplier(self, j):
        self.multiplier_reads.setdefault(self.reader, set()).add(j)
        return super().multiplier(j)


class NodeLocalView:
    """Everything node ``i`` may know when solving its subproblem.

    Built from a :class:`Snapshot`, it reads flows only of ``i`` and of nodes in
    its two-hop set and multipliers only of ``i`` and its one-hop neighbours.
    Candidate points are ``(out_degree, M)`` arrays aligned with
    ``problem.arcs[problem.out_arcs(i)]``.
    """

    def __init__(self, problem: ProblemQ, snapshot: Snapshot, i: int, rho: float):
        self.node = i
        self.rho = rho
        rows = problem.out_arcs(i)
        self.heads = problem.heads[rows]
        self.weights = problem.weights[rows]
        self.x0 = np.array(snapshot.flows(i), dtype=float)
        self.lam_self = np.array(snapshot.multiplier(i), dtype=float)
        self.lam_nbr = np.array([snapshot.multiplier(l) for l in self.heads], dtype=float)
        self.lam_nbr = self.lam_nbr.reshape(len(self.heads), problem.n_commodities)

        d = problem.demands
        # penalty row i: -(inflow_i) - d_i
        self.c_self = -_inflow(problem, snapshot, i, exclude=None) - d[i]
        # penalty row l: outflow_l - inflow_l from nodes other than i - d_l
        self.c_nbr = np.array([
            np.asarray(snapshot.flows(l)).sum(axis=0)
            - _inflow(problem, snapshot, l, exclude=i) - d[l]
            for l in self.heads
        ]).reshape(len(self.heads), problem.n_commodities)

    @property
    def shape(self):
        return self.x0.shape

    def value(self, x: np.ndarray) -> float:
        served = x.sum(axis=0)
        obj = float(self.weights @ np.exp2(x.sum(axis=1)))
        lin = float(self.lam_self @ served - (self.lam_nbr * x).sum())
        pen = float(((served + self.c_self) ** 2).sum() + ((self.c_nbr - x) ** 2).sum())
        return obj + lin + 0.5 * self.rho * pen

    def gradient(self, x: np.ndarray) -> np.ndarray:
        served = x.sum(axis=0)
        expo = LN2 * self.weights * np.exp2(x.sum(axis=1))
        return (expo[:, None] + (self.lam_self[None, :] - self.lam_nbr)
                + self.rho * ((served + self.c_self)[None, :] - (self.c_nbr - x)))

    def hessian_diag(self, x: np.ndarray, mode: str = "paper_diagonal") -> np.ndarray:
        base = np.full(x.shape, 2.0 * self.rho)
        if mode == "paper_diagonal":
            return base
        if mode == "full_diagonal":
            return base + (LN2 ** 2 * self.weights * np.exp2(x.sum(axis=1)))[:, None]
        raise ValueError(f"no Hessian diagonal for mode {mode!r}")


def _inflow(problem: ProblemQ, snapshot: Snapshot, k: int, exclude: int | None) -> np.ndarray:
    total = np.zeros(problem.n_commodities)
    for e in problem.in_arcs[k]:
        j = int(problem.tails[e])
        if j == exclude:
            continue
        total += snapshot.flows(j)[e - problem.out_ptr[j]]
    return total


def local_al_value(view: NodeLocalView, x: np.ndarray, rho: float | None = None) -> float:
    if rho is not None and rho != view.rho:
        view = _with_rho(view, rho)
    return view.value(x)


def local_al_gradient(view: NodeLocalView, x: np.ndarray, rho: float | None = None) -> np.ndarray:
    if rho is not None and rho != view.rho:
        view = _with_rho(view, rho)
    return view.gradient(x)


def local_al_hessian_diag(view: NodeLocalView, x: np.ndarray, rho: float | None = None,
                          mode: str = "paper_diagonal") -> np.ndarray:
    if rho is not None and rho != view.rho:
        view = _with_rho(view, rho)
    return view.hessian_diag(x, mode)


def _with_rho(view, rho):
    clone = object.__new__(NodeLocalView)
    clone.__dict__.update(view.__dict__)
    clone.rho = rho
    return clone


def scaled_direction(gradient: np.ndarray, diag: np.ndarray | None, mode: str) -> np.ndarray:
    """Descent direction ``-g / diag`` (or ``-g`` when ``mode='unscaled'``)."""
    if mode == "unscaled":
        return -gradient
    if diag is None or np.any(~(diag > 0)):
        raise ValueError("Hessian diagonal must be strictly positive")
    return -gradient / diag


def projected_gradient_norm(view: NodeLocalView, x: np.ndarray, g: np.ndarray | None = None) -> float:
    if g is None:
        g = view.gradient(x)
    return float(np.linalg.norm(np.maximum(x - g, 0.0) - x))


@dataclass
class InnerStats:
    iterations: int = 0
    steps: list[float] = field(default_factory=list)
    trials: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    precision_limited: bool = False

    @property
    def mean_step(self) -> float:
        return float(np.mean(self.steps)) if self.steps else float("nan")

    @property
    def mean_trials(self) -> float:
        return float(np.mean(self.trials)) if self.trials else float("nan")


def armijo_inner_solve(view: NodeLocalView, config: AdalConfig, x0: np.ndarray | None = None):
    """Scaled projected gradient with Armijo backtracking on the local AL.

    Stops once ``||[x - grad]_+ - x|| <= inner_tol`` or after
    ``inner_max_iters`` updates, or when the Armijo test fails only because
    the predicted decrease is below floating-point resolution. The acceptance test compares the decrease
    against ``sigma * beta^m * <dir, u>`` with ``u = [x + s dir]_+ - x``; this
    product is nonnegative for any descent direction scaled by a positive
    diagonal.
    """
    arm = config.armijo
    x = np.array(view.x0 if x0 is None else x0, dtype=float)
    stats = InnerStats()
    fx = view.value(x)
    stats.values.append(fx)
    for _ in range(config.inner_max_iters):
        g = view.gradient(x)
        if projected_gradient_norm(view, x, g) <= config.inner_tol:
            break
        diag = None if config.scaling == "unscaled" else view.hessian_diag(x, config.scaling)
        direction = scaled_direction(g, diag, config.scaling)
        u = np.maximum(x + arm.s * direction, 0.0) - x
        slope = arm.sigma * float((direction * u).sum())
        step = 1.0
        for trial in range(1, MAX_ARMIJO_TRIALS + 1):
            cand = np.maximum(x + step * u, 0.0)
            fc = view.value(cand)
            if fx - fc >= step * slope:
                break
            step *= arm.beta
        else:
            if slope <= _ROUNDOFF * max(1.0, abs(fx)):
                # predicted decrease is below what the value can resolve
                stats.precision_limited = True
                break
            raise LineSearchError(
                f"Armijo rule not met in {MAX_ARMIJO_TRIALS} trials", node=view.node
            )
        x, fx = cand, fc
        stats.iterations += 1
        stats.steps.append(step)
        stats.trials.append(trial)
        stats.values.append(fx)
    return x, stats


@dataclass
class AdalState:
    x: np.ndarray
    lam: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, problem: ProblemQ) -> "AdalState":
        return cls(problem.zeros(), np.zeros((problem.n_nodes, problem.n_commodities)))


def _thread_count(config: AdalConfig) -> int:
    if config.threads is not None:
        return max(1, config.threads)
    env = os.environ.get("BEAMFLOW_THREADS")
    return max(1, int(env)) if env else 1


def adal_outer_step(state: AdalState, problem: ProblemQ, config: AdalConfig, tau: float,
                    snapshot: Snapshot | None = None, executor=None):
    """One ADAL iteration. Returns ``(new_state, {node: InnerStats})``.

    All node subproblems see the same ``snapshot`` of iteration ``k``. Pass an
    :class:`AuditedSnapshot` to record which nodes' data each solve touched.
    """
    snap = snapshot or Snapshot(problem, state.x, state.lam)
    audited = isinstance(snap, AuditedSnapshot)

    def solve_node(i):
        if audited:
            snap.reader = i
        view = NodeLocalView(problem, snap, i, config.rho)
        try:
            return armijo_inner_solve(view, config)
        except LineSearchError as exc:
            raise LineSearchError(str(exc).split(": ", 1)[-1], node=problem.scenario.node_ids[i])

    nodes = range(problem.n_nodes)
    if executor is not None and not audited:
        results = list(executor.map(solve_node, nodes))
    else:
        results = [solve_node(i) for i in nodes]

    x_hat = np.empty_like(state.x)
    for i, (xi, _) in enumerate(results):
        x_hat[problem.out_arcs(i)] = xi
    x_new = state.x + tau * (x_hat - state.x)
    resid = problem.incidence @ x_new - problem.demands
    lam_new = state.lam + config.rho * tau * resid
    stats = {i: st for i, (_, st) in enumerate(results)}
    return AdalState(x_new, lam_new, state.k + 1), stats


def solve_adal(problem: ProblemQ, config: AdalConfig = AdalConfig(),
               state: AdalState | None = None, snapshot_factory=None):
    """Run ADAL until the violation of ``x^{k+1}`` meets the tolerance.

    Returns ``(x, trace)``; ``trace.armijo`` has one record per node per outer
    iteration. ``snapshot_factory(problem, x, lam)`` overrides how snapshots
    are built (used for access audits).
    """
    tau = config.resolve_tau(build_neighborhoods(problem.scenario).d_max)
    state = state or AdalState.initial(problem)
    trace = SolveTrace("adal")
    node_ids = problem.scenario.node_ids
    threads = _thread_count(config)
    executor = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for k in range(1, config.max_iters + 1):
            snap = snapshot_factory(problem, state.x, state.lam) if snapshot_factory else None
            state, stats = adal_outer_step(state, problem, config, tau, snap, executor)
            if not (np.isfinite(state.x).all() and np.isfinite(state.lam).all()):
                trace.status = "diverged"
                raise DivergenceError(k)
            viol = violation_metric(problem, state.x)
            trace.record(k, objective(problem, state.x), viol)
            for i, st in stats.items():
                trace.armijo.append(ArmijoRecord(
                    k, node_ids[i], st.iterations, st.mean_step, st.mean_trials,
                    tuple(st.steps), tuple(st.trials),
                ))
            if viol <= config.violation_tol:
                trace.status = "tol"
                break
        else:
            trace.status = "max_iters"
    finally:
        if executor is not None:
            executor.shutdown()
    log.info("adal stopped (%s) after %d iterations, violation %.3g",
             trace.status, state.k, trace.violation[-1])
    trace.final_state = state
    return state.x, trace
