"""Projected primal-dual gradient method with running-average primal recovery.

Both phases read only iteration-``k`` values (Jacobi ordering), so the per-arc
primal updates and per-node dual updates are independent within a phase.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError
from .problem import LN2, ProblemQ, objective
from .trace import SolveTrace, violation_metric

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrimalDualConfig:
    alpha: float = 1e-3
    max_iters: int = 200_000
    violation_tol: float = 1e-3
    log_every: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")


@dataclass
class PrimalDualState:
    x: np.ndarray
    p: np.ndarray
    x_avg: np.ndarray
    k: int = 0

    @classmethod
    def initial(cls, problem: ProblemQ) -> "PrimalDualState":
        return cls(
            x=problem.zeros(),
            p=np.zeros((problem.n_nodes, problem.n_commodities)),
            x_avg=problem.zeros(),
        )


def _arcs_of(problem: ProblemQ, nodes) -> np.ndarray:
    return np.concatenate(
        [np.arange(problem.out_ptr[k], problem.out_ptr[k + 1]) for k in nodes]
    ).astype(np.intp)


def primal_step(state: PrimalDualState, problem: ProblemQ, config: PrimalDualConfig,
                nodes=None) -> np.ndarray:
    """Projected gradient step on the flows.

    With ``nodes`` (node indices) only the arcs those nodes transmit on are
    updated, reading nothing but those arcs and the multipliers at their two
    ends; the remaining rows are copied through.
    """
    if nodes is None:
        x, p = state.x, state.p
        t, h, w = problem.tails, problem.heads, problem.weights
        grad = LN2 * w[:, None] * np.exp2(x.sum(axis=1, keepdims=True)) + p[h] - p[t]
        return np.maximum(x - config.alpha * grad, 0.0)

    arcs = _arcs_of(problem, nodes)
    new = np.array(state.x, copy=True)
    if arcs.size == 0:
        return new
    xa = np.asarray(state.x[arcs])
    t, h = problem.tails[arcs], problem.heads[arcs]
    grad = (LN2 * problem.weights[arcs, None] * np.exp2(xa.sum(axis=1, keepdims=True))
            + np.asarray(state.p[h]) - np.asarray(state.p[t]))
    new[arcs] = np.maximum(xa - config.alpha * grad, 0.0)
    return new


def dual_step(state: PrimalDualState, problem: ProblemQ, config: PrimalDualConfig,
              nodes=None) -> np.ndarray:
    """Multiplier ascent ``p_i += alpha (inflow - outflow + s_i)``.

    Demands are stored as net outflow, so this is ``p_i -= alpha * residual_i``.
    """
    if nodes is None:
        resid = problem.incidence @ state.x - problem.demands
        return state.p - config.alpha * resid

    new = np.array(state.p, copy=True)
    for k in nodes:
        out = np.asarray(state.x[problem.out_arcs(k)]).sum(axis=0)
        inflow = np.asarray(state.x[problem.in_arcs[k]]).sum(axis=0)
        new[k] = np.asarray(state.p[k]) + config.alpha * (inflow - out + problem.demands[k])
    return new


def average_update(state: PrimalDualState) -> np.ndarray:
    """Running mean of iterates ``1..k``; ``state.k`` must already count ``state.x``."""
    if state.k < 1:
        raise ValueError("average needs k >= 1")
    return state.x / state.k + (1.0 - 1.0 / state.k) * state.x_avg


def pd_iteration(state: PrimalDualState, problem: ProblemQ,
                 config: PrimalDualConfig) -> PrimalDualState:
    x = primal_step(state, problem, config)
    p = dual_step(state, problem, config)
    nxt = replace(state, x=x, p=p, k=state.k + 1)
    nxt.x_avg = average_update(nxt)
    return nxt


def solve_pd(problem: ProblemQ, config: PrimalDualConfig = PrimalDualConfig(),
             state: PrimalDualState | None = None):
    """Run until the averaged flow meets ``violation_tol`` or ``max_iters``.

    Returns ``(x_avg, trace)``. The trace logs the averaged point in its main
    columns and the raw iterate under ``extra``.
    """
    state = state or PrimalDualState.initial(problem)
    trace = SolveTrace("pd")
    for k in range(1, config.max_iters + 1):
        state = pd_iteration(state, problem, config)
        if not (np.isfinite(state.x).all() and np.isfinite(state.p).all()):
            trace.status = "diverged"
            raise DivergenceError(k)
        viol = violation_metric(problem, state.x_avg)
        done = viol <= config.violation_tol
        if done or k % config.log_every == 0 or k == config.max_iters:
            trace.record(
                k, objective(problem, state.x_avg), viol,
                objective_iterate=objective(problem, state.x),
                violation_iterate=violation_metric(problem, state.x),
            )
        if done:
            trace.status = "tol"
            break
    else:
        trace.status = "max_iters"
    log.info("pd stopped (%s) after %d iterations, violation %.3g",
             trace.status, state.k, trace.violation[-1])
    trace.final_state = state
    return state.x_avg, trace
