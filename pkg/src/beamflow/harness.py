"""Experiment orchestration: reference optimum, solver comparison, Armijo stats."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.optimize import minimize_scalar

from .adal import AdalConfig, solve_adal
from .errors import BeamflowError, OracleTooLargeError
from .ospf import route_ospf
from .primal_dual import PrimalDualConfig, solve_pd
from .problem import (LN2, ProblemQ, objective, recover_powers, station_rate,
                      station_received_power, write_power_report)
from .trace import SolveTrace, violation_metric

__all__ = [
    "ComparisonReport", "OracleResult", "SolverSummary", "SolveTrace",
    "armijo_histograms", "compare_solvers", "oracle_solve_small", "summarize",
    "violation_metric",
]

log = logging.getLogger(__name__)

VIOLATION_MILESTONES = (1e-1, 1e-2, 1e-3)
MAX_ORACLE_PATHS = 10_000


@dataclass
class OracleResult:
    x: np.ndarray
    objective: float
    paths: list[list[tuple[int, ...]]]
    path_flows: list[np.ndarray]
    gap: float
    sweeps: int


def oracle_solve_small(problem: ProblemQ, tol: float = 1e-10, max_sweeps: int = 10_000) -> OracleResult:
    """Reference optimum by optimising over simple-path flows.

    Every simple path of each commodity is enumerated; the split of each
    commodity's rate over its paths is improved by exact line searches that
    move rate between one pair of paths at a time, until a full sweep changes
    the objective by less than ``tol``. ``gap`` bounds the suboptimality: it is
    the first-order gap against the cheapest path per commodity.
    """
    sc = problem.scenario
    g = nx.DiGraph(list(sc.edges))
    paths, arc_sets = [], []
    for c in problem.commodities:
        found = list(itertools.islice(nx.all_simple_paths(g, c.source, c.sink), MAX_ORACLE_PATHS + 1))
        if len(found) > MAX_ORACLE_PATHS:
            raise OracleTooLargeError(
                f"commodity {c.source}->{c.sink} has more than {MAX_ORACLE_PATHS} simple paths"
            )
        if not found:
            raise OracleTooLargeError(f"commodity {c.source}->{c.sink} has no path")
        paths.append([tuple(p) for p in found])
        arc_sets.append([np.array([problem.arc_index[(a, b)] for a, b in zip(p, p[1:])])
                         for p in found])

    w = problem.weights
    flows = [np.full(len(ps), c.rate / len(ps)) for ps, c in zip(paths, problem.commodities)]
    load = np.zeros(problem.n_arcs)
    for m, arcs in enumerate(arc_sets):
        for y, a in zip(flows[m], arcs):
            load[a] += y

    def total(ld):
        return float(w @ np.exp2(ld))

    value = total(load)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        before = value
        for m, arcs in enumerate(arc_sets):
            y = flows[m]
            for a, b in itertools.combinations(range(len(arcs)), 2):
                lo, hi = -y[b], y[a]
                if hi - lo <= 0:
                    continue
                only_a = np.setdiff1d(arcs[a], arcs[b])
                only_b = np.setdiff1d(arcs[b], arcs[a])
                base_a, base_b = load[only_a], load[only_b]
                wa, wb = w[only_a], w[only_b]

                def moved(delta):
                    return float(wa @ np.exp2(base_a - delta) + wb @ np.exp2(base_b + delta))

                res = minimize_scalar(moved, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-13})
                delta = res.x
                if moved(delta) >= moved(0.0):
                    continue
                y[a] -= delta
                y[b] += delta
                load[only_a] -= delta
                load[only_b] += delta
        value = total(load)
        if abs(before - value) < tol:
            break

    x = problem.zeros()
    gap = 0.0
    marginal = LN2 * w * np.exp2(load)
    for m, arcs in enumerate(arc_sets):
        y = np.maximum(flows[m], 0.0)
        for yp, a in zip(y, arcs):
            x[a, m] += yp
        lengths = np.array([marginal[a].sum() for a in arcs])
        gap += float(y @ (lengths - lengths.min()))
    return OracleResult(x, objective(problem, x), paths, flows, gap, sweeps)


@dataclass
class SolverSummary:
    solver: str
    status: str
    iterations: int
    final_objective: float
    final_violation: float
    iterations_to: dict[str, int | None]
    total_intra_power: float
    station_received_power: float
    station_rate_bps: float
    all_feasible: bool
    infeasible_nodes: list[int] = field(default_factory=list)
    mean_armijo_trials: float | None = None


@dataclass
class ComparisonReport:
    reference_objective: float | None
    reference_source: str
    solvers: dict[str, SolverSummary]

    def to_dict(self) -> dict:
        return {
            "reference_objective": self.reference_objective,
            "reference_source": self.reference_source,
            "solvers": {k: asdict(v) for k, v in self.solvers.items()},
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def summarize(problem: ProblemQ, name: str, x: np.ndarray, trace: SolveTrace | None) -> SolverSummary:
    powers = recover_powers(problem, x)
    ids = problem.scenario.node_ids
    milestones = {f"{t:g}": (trace.iterations_to(t) if trace else 0) for t in VIOLATION_MILESTONES}
    mean_trials = None
    if trace is not None and trace.armijo:
        mean_trials = trace.mean_armijo_trials()
    return SolverSummary(
        solver=name,
        status=trace.status if trace else "exact",
        iterations=trace.n_iters if trace else 0,
        final_objective=objective(problem, x),
        final_violation=violation_metric(problem, x),
        iterations_to=milestones,
        total_intra_power=powers.total_intra_power,
        station_received_power=station_received_power(problem, powers),
        station_rate_bps=station_rate(problem, powers),
        all_feasible=powers.all_feasible,
        infeasible_nodes=[ids[k] for k in np.flatnonzero(~powers.feasible)],
        mean_armijo_trials=mean_trials,
    )


def _reference(problem, finals):
    try:
        return oracle_solve_small(problem).objective, "path_oracle"
    except OracleTooLargeError:
        pass
    if finals:
        return min(finals), "best_solver"
    return None, "none"


def compare_solvers(problem: ProblemQ, configs: dict, out_dir=None) -> ComparisonReport:
    """Run each requested solver on ``problem`` and collect comparable metrics.

    ``configs`` maps solver name (``pd``, ``adal``, ``ospf``) to its config;
    ``ospf`` takes ``None`` or ``{"metric": "hops"}``. With ``out_dir`` the
    report, traces, power reports and Armijo histograms are written there.
    """
    results = {}
    for name, cfg in configs.items():
        try:
            if name == "pd":
                x, trace = solve_pd(problem, cfg or PrimalDualConfig())
            elif name == "adal":
                x, trace = solve_adal(problem, cfg or AdalConfig())
            elif name == "ospf":
                x, trace = route_ospf(problem, **(cfg or {})).x, None
            else:
                raise ValueError(f"unknown solver {name!r}")
        except BeamflowError as exc:
            exc.solver = name
            raise
        results[name] = (x, trace)

    summaries = {n: summarize(problem, n, x, t) for n, (x, t) in results.items()}
    finals = [s.final_objective for s in summaries.values()
              if s.solver != "ospf" and s.final_violation <= 1e-2]
    ref, source = _reference(problem, finals)
    report = ComparisonReport(ref, source, summaries)

    for name, (x, trace) in results.items():
        if trace is not None and ref:
            trace.extra["objective_error"] = [abs(v - ref) / ref for v in trace.objective]

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.write_json(out / "comparison.json")
        for name, (x, trace) in results.items():
            write_power_report(problem, recover_powers(problem, x), out / f"power_{name}.csv")
            if trace is None:
                continue
            trace.write_csv(out / f"trace_{name}.csv")
            if trace.armijo:
                trace.write_armijo_csv(out / f"armijo_{name}.csv")
                for metric, (bins, counts) in armijo_histograms(trace).items():
                    write_histogram(out / f"hist_{metric}_{name}.csv", bins, counts)
    return report


def armijo_histograms(trace: SolveTrace, bins: int = 20) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Histograms of inner iterations, accepted step sizes and mean trials.

    Step sizes are binned on a log2 scale since they are powers of ``beta``.
    """
    inner = np.array([r.inner_iters for r in trace.armijo], dtype=float)
    steps = np.array([s for r in trace.armijo for s in r.steps], dtype=float)
    trials = np.array([r.mean_armijo_trials for r in trace.armijo if r.inner_iters], dtype=float)
    out = {}
    if inner.size:
        out["inner_iters"] = _hist(inner, bins)
    if steps.size:
        out["log2_step"] = _hist(np.log2(steps), bins)
    if trials.size:
        out["mean_trials"] = _hist(trials, bins)
    return out


def _hist(values, bins):
    counts, edges = np.histogram(values, bins=bins)
    return edges[:-1], counts


def write_histogram(path, bins, counts) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "count"])
        for b, c in zip(bins, counts):
            w.writerow([repr(float(b)), int(c)])


def armijo_complexity(problem: ProblemQ, config: AdalConfig,
                      scalings=("paper_diagonal", "unscaled")) -> dict[str, SolveTrace]:
    """Solve the same instance once per scaling mode and return the traces."""
    return {mode: solve_adal(problem, replace(config, scaling=mode))[1] for mode in scalings}
