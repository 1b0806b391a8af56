"""Per-iteration solver records and the constraint-violation metric."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .problem import ProblemQ, conservation_residual


def violation_metric(problem: ProblemQ, x: np.ndarray) -> float:
    """L1 norm of the conservation residual over all nodes and commodities."""
    return float(np.abs(conservation_residual(problem, x)).sum())


@dataclass
class ArmijoRecord:
    outer_iter: int
    node: int
    inner_iters: int
    mean_step: float
    mean_armijo_trials: float
    steps: tuple[float, ...] = ()
    trials: tuple[int, ...] = ()


@dataclass
class SolveTrace:
    """Objective and violation per iteration plus the reason the run stopped.

    ``extra`` holds solver-specific columns of the same length as
    ``iteration`` (the primal-dual solver logs its raw iterate there).
    """

    solver: str
    iteration: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    violation: list[float] = field(default_factory=list)
    elapsed: list[float] = field(default_factory=list)
    extra: dict[str, list[float]] = field(default_factory=dict)
    armijo: list[ArmijoRecord] = field(default_factory=list)
    status: str = "running"
    final_state: object = field(default=None, repr=False)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def record(self, k: int, obj: float, viol: float, **extra: float) -> None:
        if self.iteration and k <= self.iteration[-1]:
            raise ValueError("iteration indices must increase")
        self.iteration.append(k)
        self.objective.append(obj)
        self.violation.append(viol)
        self.elapsed.append(time.perf_counter() - self._t0)
        for key, val in extra.items():
            self.extra.setdefault(key, []).append(val)

    @property
    def n_iters(self) -> int:
        return self.iteration[-1] if self.iteration else 0

    def iterations_to(self, threshold: float) -> int | None:
        """First iteration whose violation is at or below ``threshold``."""
        for k, v in zip(self.iteration, self.violation):
            if v <= threshold:
                return k
        return None

    def write_csv(self, path, timings: bool = False) -> None:
        cols = ["iter", "objective", "violation", *self.extra]
        if timings:
            cols.append("elapsed_s")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for n, k in enumerate(self.iteration):
                row = [k, repr(self.objective[n]), repr(self.violation[n])]
                row += [repr(self.extra[key][n]) for key in self.extra]
                if timings:
                    row.append(f"{self.elapsed[n]:.6f}")
                w.writerow(row)

    def write_armijo_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["outer_iter", "node", "inner_iters", "mean_step", "mean_armijo_trials"])
            for r in self.armijo:
                w.writerow([r.outer_iter, r.node, r.inner_iters, repr(r.mean_step),
                            repr(r.mean_armijo_trials)])

    def mean_armijo_trials(self) -> float:
        """Armijo trials per inner iteration, pooled over every subproblem solve."""
        trials = sum(sum(r.trials) for r in self.armijo)
        iters = sum(len(r.trials) for r in self.armijo)
        return trials / iters if iters else float("nan")
