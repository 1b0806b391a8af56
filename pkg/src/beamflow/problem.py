"""The convex multicommodity flow problem over arc rates and its power accounting.

Flows are held as a dense ``(n_arcs, n_commodities)`` array whose rows follow
``ProblemQ.arcs`` (sorted by tail, then head). Node-indexed arrays follow the
scenario's node order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CommodityError
from .netmodel import NetworkScenario, capacity_inverse, path_loss

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Commodity:
    source: int
    sink: int
    rate: float

    def __post_init__(self):
        if self.source == self.sink:
            raise CommodityError(f"commodity {self.source}->{self.sink}: source equals sink")
        if not self.rate > 0:
            raise CommodityError(f"commodity {self.source}->{self.sink}: rate must be positive")


def load_commodities(path) -> tuple[Commodity, ...]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise CommodityError("commodity file must hold a non-empty JSON list")
    try:
        return tuple(Commodity(int(c["source"]), int(c["sink"]), float(c["rate"])) for c in data)
    except (KeyError, TypeError) as exc:
        raise CommodityError(f"malformed commodity record ({exc})") from None


def save_commodities(commodities, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            [{"source": c.source, "sink": c.sink, "rate": c.rate} for c in commodities], fh, indent=2
        )
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class ProblemQ:
    """Arc weights, demands and topology index arrays for one instance."""

    scenario: NetworkScenario
    commodities: tuple[Commodity, ...]
    arcs: tuple[tuple[int, int], ...]
    tails: np.ndarray
    heads: np.ndarray
    out_ptr: np.ndarray
    arc_gain: np.ndarray
    station_gain: np.ndarray
    weights: np.ndarray
    demands: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.scenario.n_nodes

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    @property
    def n_commodities(self) -> int:
        return len(self.commodities)

    def zeros(self) -> np.ndarray:
        return np.zeros((self.n_arcs, self.n_commodities))

    def out_arcs(self, k: int) -> slice:
        """Rows of the flow array owned by the node at index ``k``."""
        return slice(int(self.out_ptr[k]), int(self.out_ptr[k + 1]))

    @cached_property
    def incidence(self) -> np.ndarray:
        """Node-arc matrix with +1 at the tail and -1 at the head."""
        b = np.zeros((self.n_nodes, self.n_arcs))
        cols = np.arange(self.n_arcs)
        b[self.tails, cols] = 1.0
        b[self.heads, cols] = -1.0
        return b

    @cached_property
    def arc_index(self) -> dict[tuple[int, int], int]:
        return {a: e for e, a in enumerate(self.arcs)}

    @cached_property
    def in_arcs(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.heads == k) for k in range(self.n_nodes)]


def build_problem(scenario: NetworkScenario, commodities) -> ProblemQ:
    commodities = tuple(commodities)
    if not commodities:
        raise CommodityError("need at least one commodity")
    ids = set(scenario.node_ids)
    for c in commodities:
        for end in (c.source, c.sink):
            if end not in ids:
                raise CommodityError(f"commodity {c.source}->{c.sink}: node {end} not in scenario")

    arcs = scenario.edges
    tails = np.array([scenario.index(i) for i, _ in arcs], dtype=np.intp)
    heads = np.array([scenario.index(j) for _, j in arcs], dtype=np.intp)
    out_ptr = np.searchsorted(tails, np.arange(scenario.n_nodes + 1)).astype(np.intp)

    pos = scenario.positions
    arc_len = np.linalg.norm(pos[tails] - pos[heads], axis=1)
    station_len = np.linalg.norm(pos - np.asarray(scenario.station), axis=1)
    arc_gain = np.atleast_1d(path_loss(arc_len, scenario))
    station_gain = np.atleast_1d(path_loss(station_len, scenario))

    demands = np.zeros((scenario.n_nodes, len(commodities)))
    for m, c in enumerate(commodities):
        demands[scenario.index(c.source), m] += c.rate
        demands[scenario.index(c.sink), m] -= c.rate

    return ProblemQ(
        scenario=scenario,
        commodities=commodities,
        arcs=arcs,
        tails=tails,
        heads=heads,
        out_ptr=out_ptr,
        arc_gain=arc_gain,
        station_gain=station_gain,
        weights=station_gain[tails] / arc_gain,
        demands=demands,
    )


def objective(problem: ProblemQ, x: np.ndarray) -> float:
    """``sum_ij w_ij 2^(sum_m x_ij(m))``."""
    return float(problem.weights @ np.exp2(x.sum(axis=1)))


def conservation_residual(problem: ProblemQ, x: np.ndarray) -> np.ndarray:
    """Outflow minus inflow minus demand, shape ``(n_nodes, n_commodities)``."""
    return problem.incidence @ x - problem.demands


@dataclass(frozen=True)
class PowerReport:
    arc_power: np.ndarray
    intra_power: np.ndarray
    station_power: np.ndarray
    feasible: np.ndarray

    @property
    def all_feasible(self) -> bool:
        return bool(self.feasible.all())

    @property
    def total_intra_power(self) -> float:
        return float(self.intra_power.sum())


def recover_powers(problem: ProblemQ, x: np.ndarray) -> PowerReport:
    """Beam powers that exactly saturate each arc's capacity at flow ``x``.

    A node whose beams exceed ``p_max_watts`` is flagged infeasible and gets
    zero station power rather than a negative one.
    """
    arc_power = np.atleast_1d(capacity_inverse(np.maximum(x.sum(axis=1), 0.0), problem.arc_gain))
    intra = np.bincount(problem.tails, weights=arc_power, minlength=problem.n_nodes)
    p_max = problem.scenario.p_max_watts
    feasible = intra <= p_max
    station = np.where(feasible, p_max - intra, 0.0)
    return PowerReport(arc_power, intra, station, feasible)


def station_received_power(problem: ProblemQ, powers: PowerReport) -> float:
    """Noise-normalised power at the station, ``sum_i P_iC f_iC``."""
    return float(powers.station_power @ problem.station_gain)


def station_rate(problem: ProblemQ, powers: PowerReport) -> float:
    """Common-message rate to the station in bits/s."""
    return problem.scenario.bandwidth_hz * math.log2(1.0 + station_received_power(problem, powers))


def write_power_report(problem: ProblemQ, powers: PowerReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "intra_power_w", "station_power_w", "feasible"])
        for k, nid in enumerate(problem.scenario.node_ids):
            w.writerow(
                [nid, repr(float(powers.intra_power[k])), repr(float(powers.station_power[k])),
                 int(powers.feasible[k])]
            )
