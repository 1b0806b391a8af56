"""Minimum-distance single-path routing baseline."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import NoRouteError
from .netmodel import NetworkScenario
from .problem import PowerReport, ProblemQ, recover_powers


def shortest_path(scenario: NetworkScenario, source: int, sink: int,
                  metric: str = "distance") -> list[int]:
    """Dijkstra over arcs weighted by Euclidean length (or 1 per hop).

    Among equal-length routes the lexicographically smallest node sequence
    wins: labels are ordered by ``(length, path)`` and each node is settled by
    its first popped label.
    """
    if metric not in ("distance", "hops"):
        raise ValueError("metric must be 'distance' or 'hops'")
    adj: dict[int, list[tuple[int, float]]] = {i: [] for i in scenario.node_ids}
    for i, j in scenario.edges:
        cost = scenario.distance(i, j) if metric == "distance" else 1.0
        adj[i].append((j, cost))

    heap = [(0.0, (source,))]
    settled = set()
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == sink:
            return list(path)
        for nxt, cost in adj[node]:
            if nxt not in settled:
                heapq.heappush(heap, (dist + cost, path + (nxt,)))
    raise NoRouteError([(source, sink)])


@dataclass(frozen=True)
class RouteResult:
    paths: tuple[tuple[int, ...], ...]
    x: np.ndarray
    powers: PowerReport


def route_ospf(problem: ProblemQ, metric: str = "distance") -> RouteResult:
    """Load every commodity at its full rate on its shortest path.

    Commodities sharing an arc add their rates before the capacity inversion.
    """
    x = problem.zeros()
    paths, missing = [], []
    for m, c in enumerate(problem.commodities):
        try:
            path = shortest_path(problem.scenario, c.source, c.sink, metric)
        except NoRouteError:
            missing.append((c.source, c.sink))
            continue
        paths.append(tuple(path))
        for a, b in zip(path, path[1:]):
            x[problem.arc_index[(a, b)], m] += c.rate
    if missing:
        raise NoRouteError(missing)
    return RouteResult(tuple(paths), x, recover_powers(problem, x))
