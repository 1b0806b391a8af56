"""Geometry, topology and line-of-sight RF math for directional networks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants

from .errors import ScenarioError

DEFAULT_CARRIER_HZ = 1e9
DEFAULT_BANDWIDTH_HZ = 5e6
DEFAULT_NOISE_TEMP_K = 290.0
DEFAULT_P_MAX_W = 100.0
DEFAULT_SPACING_M = 1000.0


@dataclass(frozen=True)
class Node:
    id: int
    position: tuple[float, float]


@dataclass(frozen=True)
class NetworkScenario:
    """Node placement, arc set and radio constants.

    Arcs are ordered ``(tail_id, head_id)`` pairs and are kept sorted, so each
    node's outgoing arcs form a contiguous block. Node ids must be unique and
    contiguous integers (any starting value).
    """

    nodes: tuple[Node, ...]
    station: tuple[float, float]
    edges: tuple[tuple[int, int], ...]
    carrier_freq_hz: float = DEFAULT_CARRIER_HZ
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    noise_temp_kelvin: float = DEFAULT_NOISE_TEMP_K
    p_max_watts: float = DEFAULT_P_MAX_W
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "station", tuple(float(c) for c in self.station))
        object.__setattr__(
            self, "edges", tuple(sorted({(int(i), int(j)) for i, j in self.edges}))
        )
        _validate(self)
        object.__setattr__(self, "_index", {n.id: k for k, n in enumerate(self.nodes)})

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float)

    def index(self, node_id: int) -> int:
        """Zero-based position of ``node_id`` in ``nodes``."""
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    @property
    def wavelength_m(self) -> float:
        return constants.c / self.carrier_freq_hz

    @property
    def noise_psd(self) -> float:
        """N0 = kT in W/Hz."""
        return constants.k * self.noise_temp_kelvin

    def distance(self, i: int, j: int) -> float:
        a = self.nodes[self.index(i)].position
        b = self.nodes[self.index(j)].position
        return math.dist(a, b)

    def station_distance(self, i: int) -> float:
        return math.dist(self.nodes[self.index(i)].position, self.station)

    def arc_loss(self, i: int, j: int) -> float:
        return path_loss(self.distance(i, j), self)

    def station_loss(self, i: int) -> float:
        return path_loss(self.station_distance(i), self)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "position": list(n.position)} for n in self.nodes],
            "station": list(self.station),
            "edges": [list(e) for e in self.edges],
            "carrier_freq_hz": self.carrier_freq_hz,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_temp_kelvin": self.noise_temp_kelvin,
            "p_max_watts": self.p_max_watts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkScenario":
        for key in ("nodes", "station"):
            if key not in data:
                raise ScenarioError(key, "missing")
        try:
            nodes = tuple(
                Node(int(n["id"]), (float(n["position"][0]), float(n["position"][1])))
                for n in data["nodes"]
            )
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ScenarioError("nodes", f"malformed node record ({exc})") from None
        station = data["station"]
        if not isinstance(station, (list, tuple)) or len(station) != 2:
            raise ScenarioError("station", "expected [x, y]")
        arcs = [tuple(e) for e in data.get("edges", [])]
        for i, j in data.get("undirected_edges", []):
            arcs += [(i, j), (j, i)]
        if any(len(a) != 2 for a in arcs):
            raise ScenarioError("edges", "each edge must be a [tail, head] pair")
        kwargs = {
            k: float(data[k])
            for k in ("carrier_freq_hz", "bandwidth_hz", "noise_temp_kelvin", "p_max_watts")
            if k in data
        }
        return cls(nodes=nodes, station=tuple(station), edges=tuple(arcs), **kwargs)


def _validate(sc: NetworkScenario) -> None:
    ids = [n.id for n in sc.nodes]
    if len(ids) < 2:
        raise ScenarioError("nodes", "need at least two nodes")
    if len(set(ids)) != len(ids):
        raise ScenarioError("nodes", "duplicate node id")
    if sorted(ids) != list(range(min(ids), min(ids) + len(ids))):
        raise ScenarioError("nodes", "node ids must be contiguous integers")
    idset = set(ids)
    for i, j in sc.edges:
        if i == j:
            raise ScenarioError("edges", f"self-loop at node {i}")
        if i not in idset or j not in idset:
            raise ScenarioError("edges", f"arc ({i}, {j}) references unknown node")
    pos = {n.id: n.position for n in sc.nodes}
    for i, j in sc.edges:
        if math.dist(pos[i], pos[j]) <= 0:
            raise ScenarioError("edges", f"arc ({i}, {j}) has zero length")
    for n in sc.nodes:
        if math.dist(n.position, sc.station) <= 0:
            raise ScenarioError("station", f"coincides with node {n.id}")
    if not sc.carrier_freq_hz > 0:
        raise ScenarioError("carrier_freq_hz", "must be positive")
    if not sc.bandwidth_hz > 0:
        raise ScenarioError("bandwidth_hz", "must be positive")
    if not sc.noise_temp_kelvin > 0:
        raise ScenarioError("noise_temp_kelvin", "must be positive")
    if not sc.p_max_watts > 0:
        raise ScenarioError("p_max_watts", "must be positive")


def path_loss(distance_m, scenario: NetworkScenario):
    """Noise-normalised LOS gain ``1 / (N0 W (4 pi / lambda)^2 d^2)`` in 1/W.

    Accepts a scalar or an array of distances.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be strictly positive")
    k = scenario.noise_psd * scenario.bandwidth_hz * (4 * math.pi / scenario.wavelength_m) ** 2
    f = 1.0 / (k * d * d)
    return float(f) if f.ndim == 0 else f


def capacity(power_watts, f):
    """Spectral efficiency ``log2(1 + f P)`` in bits/s/Hz."""
    p = np.asarray(power_watts, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be nonnegative")
    c = np.log1p(np.asarray(f, dtype=float) * p) / math.log(2.0)
    return float(c) if c.ndim == 0 else c


def capacity_inverse(rate, f):
    """Power needed to carry ``rate`` bits/s/Hz on a link with gain ``f``."""
    r = np.asarray(rate, dtype=float)
    if np.any(r < 0):
        raise ValueError("rate must be nonnegative")
    p = np.expm1(np.log(2.0) * r) / np.asarray(f, dtype=float)
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class Neighborhoods:
    """One-hop (``one_hop``) and two-hop (``two_hop``) sets keyed by node id."""

    one_hop: dict[int, frozenset[int]]
    two_hop: dict[int, frozenset[int]]

    @property
    def d_max(self) -> int:
        return max(len(v) for v in self.one_hop.values())


def build_neighborhoods(scenario: NetworkScenario) -> Neighborhoods:
    adj: dict[int, set[int]] = {i: set() for i in scenario.node_ids}
    for i, j in scenario.edges:
        adj[i].add(j)
        adj[j].add(i)
    two = {}
    for i, nbrs in adj.items():
        reach = set(nbrs)
        for j in nbrs:
            reach |= adj[j]
        reach.discard(i)
        two[i] = frozenset(reach)
    return Neighborhoods({i: frozenset(v) for i, v in adj.items()}, two)


def grid_scenario(
    rows: int,
    cols: int,
    spacing_m: float = DEFAULT_SPACING_M,
    jitter_seed: int | None = None,
    jitter_m: float = 0.0,
    station: tuple[float, float] | None = None,
    **radio,
) -> NetworkScenario:
    """Lattice of ``rows x cols`` nodes with 4-adjacency, both arc directions.

    Node ids start at 1 and run row-major, so on a 6x6 grid node 1 and node 36
    are opposite corners, as are 6 and 31. Positions get uniform jitter in
    ``[-jitter_m, jitter_m]`` per coordinate from a generator seeded by
    ``jitter_seed``. The station defaults to the node centroid.
    """
    if rows * cols < 2:
        raise ScenarioError("nodes", "grid needs at least two nodes")
    rng = np.random.default_rng(jitter_seed)
    nodes, arcs = [], []
    for r in range(rows):
        for c in range(cols):
            nid = r * cols + c + 1
            x, y = c * spacing_m, r * spacing_m
            if jitter_m > 0:
                dx, dy = rng.uniform(-jitter_m, jitter_m, size=2)
                x, y = x + float(dx), y + float(dy)
            nodes.append(Node(nid, (float(x), float(y))))
            if c + 1 < cols:
                arcs += [(nid, nid + 1), (nid + 1, nid)]
            if r + 1 < rows:
                arcs += [(nid, nid + cols), (nid + cols, nid)]
    if station is None:
        pos = np.array([n.position for n in nodes])
        station = tuple(float(v) for v in pos.mean(axis=0))
    return NetworkScenario(tuple(nodes), station, tuple(arcs), **radio)


def save_scenario(scenario: NetworkScenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def load_scenario(path) -> NetworkScenario:
    with open(path) as fh:
        data = json.load(fh)
    return NetworkScenario.from_dict(data)
