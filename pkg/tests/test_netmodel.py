import json
import math

import numpy as np
import pytest

from beamflow.errors import ScenarioError
from beamflow.netmodel import (NetworkScenario, Node, build_neighborhoods, capacity,
                               capacity_inverse, grid_scenario, load_scenario, path_loss,
                               save_scenario)

from oracles import bfs_two_hop, hand_path_loss


@pytest.fixture
def sc():
    return grid_scenario(2, 2)


def test_path_loss_inverse_square(sc):
    for d in (1.0, 37.5, 1000.0, 12345.0):
        assert path_loss(2 * d, sc) == pytest.approx(path_loss(d, sc) / 4, rel=1e-15)


def test_path_loss_matches_hand_value(sc):
    # 1 GHz, 5 MHz, 290 K at 1 km
    assert path_loss(1000.0, sc) == pytest.approx(hand_path_loss(1000.0), rel=1e-12)
    assert hand_path_loss(1000.0) == pytest.approx(28429.5767, rel=1e-8)


def test_path_loss_positive_and_decreasing(sc):
    d = np.sort(np.random.default_rng(0).uniform(1e-3, 1e6, 500))
    f = path_loss(d, sc)
    assert np.all(f > 0)
    assert np.all(np.diff(f) < 0)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_nonpositive(sc, d):
    with pytest.raises(ValueError):
        path_loss(d, sc)


def test_capacity_values():
    assert capacity(0.0, 5.0) == 0.0
    assert capacity(1.0, 1.0) == pytest.approx(1.0)
    assert capacity(3.0, 1.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        capacity(-1.0, 1.0)


def test_capacity_inverse_values():
    assert capacity_inverse(0.0, 3.0) == 0.0
    assert capacity_inverse(1.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        capacity_inverse(-0.1, 1.0)


def test_capacity_roundtrip():
    rng = np.random.default_rng(1)
    r = rng.uniform(0, 20, 100)
    f = rng.uniform(1e-3, 1e4, 100)
    np.testing.assert_allclose(capacity(capacity_inverse(r, f), f), r, rtol=1e-12)


def test_neighborhoods_line():
    sc = NetworkScenario(
        (Node(1, (0.0, 0.0)), Node(2, (1.0, 0.0)), Node(3, (2.0, 0.0))), (0.0, 5.0),
        ((1, 2), (2, 3)),
    )
    nb = build_neighborhoods(sc)
    assert nb.one_hop[2] == {1, 3}
    assert nb.two_hop[1] == {2, 3}
    assert nb.d_max == 2


def test_neighborhoods_complete_graph():
    nodes = tuple(Node(k, (math.cos(k), math.sin(k))) for k in range(4))
    arcs = tuple((a, b) for a in range(4) for b in range(4) if a != b)
    nb = build_neighborhoods(NetworkScenario(nodes, (10.0, 10.0), arcs))
    for i in range(4):
        assert nb.two_hop[i] == nb.one_hop[i]


def test_neighborhoods_grid_against_bfs():
    sc = grid_scenario(6, 6)
    nb = build_neighborhoods(sc)
    adj = {i: set() for i in sc.node_ids}
    for a, b in sc.edges:
        adj[a].add(b)
        adj[b].add(a)
    for i in sc.node_ids:
        assert nb.two_hop[i] == bfs_two_hop(adj, i)
        assert i not in nb.one_hop[i]
        assert nb.one_hop[i] <= nb.two_hop[i]
        for j in nb.one_hop[i]:
            assert i in nb.one_hop[j]
    interior = 2 * 6 + 3  # row 2, col 3 (1-based id 15)
    assert len(nb.one_hop[interior]) == 4
    assert len(nb.two_hop[interior]) == 12


def test_grid_exact_lattice():
    sc = grid_scenario(3, 4, spacing_m=250.0)
    pos = sc.positions
    assert pos[0].tolist() == [0.0, 0.0]
    assert pos[-1].tolist() == [750.0, 500.0]
    assert sc.station == pytest.approx((375.0, 250.0))


def test_grid_determinism_and_arc_count():
    a = grid_scenario(6, 6, jitter_seed=7, jitter_m=50.0)
    b = grid_scenario(6, 6, jitter_seed=7, jitter_m=50.0)
    assert a == b
    assert len(a.edges) == 120
    c = grid_scenario(6, 6, jitter_seed=8, jitter_m=50.0)
    assert a.positions.tolist() != c.positions.tolist()


def test_grid_arc_count_by_enumeration():
    rows, cols = 6, 6
    count = 0
    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                if 0 <= r + dr < rows and 0 <= c + dc < cols:
                    count += 1
    assert count == 120 == len(grid_scenario(rows, cols).edges)


def test_serialization_roundtrip(tmp_path):
    sc = grid_scenario(3, 2, spacing_m=333.3, jitter_seed=3, jitter_m=10.0, p_max_watts=42.0)
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    for f in ("nodes", "station", "edges", "carrier_freq_hz", "bandwidth_hz",
              "noise_temp_kelvin", "p_max_watts"):
        assert getattr(back, f) == getattr(sc, f), f


def test_undirected_edges_expand(tmp_path):
    doc = {"nodes": [{"id": 0, "position": [0, 0]}, {"id": 1, "position": [1, 0]}],
           "station": [0, 1], "undirected_edges": [[0, 1]]}
    sc = NetworkScenario.from_dict(doc)
    assert sc.edges == ((0, 1), (1, 0))


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"p_max_watts": 0}, "p_max_watts"),
        ({"bandwidth_hz": -1}, "bandwidth_hz"),
        ({"edges": [[1, 1]]}, "edges"),
        ({"edges": [[1, 9]]}, "edges"),
        ({"station": [0, 0]}, "station"),
        ({"nodes": [{"id": 1, "position": [0, 0]}, {"id": 3, "position": [1, 0]}]}, "nodes"),
    ],
)
def test_loader_names_bad_field(tmp_path, patch, field):
    doc = {"nodes": [{"id": 1, "position": [0, 0]}, {"id": 2, "position": [1, 0]}],
           "station": [0, 5], "edges": [[1, 2]]}
    doc.update(patch)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ScenarioError) as info:
        load_scenario(path)
    assert info.value.field == field
