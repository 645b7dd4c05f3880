import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundsim.errors import GenerationError
from boundsim.netmodel import (
    HOLE_PRESETS,
    ConnectivityGraph,
    NetworkConfig,
    build_graph,
    generate_network,
    hole_preset,
    k_hop_subgraph,
    link_qudg,
    link_udg,
    sample_positions,
    spacing_for_degree,
)

from conftest import desk_config, graph


def test_udg_link_is_distance_threshold():
    assert link_udg((0.0, 0.0), (1.0, 0.0))
    assert link_udg((0.0, 0.0), (0.3, 0.4))
    assert not link_udg((0.0, 0.0), (1.0001, 0.0))


def test_udg_edges_match_positions():
    g = generate_network(NetworkConfig(area_width=6.0, area_height=6.0, seed=2))
    pos = g.positions
    d = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
    expect = {(i, j) for i in range(g.n) for j in range(i + 1, g.n) if d[i, j] <= 1.0}
    got = {(int(u), int(v)) for u, v in g.edges}
    assert got == expect


def test_adjacency_is_symmetric_and_simple(small_network):
    g = small_network
    assert np.all(g.edges[:, 0] < g.edges[:, 1])  # no self-loops, canonical order
    assert len(np.unique(g.edges, axis=0)) == g.m
    for u, v in g.edges[:50]:
        assert g.has_edge(v, u)


def test_signal_class_threshold(small_network):
    g = small_network
    d = np.linalg.norm(g.positions[g.edges[:, 0]] - g.positions[g.edges[:, 1]], axis=1)
    assert np.all((d < 0.5) == (g.signal == 0))


def test_qudg_coin_is_symmetric_and_seeded():
    p, q = (0.0, 0.0), (0.9, 0.0)
    a = link_qudg(p, q, 0.75, seed=42, pid=3, qid=17)
    assert a == link_qudg(q, p, 0.75, seed=42, pid=17, qid=3)
    assert a == link_qudg(p, q, 0.75, seed=42, pid=3, qid=17)
    flips = [link_qudg(p, q, 0.75, seed=s, pid=3, qid=17) for s in range(200)]
    assert 40 < sum(flips) < 160  # fair-ish coin across seeds


def test_qudg_certain_and_impossible_bands():
    assert link_qudg((0, 0), (0.74, 0), 0.75, seed=0, pid=0, qid=1)
    assert not link_qudg((0, 0), (1.01, 0), 0.75, seed=0, pid=0, qid=1)


def test_default_spacing_hits_degree_band():
    g = generate_network(desk_config(seed=11))
    assert 11.0 <= g.avg_degree() <= 13.0


def test_spacing_for_degree_monotone():
    s = [spacing_for_degree(d, "udg", 0.75) for d in (9, 12, 15, 21)]
    assert all(a > b for a, b in zip(s, s[1:]))


def test_hole_mask_excludes_nodes():
    import shapely

    cfg = desk_config(seed=4)
    g = generate_network(cfg)
    for poly in cfg.hole_mask:
        hole = shapely.Polygon(poly)
        inside = shapely.contains_xy(hole, g.positions[:, 0], g.positions[:, 1])
        assert not inside.any()


def test_all_hole_presets_build():
    for name in HOLE_PRESETS:
        mask = hole_preset(name, 30.0, 30.0)
        assert len(mask) >= 1
        cfg = desk_config(seed=1, hole_mask=mask)
        g = generate_network(cfg)
        assert g.n > 100


def test_random_placement_reaches_degree():
    cfg = NetworkConfig(area_width=10.0, area_height=10.0, placement="random",
                        target_avg_degree=10.0, seed=3)
    g = generate_network(cfg)
    assert g.avg_degree() >= 10.0


def test_random_placement_cap_raises():
    # area smaller than one grid-equivalent cell: the insertion cap is hit
    # before the degree target can be met
    cfg = NetworkConfig(area_width=0.5, area_height=0.5, placement="random",
                        target_avg_degree=30.0, seed=3)
    with pytest.raises(GenerationError):
        generate_network(cfg)


def test_generation_deterministic():
    a = generate_network(desk_config(seed=9))
    b = generate_network(desk_config(seed=9))
    assert a == b
    c = generate_network(desk_config(seed=10))
    assert not np.array_equal(a.positions, c.positions)


def test_text_roundtrip(small_network):
    g = small_network
    back = ConnectivityGraph.from_text(g.to_text())
    assert back.n == g.n
    assert np.array_equal(back.edges, g.edges)
    assert np.allclose(back.positions, g.positions)
    assert np.array_equal(back.signal, g.signal)


def test_json_roundtrip(small_network):
    g = small_network
    back = ConnectivityGraph.from_json(g.to_json())
    assert back.n == g.n
    assert np.array_equal(back.edges, g.edges)
    assert np.allclose(back.positions, g.positions)
    assert np.array_equal(back.signal, g.signal)
    json.loads(g.to_json())  # valid document


def test_k_hop_subgraph_contents(small_network):
    g = small_network
    u = g.n // 2
    sub = k_hop_subgraph(g, u, 2)
    dist = g.hop_layers(u, 2)
    members = np.flatnonzero(dist >= 0)
    assert sub.n == len(members)
    assert sub.center is not None
    # center maps back to u
    assert np.allclose(sub.positions[sub.center], g.positions[u])
    # edge count matches induced subgraph
    local = np.full(g.n, -1)
    local[members] = np.arange(len(members))
    want = sum(1 for a, b in g.edges if local[a] >= 0 and local[b] >= 0)
    assert sub.m == want


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_qudg_graph_between_certain_and_udg(seed):
    cfg = NetworkConfig(area_width=5.0, area_height=5.0, comm_model="qudg",
                        qudg_d=0.75, seed=seed % 50)
    g = generate_network(cfg)
    pos = g.positions
    d = np.linalg.norm(pos[g.edges[:, 0]] - pos[g.edges[:, 1]], axis=1)
    assert np.all(d <= 1.0 + 1e-12)
    # every pair closer than qudg_d must be linked
    full = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
    certain = np.argwhere((full <= 0.75) & np.triu(np.ones_like(full, bool), 1))
    for i, j in certain:
        assert g.has_edge(int(i), int(j))


def test_build_graph_empty():
    g = build_graph(np.empty((0, 2)), NetworkConfig())
    assert g.n == 0 and g.m == 0
