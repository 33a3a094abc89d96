import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dryreach.errors import (
    CycleDetected,
    EmptyEdgeInterval,
    ExplosionGuard,
    LabelMismatch,
    NonUniqueEndpoints,
    SchemaError,
    UnknownModeReference,
)
from dryreach.graph import (
    build_graph,
    check_forward_simulation,
    compose_power,
    count_traces,
    enumerate_traces,
    interval_covered,
    maximal_paths,
    merge_intervals,
    parse_graph,
    sequential_compose,
    topo_sort,
    traces_contained,
)

from conftest import random_dag

G1 = build_graph(["cruise", "em_brake"], [(0, 1, 0.5, 4.5)])
G2 = build_graph(["cruise", "em_brake", "em_brake"], [(0, 1, 1.0, 2.0), (0, 2, 2.5, 3.5)])


def test_aeb_graph_shape():
    assert G2.n_vertices == 3 and len(G2.edges) == 2
    assert G2.initial == (0,) or list(G2.initial) == [0]
    assert sorted(G2.terminal) == [1, 2]


def test_cycle_and_empty_interval_rejected():
    with pytest.raises(CycleDetected):
        build_graph(["a", "b"], [(0, 1, 0, 1), (1, 0, 0, 1)])
    with pytest.raises(EmptyEdgeInterval):
        build_graph(["a", "b"], [(0, 1, 2, 1)])


def test_parse_graph_errors():
    data = {"vertices": [{"id": "x", "mode": "a"}, {"id": "y", "mode": "zz"}],
            "edges": [{"src": "x", "dst": "y", "interval": [0, 1]}]}
    with pytest.raises(UnknownModeReference):
        parse_graph(data, ["a"])
    data["edges"][0]["dst"] = "nope"
    with pytest.raises(SchemaError):
        parse_graph(data)


def test_topo_sort_respects_edges(rng):
    for _ in range(50):
        g = random_dag(rng)
        pos = {v: i for i, v in enumerate(topo_sort(g))}
        assert sorted(pos) == list(range(g.n_vertices))
        assert all(pos[u] < pos[v] for u, v, _, _ in g.edges)


def test_maximal_paths_brute_force(rng):
    for _ in range(30):
        g = random_dag(rng)
        succ = {v: [b for a, b, _, _ in g.edges if a == v] for v in range(g.n_vertices)}
        has_pred = {b for _, b, _, _ in g.edges}
        expect = set()

        def walk(p):
            if not succ[p[-1]]:
                expect.add(tuple(p))
            for w in succ[p[-1]]:
                walk(p + [w])

        for v in range(g.n_vertices):
            if v not in has_pred:
                walk([v])
        assert {tuple(p) for p in maximal_paths(g)} == expect


def test_enumerate_traces_small():
    g = build_graph(["a", "b"], [(0, 1, 1.0, 2.0)])
    assert enumerate_traces(g, 0.5) == {("a", 1.0, "b"), ("a", 1.5, "b"), ("a", 2.0, "b")}
    assert count_traces(g, 0.5) == 3
    with pytest.raises(ExplosionGuard):
        enumerate_traces(g, 1e-6, cap=10)


def test_sequential_compose_traces_are_concatenations():
    ga = build_graph(["s", "n", "p"], [(0, 1, 1, 2), (1, 2, 2, 3)])
    gb = build_graph(["p", "n", "p"], [(0, 1, 1, 2), (1, 2, 2, 3)])
    gc = sequential_compose(ga, gb)
    assert gc.n_vertices == 5 and gc.junctions == (2,)
    ta, tb = enumerate_traces(ga, 1), enumerate_traces(gb, 1)
    expect = {a + b[1:] for a in ta for b in tb}
    assert enumerate_traces(gc, 1) == expect


def test_compose_errors():
    with pytest.raises(LabelMismatch):
        sequential_compose(build_graph(["a", "b"], [(0, 1, 0, 1)]), build_graph(["c", "d"], [(0, 1, 0, 1)]))
    with pytest.raises(NonUniqueEndpoints):
        sequential_compose(G2, G1)


def test_compose_power_associative():
    g = build_graph(["p", "n", "p"], [(0, 1, 1, 2), (1, 2, 2, 3)])
    left = sequential_compose(sequential_compose(g, g), g)
    right = sequential_compose(g, sequential_compose(g, g))
    assert enumerate_traces(left, 1) == enumerate_traces(right, 1) == enumerate_traces(compose_power(g, 3), 1)


def test_interval_cover():
    assert merge_intervals([(2, 3), (0, 1), (1, 1.5)]) == [(0, 1.5), (2, 3)]
    assert interval_covered((0.5, 1.2), [(0, 1), (1, 2)])
    assert not interval_covered((0.5, 4.5), [(1, 2), (2.5, 3.5)])
    assert interval_covered((1, 1 + 1e-10), [(0, 1)])


def test_aeb_forward_simulation():
    rel = check_forward_simulation(G2, G1)
    assert rel is not None and (0, 0) in rel and (2, 1) in rel
    assert check_forward_simulation(G1, G2) is None


def test_lmap_must_be_total():
    with pytest.raises(UnknownModeReference):
        check_forward_simulation(G2, G1, {"cruise": "cruise"})
    rel = check_forward_simulation(
        build_graph(["x", "y"], [(0, 1, 1, 2)]), G1, {"x": "cruise", "y": "em_brake"}
    )
    assert rel is not None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forward_simulation_sound(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = random_dag(rng, 5), random_dag(rng, 5)
    if check_forward_simulation(g1, g2) is not None:
        assert traces_contained(g1, g2, None, 1.0)


def test_graph_simulates_itself(rng):
    for _ in range(20):
        g = random_dag(rng)
        assert check_forward_simulation(g, g) is not None
