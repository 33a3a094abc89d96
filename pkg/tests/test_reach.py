import numpy as np
import pytest

from dryreach.boxes import Box
from dryreach.errors import DurationExceedsDiscrepancyHorizon, WindowOutOfRange
from dryreach.executions import executions_in_tubes, sample_executions
from dryreach.graph import build_graph
from dryreach.reach import (
    Overlap,
    ReachOptions,
    bloat_traces,
    graph_reach,
    reach_comp,
    restrict_tube,
    tube_vs_set,
)
from dryreach.discrepancy import trivial_discrepancy
from dryreach.sim import make_simulator, simulate
from dryreach.system import HybridSystem, make_unsafe_set

SIM = make_simulator({"kind": "scripted_ode", "variables": ["x", "y"], "modes": {
    "a": {"rhs": ["-x + y", "-2 * y"]},
    "b": {"rhs": ["y", "-x - 0.5 * y"]},
}})
G = build_graph(["a", "b", "a"], [(0, 1, 1.0, 2.0), (1, 2, 0.5, 1.5)])
H = HybridSystem(G, Box([0.5, 0.5], [1.0, 0.8]), SIM, terminal_dwell=2.0)


def test_tube_contains_random_executions(rng):
    rs = graph_reach(H, ReachOptions(seed=3))
    ex = sample_executions(H, 300, rng, 0.05)
    assert executions_in_tubes(ex, rs).all()


def test_tube_count_follows_paths():
    rs = graph_reach(H)
    assert [rt.vertex for rt in rs.tubes] == [0, 1, 2]
    assert rs.tubes[2].path == (0, 1, 2)
    g = build_graph(["a", "b", "b", "a"], [(0, 1, 1, 2), (0, 2, 1, 2), (1, 3, 1, 2), (2, 3, 1, 2)])
    rs = graph_reach(HybridSystem(g, H.theta, SIM, 1.0))
    assert len(rs.at(3)) == 2


def test_point_box_gives_center_trace():
    s = Box.point([0.7, 0.6])
    rt = reach_comp(SIM, "a", s, 2.0, ReachOptions(), np.random.default_rng(0))
    c = simulate(SIM, "a", [0.7, 0.6], rt.times).states
    assert np.allclose(rt.lo, np.minimum(c[:-1], c[1:])) and np.allclose(rt.hi, np.maximum(c[:-1], c[1:]))


def test_restrict_tube_monotone():
    rt = reach_comp(SIM, "a", H.theta, 2.0, ReachOptions(), np.random.default_rng(0))
    small, big = restrict_tube(rt, (0.5, 1.0)), restrict_tube(rt, (0.2, 1.6))
    assert big.contains(small)
    assert restrict_tube(rt, (0.0, 2.0)) == rt.hull()
    with pytest.raises(WindowOutOfRange):
        restrict_tube(rt, (1.0, 3.0))


def test_bloat_radius_and_horizon():
    s = Box([0.0, 0.0], [0.2, 0.2])
    rt = bloat_traces(SIM, "a", s, 1.0, trivial_discrepancy(1.0))
    c = rt.center.states
    assert np.allclose(rt.hi[0] - np.maximum(c[0], c[1]), s.radius)
    with pytest.raises(DurationExceedsDiscrepancyHorizon):
        bloat_traces(SIM, "a", s, 2.0, trivial_discrepancy(1.0))


def test_tube_vs_set_classification():
    rt = reach_comp(SIM, "a", Box([0.9, 0.0], [1.0, 0.0]), 1.0, ReachOptions(), np.random.default_rng(0))
    far = make_unsafe_set([{"mode": "*", "constraints": ["x > 5"]}], SIM.variables)
    near = make_unsafe_set([{"mode": "*", "constraints": ["x > 0.95"]}], SIM.variables)
    everywhere = make_unsafe_set([{"mode": "a", "constraints": ["x > -10"]}], SIM.variables)
    other_mode = make_unsafe_set([{"mode": "b", "constraints": ["x > -10"]}], SIM.variables)
    late = make_unsafe_set([{"mode": "*", "constraints": ["t > 5"]}], SIM.variables)
    assert tube_vs_set(rt, far)[0] is Overlap.DISJOINT
    assert tube_vs_set(rt, near)[0] is Overlap.PARTIAL
    assert tube_vs_set(rt, everywhere) == (Overlap.CONTAINED, 0)
    assert tube_vs_set(rt, other_mode)[0] is Overlap.DISJOINT
    assert tube_vs_set(rt, late)[0] is Overlap.DISJOINT


def test_reach_deterministic():
    a, b = graph_reach(H, ReachOptions(seed=9)), graph_reach(H, ReachOptions(seed=9))
    for x, y in zip(a.tubes, b.tubes):
        assert np.array_equal(x.lo, y.lo) and np.array_equal(x.hi, y.hi)


def test_concentric_shrink_never_enlarges():
    beta = reach_comp(SIM, "a", H.theta, 2.0, ReachOptions(), np.random.default_rng(0)).discrepancy
    outer = bloat_traces(SIM, "a", H.theta, 2.0, beta)
    c, w = H.theta.center, H.theta.widths
    for s in (0.5, 0.1, 0.0):
        inner = bloat_traces(SIM, "a", Box(c - s * w / 2, c + s * w / 2), 2.0, beta)
        assert np.all(inner.lo >= outer.lo - 1e-12) and np.all(inner.hi <= outer.hi + 1e-12)


def test_center_inside_own_tube():
    rs = graph_reach(H)
    for rt in rs.tubes:
        assert rt.contains_samples(rt.center.times, rt.center.states, tol=0).all()
