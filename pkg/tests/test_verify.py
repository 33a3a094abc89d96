import numpy as np
import pytest

from dryreach.boxes import Box
from dryreach.executions import replay
from dryreach.verify import SAFE, UNKNOWN, UNSAFE, Budget, partition_box, random_falsify, verify_safety

from conftest import shipped


def test_partition_box_covers_exactly():
    b = Box([0.0, 1.0, 2.0], [1.0, 4.0, 2.0])
    parts = partition_box(b, 3)
    assert len(parts) == 3 and Box.hull(parts) == b
    assert all(np.allclose(p.widths[[0, 2]], b.widths[[0, 2]]) for p in parts)
    assert sum(p.widths[1] for p in parts) == pytest.approx(3.0)
    assert partition_box(Box.point([1.0, 2.0])) == [Box.point([1.0, 2.0])]


def test_falsifier_finds_unsafe_and_replays():
    sc = shipped("aeb_unsafe")
    ex = random_falsify(sc.system, sc.unsafe, 200, seed=1, grid=sc.reach.grid)
    assert ex is not None and ex.first_unsafe(sc.unsafe) is not None
    again = replay(sc.system, ex.path, ex.x0, ex.dwells, sc.reach.grid)
    assert again.first_unsafe(sc.unsafe) == ex.first_unsafe(sc.unsafe)


def test_unsafe_verdict_ships_witness():
    sc = shipped("merge_unsafe")
    rep = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach)
    assert rep.verdict == UNSAFE
    assert sc.system.theta.contains_point(rep.witness.x0)
    assert replay(sc.system, rep.witness.path, rep.witness.x0, rep.witness.dwells,
                  sc.reach.grid).first_unsafe(sc.unsafe) is not None
    assert rep.trace[0] == "speedup|cruise"


def test_safe_without_refinement():
    sc = shipped("ats_safe")
    rep = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach)
    assert rep.verdict == SAFE and rep.stats["refinements"] == 0 and rep.witness is None


def test_zero_budget_is_unknown_when_refinement_needed():
    sc = shipped("merge_safe")
    rep = verify_safety(sc.system, sc.unsafe, Budget(max_refine=0), sc.reach)
    assert rep.verdict == UNKNOWN and "budget" in rep.reason


def test_refinement_reaches_safe_and_is_deterministic():
    sc = shipped("merge_safe")
    a = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach)
    b = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach)
    assert a.verdict == SAFE and a.stats["refinements"] > 0
    assert {k: v for k, v in a.stats.items() if k != "wall_time"} == \
        {k: v for k, v in b.stats.items() if k != "wall_time"}
    for ra, rb in zip(a.results, b.results):
        for x, y in zip(ra.tubes, rb.tubes):
            assert np.array_equal(x.lo, y.lo) and np.array_equal(x.hi, y.hi)


def test_time_cap_gives_unknown():
    sc = shipped("merge_safe")
    rep = verify_safety(sc.system, sc.unsafe, Budget(max_refine=10, time_cap=0.0), sc.reach, falsify_samples=0)
    assert rep.verdict == UNKNOWN and rep.reason == "time cap reached"
