import csv

import pytest

from dryreach.artifacts import emit_plot, write_tube_csv, write_witness_csv
from dryreach.errors import BadDimension
from dryreach.reach import ReachResult, graph_reach
from dryreach.verify import random_falsify

from conftest import shipped


def test_empty_result_gives_empty_axes(tmp_path):
    sc = shipped("aeb_safe")
    p = emit_plot(tmp_path / "e.svg", [ReachResult()], [sc.system.graph], sc.variables, ("t", "sy_A"))
    text = p.read_text()
    assert text.startswith("<svg") and "fill-opacity" not in text and "polyline" not in text


def test_bad_dimension(tmp_path):
    sc = shipped("aeb_safe")
    with pytest.raises(BadDimension):
        emit_plot(tmp_path / "x.svg", [], [], sc.variables, ("t", 8))
    with pytest.raises(BadDimension):
        emit_plot(tmp_path / "x.svg", [], [], sc.variables, ("t", "sz_A"))


def test_aeb_band_monotone_then_flat(tmp_path):
    sc = shipped("aeb_safe")
    rs = graph_reach(sc.system, sc.reach)
    p = emit_plot(tmp_path / "a.svg", [rs], [sc.system.graph], sc.variables, ("t", "sy_A"))
    assert p.read_text().count("<rect") > 10
    brake = rs.at(1)[0]
    sy = brake.center.states[:, 2]
    assert all(b >= a for a, b in zip(sy, sy[1:]))
    assert sy[-1] == sy[-10]  # the center run has stopped


def test_csv_layouts(tmp_path):
    sc = shipped("merge_unsafe")
    rs = graph_reach(sc.system, sc.reach)
    write_tube_csv(tmp_path / "t.csv", [rs], lambda i: sc.system.graph, 8)
    rows = list(csv.reader((tmp_path / "t.csv").open()))
    assert rows[0][:4] == ["vertex", "mode", "t_lo", "t_hi"] and len(rows[0]) == 4 + 16
    assert len(rows) == 1 + sum(len(rt) for rt in rs.tubes)
    ex = random_falsify(sc.system, sc.unsafe, 100, 0)
    write_witness_csv(tmp_path / "w.csv", ex, 8)
    rows = list(csv.reader((tmp_path / "w.csv").open()))
    times = [float(r[0]) for r in rows[1:]]
    assert rows[0][:2] == ["time", "mode"] and all(b >= a for a, b in zip(times, times[1:]))
