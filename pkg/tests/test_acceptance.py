"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances."""
from __future__ import annotations

import hashlib
import time
from pathlib import Path

import numpy as np
import pytest

from dryreach.bench import load_suite, sweep_oracle
from dryreach.boxes import Box
from dryreach.cli import SCENARIO_DIR, verify_scenario
from dryreach.artifacts import write_report, write_tube_csv
from dryreach.discrepancy import (
    fit_separator,
    learn_global_discrepancy,
    learn_piecewise_discrepancy,
    pac_sample_size,
    validate_discrepancy,
)
from dryreach.executions import executions_in_tubes, replay, sample_executions
from dryreach.graph import build_graph, check_forward_simulation, compose_power, traces_contained
from dryreach.reach import graph_reach
from dryreach.reasoning import certify_unbounded_composition, lift_vertex
from dryreach.scenario import load_scenario
from dryreach.sim import SimTrace, make_simulator, simulate_many, time_grid
from dryreach.verify import SAFE, UNSAFE, random_falsify, verify_safety

from conftest import random_dag, shipped

RESULTS: dict[int, bool] = {}


def verdict(capsys, n: int, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    ok = bool(ok) and elapsed < limit
    RESULTS[n] = ok
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail} ({elapsed:.1f}s, limit {limit:.0f}s)")
    assert ok


# -- shared producers, rerun by the determinism check -------------------------

def _traces(spec, mode, box: Box, count: int, T: float, rng) -> list[SimTrace]:
    t = time_grid(T, 0.05)
    st = simulate_many(spec, mode, box.sample(rng, count), t)
    return [SimTrace(mode, t, st[:, j]) for j in range(count)]


VEHICLE = make_simulator({"kind": "vehicle"})
VDP = make_simulator({"kind": "scripted_ode", "variables": ["x", "y"],
                      "modes": {"vdp": {"rhs": ["y", "(1 - x^2) * y - x"]}}})
DISCREPANCY_CASES = [
    ("ch_left", VEHICLE, "ch_left", Box([0.0, 0.0, 0.0, 9.0], [0.5, 0.0, 5.0, 11.0]), 5.0),
    ("vdp", VDP, "vdp", Box([0.5, 0.5], [1.0, 1.0]), 3.0),
]


def produce_discrepancy(out: Path, seed: int = 7) -> dict:
    rows = {}
    for name, spec, mode, box, T in DISCREPANCY_CASES:
        rng = np.random.default_rng(seed)
        train = _traces(spec, mode, box, 20, T, rng)
        test = _traces(spec, mode, box, 100, T, rng)
        for kind, fn in (("GED", learn_global_discrepancy(train, T)),
                         ("PED", learn_piecewise_discrepancy(train, T))):
            rows[f"{name}/{kind}"] = {"fn": fn.describe(), "validation": validate_discrepancy(fn, test)}
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "discrepancy.json", rows)
    return rows


SOUNDNESS = ["aeb_safe", "merge_safe", "powertrain"]


def produce_soundness(out: Path, seed: int = 11) -> dict:
    res = {}
    out.mkdir(parents=True, exist_ok=True)
    for name in SOUNDNESS:
        sc = shipped(name)
        rs = graph_reach(sc.system, sc.reach)
        ex = sample_executions(sc.system, 500, np.random.default_rng(seed), sc.reach.grid)
        res[name] = int(executions_in_tubes(ex, rs).sum())
        write_tube_csv(out / f"{name}_tubes.csv", [rs], lambda i: sc.system.graph, len(sc.variables))
    write_report(out / "soundness.json", res)
    return res


def produce_suite(out: Path) -> list[dict]:
    rows = []
    for entry in load_suite(SCENARIO_DIR / "suite.toml"):
        sc = load_scenario(entry.scenario)
        d = out / sc.name
        d.mkdir(parents=True, exist_ok=True)
        data, _, rep = verify_scenario(sc, d)
        rows.append({"entry": entry, "sc": sc, "rep": rep, "data": data})
    return rows


def digest(root: Path) -> dict[str, str]:
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


# -- criteria ------------------------------------------------------------------

def test_criterion_1_pac_bound(capsys):
    t0 = time.perf_counter()
    k = pac_sample_size(0.1, 0.1)
    rng = np.random.default_rng(2024)
    T = 1.0

    def draw(m):
        # separable by construction: x <= 0.8 y + 0.1 with an exponential gap
        y = rng.uniform(0, T, m)
        return np.column_stack([0.8 * y + 0.1 - rng.exponential(0.3, m), y])

    bad = 0
    for _ in range(200):
        a, b = fit_separator(draw(k), T)
        held = draw(5000)
        err = float(np.mean(held[:, 0] > a * held[:, 1] + b))
        bad += err > 0.1
    frac = bad / 200
    verdict(capsys, 1, k == 24 and frac <= 0.2,
            f"k={k}, runs with held-out error > 0.1: {bad}/200 = {frac:.3f} <= 0.2", time.perf_counter() - t0, 10)


def test_criterion_2_discrepancy_validation(capsys, work):
    t0 = time.perf_counter()
    rows = produce_discrepancy(work / "run1" / "c2")
    worst = min(r["validation"] for r in rows.values())
    detail = ", ".join(f"{k}={v['validation']:.4f}" for k, v in rows.items())
    verdict(capsys, 2, worst >= 0.99, f"{detail}; min {worst:.4f} >= 0.99", time.perf_counter() - t0, 60)


def test_criterion_3_linear_oracle(capsys):
    t0 = time.perf_counter()
    ok, parts = True, []
    for a in (-1.0, 1.0):
        sim = make_simulator({"kind": "affine", "variables": ["x"], "modes": {"m": {"A": [[a]]}}})
        rng = np.random.default_rng(5)
        box = Box([0.5], [1.5])
        fn = learn_global_discrepancy(_traces(sim, "m", box, 20, 2.0, rng), 2.0)
        frac = validate_discrepancy(fn, _traces(sim, "m", box, 100, 2.0, rng))
        ok &= (a - 0.05 <= fn.gamma <= a + 0.2) and (1.0 <= fn.K <= 1.2) and frac == 1.0
        parts.append(f"a={a:+.0f}: gamma={fn.gamma:.4f} K={fn.K:.4f} validation={frac}")
    verdict(capsys, 3, ok, "; ".join(parts), time.perf_counter() - t0, 5)


def test_criterion_4_reachtube_soundness(capsys, work):
    t0 = time.perf_counter()
    res = produce_soundness(work / "run1" / "c4")
    verdict(capsys, 4, all(v == 500 for v in res.values()),
            ", ".join(f"{k}: {v}/500 contained" for k, v in res.items()), time.perf_counter() - t0, 300)


def test_criterion_5_forward_simulation(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    found = confirmed = 0
    for i in range(100):
        g1 = random_dag(rng)
        if i % 2:
            g2 = random_dag(rng)
        else:
            # a widened copy of g1 gives pairs where a relation should exist
            g2 = build_graph(g1.labels, [(u, v, max(0.0, lo - rng.integers(0, 2)), min(5.0, hi + rng.integers(0, 2)))
                                          for u, v, lo, hi in g1.edges])
        if check_forward_simulation(g1, g2) is not None:
            found += 1
            confirmed += traces_contained(g1, g2, None, 1.0)
    g1, g2 = shipped("aeb_g1").system.graph, shipped("aeb_g2").system.graph
    aeb = check_forward_simulation(g2, g1) is not None and check_forward_simulation(g1, g2) is None
    verdict(capsys, 5, found > 0 and confirmed == found and aeb,
            f"relations found {found}/100, trace containment confirmed {confirmed}/{found}; "
            f"AEB G2<=G1 {'yes' if aeb else 'no'}, reverse rejected {'yes' if aeb else 'no'}",
            time.perf_counter() - t0, 30)


def test_criterion_6_aeb_abstraction(capsys):
    t0 = time.perf_counter()
    g1, g2 = shipped("aeb_g1"), shipped("aeb_g2")
    r1, r2 = graph_reach(g1.system, g1.reach), graph_reach(g2.system, g2.reach)
    worst, checked = -np.inf, 0
    for rt in r2.tubes:
        # vertices are matched by mode; local time starts at each switch
        big = [t for t in r1.tubes if t.mode == rt.mode]
        assert len(big) == 1
        big = big[0]
        n = len(rt)
        assert n <= len(big) and np.allclose(rt.times, big.times[: n + 1])
        worst = max(worst, float(np.max(big.lo[:n] - rt.lo)), float(np.max(rt.hi - big.hi[:n])))
        checked += n
    verdict(capsys, 6, worst <= 1e-9,
            f"{checked} G2 segments inside G1 segments, worst excess {worst:.3g} <= 1e-9", time.perf_counter() - t0, 60)


def test_criterion_7_composition_fixpoint(capsys):
    t0 = time.perf_counter()
    loop = shipped("powertrain_loop")
    cert = certify_unbounded_composition(loop.system, loop.reach)
    g = loop.system.graph
    g3 = compose_power(g, 3)
    h3 = loop.system.with_graph(g3)
    ex = sample_executions(h3, 500, np.random.default_rng(3), loop.reach.grid)
    inside = 0
    for e in ex:
        ok = True
        for v, seg in zip(e.path, e.segments):
            hit = np.zeros(len(seg.times), dtype=bool)
            for rt in cert.result.at(lift_vertex(g3, g, v)):
                hit |= rt.contains_samples(seg.times, seg.states)
            ok &= bool(hit.all())
        inside += ok
    refs = {}
    for name in ("powertrain", "powertrain_4fold"):
        sc = shipped(name)
        rep = verify_safety(sc.system, sc.unsafe, sc.budget, sc.reach, sc.falsify_samples, sc.partition)
        refs[name] = (rep.verdict, rep.stats["refinements"])
    ok = cert.contained and inside == 500 and all(v == (SAFE, 0) for v in refs.values())
    verdict(capsys, 7, ok,
            f"fixpoint flag {cert.contained}; G^3 executions inside one-round tubes {inside}/500; "
            + ", ".join(f"{k}: {v[0]} with {v[1]} refinements" for k, v in refs.items()),
            time.perf_counter() - t0, 180)


def test_criterion_8_suite_vs_oracle(capsys, work):
    t0 = time.perf_counter()
    rows = produce_suite(work / "run1" / "c8")
    problems = []
    for r in rows:
        sc, rep, entry = r["sc"], r["rep"], r["entry"]
        oracle, _ = sweep_oracle(sc.system, sc.unsafe)
        if rep.verdict != oracle or entry.expected != oracle:
            problems.append(f"{sc.name}: verify {rep.verdict}, sweep {oracle}, expected {entry.expected}")
        if rep.verdict == UNSAFE:
            w = rep.witness
            again = replay(sc.system, w.path, w.x0, w.dwells, sc.reach.grid)
            if again.first_unsafe(sc.unsafe) is None:
                problems.append(f"{sc.name}: witness does not replay")
        if rep.verdict == SAFE and random_falsify(sc.system, sc.unsafe, 1000, 99, sc.reach.grid) is not None:
            problems.append(f"{sc.name}: falsifier found a violation")
    n_safe = sum(r["rep"].verdict == SAFE for r in rows)
    verdict(capsys, 8, len(rows) >= 8 and not problems and 0 < n_safe < len(rows),
            f"{len(rows)} entries ({n_safe} SAFE, {len(rows) - n_safe} UNSAFE) agree with the sweep oracle"
            if not problems else "; ".join(problems), time.perf_counter() - t0, 600)


def test_criterion_9_determinism(capsys, work):
    t0 = time.perf_counter()
    run1 = work / "run1"
    if not (run1 / "c2").exists():
        produce_discrepancy(run1 / "c2")
    if not (run1 / "c4").exists():
        produce_soundness(run1 / "c4")
    if not (run1 / "c8").exists():
        produce_suite(run1 / "c8")
    run2 = work / "run2"
    produce_discrepancy(run2 / "c2")
    produce_soundness(run2 / "c4")
    produce_suite(run2 / "c8")
    a, b = digest(run1), digest(run2)
    diff = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    verdict(capsys, 9, bool(a) and not diff,
            f"{len(a)} artifacts byte-identical across reruns" if not diff else f"differing: {diff[:5]}",
            time.perf_counter() - t0, 600)
