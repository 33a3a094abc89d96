"""Bounded safety verification with refinement, and random falsification."""
from __future__ import annotations

import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .boxes import Box
from .executions import Execution, grid_dwells, replay, run_batch, sample_executions
from .graph import TransitionGraph
from .reach import Overlap, ReachOptions, ReachResult, Reachtube, graph_reach, restrict_tube, tube_vs_set
from .system import HybridSystem, UnsafeSet

log = logging.getLogger(__name__)

MIN_WIDTH = 1e-6
SAFE, UNSAFE, UNKNOWN = "SAFE", "UNSAFE", "UNKNOWN"


def partition_box(b: Box, parts: int = 2) -> list[Box]:
    """Split the widest dimension of ``b`` into ``parts`` equal pieces."""
    if parts < 2:
        raise ValueError("need at least two parts")
    widths = b.widths
    if not np.any(widths > 0):
        return [b]
    return b.split(int(np.argmax(widths)), parts)


@dataclass(frozen=True)
class Budget:
    max_refine: int = 10
    time_cap: float | None = None


@dataclass
class VerdictReport:
    verdict: str
    witness: Execution | None = None
    trace: tuple | None = None
    stats: dict = field(default_factory=dict)
    results: list[ReachResult] = field(default_factory=list)
    reason: str = ""


def random_falsify(
    h: HybridSystem, u: UnsafeSet, samples: int, seed: int, grid: float = 0.05
) -> Execution | None:
    """First of ``samples`` random executions that enters ``u``, replayed singly."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    for ex in sample_executions(h, samples, rng, grid):
        if ex.first_unsafe(u) is None:
            continue
        again = replay(h, ex.path, ex.x0, ex.dwells, grid)
        if again.first_unsafe(u) is not None:
            return again
    return None


def _spread(values: np.ndarray, k: int) -> np.ndarray:
    if len(values) <= k:
        return values
    return values[np.unique(np.linspace(0, len(values) - 1, k).round().astype(int))]


def targeted_search(
    h: HybridSystem, s: Box, rt: Reachtube, u: UnsafeSet, grid: float, rng: np.random.Generator,
    per_edge: int = 5, max_runs: int = 400,
) -> Execution | None:
    """Concrete executions from ``s`` along the tube's path, looking for ``u``."""
    path = rt.path
    g = h.graph
    starts = [s.center]
    for d in np.flatnonzero(s.widths > 0):
        for end in (s.lo[d], s.hi[d]):
            x = s.center.copy()
            x[d] = end
            starts.append(x)
    dwell_opts = [_spread(grid_dwells(*g.elab[a, b], grid), per_edge) for a, b in zip(path[:-1], path[1:])]
    combos = list(itertools.product(*dwell_opts)) if dwell_opts else [()]
    runs = [(x, c) for x in starts for c in combos]
    if len(runs) > max_runs:
        keep = rng.choice(len(runs), max_runs, replace=False)
        runs = [runs[0]] + [runs[i] for i in sorted(keep) if i != 0][: max_runs - 1]
    x0s = np.array([r[0] for r in runs])
    dw = np.array([r[1] for r in runs], dtype=float).reshape(len(runs), len(path) - 1)
    for ex in run_batch(h, path, x0s, dw, grid):
        if ex.first_unsafe(u) is not None:
            again = replay(h, path, ex.x0, ex.dwells, grid)
            if again.first_unsafe(u) is not None:
                return again
    return None


def _edge_split_point(lo: float, hi: float, grid: float) -> float | None:
    if hi - lo <= grid + 1e-9:
        return None
    mid = round(0.5 * (lo + hi) / grid) * grid
    if not (lo < mid < hi):
        mid = 0.5 * (lo + hi)
    return mid


def _choose_refinement(h: HybridSystem, s: Box, rs: ReachResult, rt: Reachtube, grid: float):
    """``("box", None)`` or ``("edge", (u, v))``; ``None`` if nothing can be split."""
    g = h.graph
    box_ok = bool(np.any(s.widths > MIN_WIDTH))
    edges = [
        (a, b) for a, b in zip(rt.path[:-1], rt.path[1:])
        if _edge_split_point(*g.elab[a, b], grid) is not None
    ]
    if not edges:
        return ("box", None) if box_ok else None
    if not box_ok:
        return "edge", max(edges, key=lambda e: g.elab[e][1] - g.elab[e][0])
    # Compare the initial-set spread entering the offending vertex with the
    # spread a single switching instant would give.
    p, v = rt.path[-2], rt.path[-1]
    prev = next(t for t in rs.tubes if t.path == rt.path[:-1])
    lo, hi = g.elab[p, v]
    pinned = restrict_tube(prev, (hi, hi)).radius
    if (p, v) in edges and pinned < 0.5 * rt.init.radius:
        return "edge", (p, v)
    if pinned < 0.5 * rt.init.radius:
        return "edge", max(edges, key=lambda e: g.elab[e][1] - g.elab[e][0])
    return "box", None


def verify_safety(
    h: HybridSystem,
    u: UnsafeSet,
    budget: Budget = Budget(),
    opts: ReachOptions = ReachOptions(),
    falsify_samples: int = 100,
    parts: int = 2,
) -> VerdictReport:
    """Verify, falsify or give up on ``h`` against ``u``.

    UNSAFE is only reported with a concrete execution that replays into
    ``u``; SAFE only when every initial sub-box yields tubes disjoint from
    ``u`` under its edge-interval variant of the graph.
    """
    start = time.perf_counter()
    stats = {"refinements": 0, "tubes": 0, "reach_calls": 0, "max_depth": 0, "falsifier_samples": falsify_samples}

    def report(verdict, **kw):
        stats["wall_time"] = round(time.perf_counter() - start, 3)
        return VerdictReport(verdict, stats=stats, **kw)

    if falsify_samples > 0:
        ex = random_falsify(h, u, falsify_samples, opts.seed, opts.grid)
        if ex is not None:
            stats["found_by"] = "falsifier"
            return report(UNSAFE, witness=ex, trace=ex.timed_trace(h))

    work: deque[tuple[Box, TransitionGraph, int]] = deque([(h.theta, h.graph, 0)])
    results: list[ReachResult] = []
    unknown_reason = ""
    counter = 0
    rng = np.random.default_rng(opts.seed)
    while work:
        if budget.time_cap is not None and time.perf_counter() - start > budget.time_cap:
            unknown_reason = "time cap reached"
            break
        s, graph, depth = work.popleft()
        hv = h.with_graph(graph)
        item_seed = int(np.random.SeedSequence([opts.seed, counter]).generate_state(1)[0])
        counter += 1
        rs = graph_reach(hv, ReachOptions(opts.grid, opts.n_train, opts.kind, opts.gamma_cap, item_seed), s)
        stats["reach_calls"] += 1
        stats["tubes"] += len(rs.tubes)
        offending = None
        for rt in rs.tubes:
            status, seg = tube_vs_set(rt, u)
            if status is Overlap.DISJOINT:
                continue
            if status is Overlap.CONTAINED:
                # the segment box holds the center states at both window ends
                assert u.mask(rt.mode, rt.center.states[seg : seg + 1], rt.times[seg : seg + 1]).all()
                ex = targeted_search(hv, s, rt, u, opts.grid, rng)
                if ex is not None:
                    stats["found_by"] = "tube"
                    return report(UNSAFE, witness=ex, trace=ex.timed_trace(h), results=results)
            offending = rt
            break
        if offending is None:
            results.append(rs)
            continue
        if depth >= budget.max_refine:
            unknown_reason = "refinement budget exhausted"
            continue
        choice = _choose_refinement(hv, s, rs, offending, opts.grid)
        if choice is None:
            unknown_reason = "nothing left to refine"
            continue
        stats["refinements"] += 1
        stats["max_depth"] = max(stats["max_depth"], depth + 1)
        kind, edge = choice
        if kind == "box":
            for b in partition_box(s, parts):
                work.append((b, graph, depth + 1))
        else:
            lo, hi = graph.elab[edge]
            mid = _edge_split_point(lo, hi, opts.grid)
            work.append((s, graph.with_interval(*edge, lo, mid), depth + 1))
            work.append((s, graph.with_interval(*edge, mid, hi), depth + 1))
        log.debug("refine %s at depth %d", choice, depth)
    if unknown_reason:
        return report(UNKNOWN, results=results, reason=unknown_reason)
    return report(SAFE, results=results)
