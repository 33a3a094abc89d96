"""Timed transition graphs: the white-box part of a hybrid system.

A graph is a DAG whose vertices carry mode labels and whose edges carry
closed dwell-time intervals.  Besides construction and validation this
module provides trace enumeration (a brute-force oracle), sequential
composition and the polynomial forward-simulation check.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    CycleDetected,
    EmptyEdgeInterval,
    ExplosionGuard,
    LabelMismatch,
    MissingInitialOrTerminalVertex,
    NonUniqueEndpoints,
    SchemaError,
    UnknownModeReference,
)

COVER_TOL = 1e-9

Interval = tuple[float, float]
TimedTrace = tuple  # (mode, t, mode, t, ..., mode)


@dataclass(frozen=True)
class TransitionGraph:
    """Labeled DAG with interval-labeled edges.

    Vertices are dense integer indices ``0..n-1``; ``names`` keeps the
    identifiers used in scenario files.  ``junctions`` lists the vertices
    where sequential compositions were glued together.
    """

    labels: tuple[str, ...]
    edges: tuple[tuple[int, int, float, float], ...]
    names: tuple[str, ...] = ()
    modes: frozenset = frozenset()
    junctions: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i) for i in range(len(self.labels))))
        if not self.modes:
            object.__setattr__(self, "modes", frozenset(self.labels))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        self._validate()

    def _validate(self):
        n = len(self.labels)
        if n == 0:
            raise MissingInitialOrTerminalVertex("graph has no vertices")
        if len(self.names) != n or len(set(self.names)) != n:
            raise SchemaError("vertex names must be unique, one per vertex")
        for lab in self.labels:
            if lab not in self.modes:
                raise UnknownModeReference(f"vertex labelled with undeclared mode {lab!r}")
        seen = set()
        for u, v, lo, hi in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise SchemaError(f"edge ({u}, {v}) references a missing vertex")
            if (u, v) in seen:
                raise SchemaError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise EmptyEdgeInterval(f"edge ({u}, {v}) has an unbounded interval")
            if lo < 0:
                raise EmptyEdgeInterval(f"edge ({u}, {v}) has a negative lower bound")
            if lo > hi:
                raise EmptyEdgeInterval(f"edge ({u}, {v}) interval [{lo}, {hi}] is empty")
        # Kahn's algorithm doubles as the cycle check.
        if len(self._kahn()) != n:
            raise CycleDetected("transition graph contains a cycle")
        if not self.initial or not self.terminal:
            raise MissingInitialOrTerminalVertex("graph needs initial and terminal vertices")

    def _kahn(self) -> list[int]:
        indeg = [0] * len(self.labels)
        for _, v, _, _ in self.edges:
            indeg[v] += 1
        heap = [v for v, d in enumerate(indeg) if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            u = heapq.heappop(heap)
            order.append(u)
            for v in self.succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(heap, v)
        return order

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @cached_property
    def elab(self) -> dict[tuple[int, int], Interval]:
        return {(u, v): (lo, hi) for u, v, lo, hi in self.edges}

    @cached_property
    def succ(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.labels]
        for u, v, _, _ in self.edges:
            out[u].append(v)
        return out

    @cached_property
    def pred(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.labels]
        for u, v, _, _ in self.edges:
            out[v].append(u)
        return out

    @cached_property
    def initial(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if not self.pred[v])

    @cached_property
    def terminal(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_vertices) if not self.succ[v])

    @property
    def initial_modes(self) -> frozenset:
        return frozenset(self.labels[v] for v in self.initial)

    def index(self, name) -> int:
        try:
            return self.names.index(str(name))
        except ValueError:
            raise SchemaError(f"unknown vertex {name!r}") from None

    def with_interval(self, u: int, v: int, lo: float, hi: float) -> "TransitionGraph":
        """Copy of the graph with edge ``(u, v)`` relabelled ``[lo, hi]``."""
        if (u, v) not in self.elab:
            raise SchemaError(f"no edge ({u}, {v})")
        edges = [(a, b, lo, hi) if (a, b) == (u, v) else (a, b, l, h) for a, b, l, h in self.edges]
        return TransitionGraph(self.labels, tuple(edges), self.names, self.modes, self.junctions)

    def to_dict(self) -> dict:
        out = {
            "vertices": [{"id": self.names[v], "mode": self.labels[v]} for v in range(self.n_vertices)],
            "edges": [
                {"src": self.names[u], "dst": self.names[v], "interval": [lo, hi]}
                for u, v, lo, hi in self.edges
            ],
        }
        if self.junctions:
            out["junctions"] = [self.names[j] for j in self.junctions]
        return out


def build_graph(
    labels: Sequence[str],
    edges: Iterable[tuple[int, int, float, float]],
    names: Sequence | None = None,
    modes: Iterable[str] | None = None,
) -> TransitionGraph:
    return TransitionGraph(
        tuple(labels),
        tuple((int(u), int(v), float(lo), float(hi)) for u, v, lo, hi in edges),
        tuple(str(x) for x in names) if names is not None else (),
        frozenset(modes) if modes is not None else frozenset(),
    )


def parse_graph(data: Mapping, modes: Iterable[str] | None = None) -> TransitionGraph:
    """Build a graph from the scenario ``graph`` block.

    ``data`` holds ``vertices = [{id, mode}]`` and
    ``edges = [{src, dst, interval = [lo, hi]}]``; when ``modes`` is given
    every vertex must reference one of them.
    """
    try:
        vertices = list(data["vertices"])
        raw_edges = list(data.get("edges", []))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"graph block is missing {exc}") from None
    names = []
    labels = []
    for vert in vertices:
        try:
            names.append(str(vert["id"]))
            labels.append(str(vert["mode"]))
        except (KeyError, TypeError):
            raise SchemaError(f"bad vertex entry {vert!r}") from None
    declared = set(modes) if modes is not None else None
    if "modes" in data:
        declared = set(map(str, data["modes"])) | (declared or set())
    if declared is not None:
        missing = sorted(set(labels) - declared)
        if missing:
            raise UnknownModeReference(f"vertices reference unknown modes {missing}")
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise SchemaError("duplicate vertex id")
    edges = []
    for e in raw_edges:
        try:
            src, dst = index[str(e["src"])], index[str(e["dst"])]
            lo, hi = (float(x) for x in e["interval"])
        except KeyError as exc:
            raise SchemaError(f"edge {e!r} references unknown vertex {exc}") from None
        except (TypeError, ValueError):
            raise SchemaError(f"bad edge entry {e!r}") from None
        edges.append((src, dst, lo, hi))
    g = TransitionGraph(tuple(labels), tuple(edges), tuple(names), frozenset(declared or labels))
    if "junctions" in data:
        js = tuple(g.index(j) for j in data["junctions"])
        g = TransitionGraph(g.labels, g.edges, g.names, g.modes, js)
    return g


def topo_sort(g: TransitionGraph) -> list[int]:
    """Topological order, ties broken by ascending vertex index."""
    return g._kahn()


def maximal_paths(g: TransitionGraph) -> Iterator[list[int]]:
    """All vertex sequences from an initial to a terminal vertex."""

    def walk(v, prefix):
        prefix = prefix + [v]
        if not g.succ[v]:
            yield prefix
            return
        for w in g.succ[v]:
            yield from walk(w, prefix)

    for v in g.initial:
        yield from walk(v, [])


def dwell_grid(lo: float, hi: float, step: float) -> list[float]:
    """Grid points ``lo, lo+step, ...`` clamped so ``hi`` is always included."""
    pts = []
    k = 0
    while True:
        t = lo + k * step
        if t >= hi - 1e-12 * max(1.0, abs(hi)):
            break
        pts.append(t)
        k += 1
    pts.append(hi)
    return pts


def count_traces(g: TransitionGraph, step: float) -> int:
    count = [0] * g.n_vertices
    for v in reversed(topo_sort(g)):
        if not g.succ[v]:
            count[v] = 1
        else:
            count[v] = sum(len(dwell_grid(*g.elab[v, w], step)) * count[w] for w in g.succ[v])
    return sum(count[v] for v in g.initial)


def enumerate_traces(g: TransitionGraph, step: float, cap: int = 10**6) -> set[TimedTrace]:
    """Every maximal-path trace with dwell times drawn from a grid.

    Dwell times are rounded to 12 decimals so traces from different graphs
    compare equal when they should.
    """
    if step <= 0:
        raise ValueError("time grid step must be positive")
    total = count_traces(g, step)
    if total > cap:
        raise ExplosionGuard(f"{total} traces exceed cap {cap}")
    out: set[TimedTrace] = set()

    def walk(v, prefix):
        prefix = prefix + (g.labels[v],)
        if not g.succ[v]:
            out.add(prefix)
            return
        for w in g.succ[v]:
            for t in dwell_grid(*g.elab[v, w], step):
                walk(w, prefix + (round(t, 12),))

    for v in g.initial:
        walk(v, ())
    return out


def _unique_endpoints(g: TransitionGraph) -> tuple[int, int]:
    if len(g.initial) != 1 or len(g.terminal) != 1:
        raise NonUniqueEndpoints("sequential composition needs unique initial and terminal vertices")
    return g.initial[0], g.terminal[0]


def sequential_compose(g1: TransitionGraph, g2: TransitionGraph) -> TransitionGraph:
    """``g1 ∘ g2``: glue g2's initial vertex onto g1's terminal vertex."""
    _, t1 = _unique_endpoints(g1)
    i2, _ = _unique_endpoints(g2)
    if g1.labels[t1] != g2.labels[i2]:
        raise LabelMismatch(
            f"terminal mode {g1.labels[t1]!r} differs from initial mode {g2.labels[i2]!r}"
        )
    n1 = g1.n_vertices
    remap = {}
    k = n1
    for v in range(g2.n_vertices):
        if v == i2:
            remap[v] = t1
        else:
            remap[v] = k
            k += 1
    labels = list(g1.labels) + [g2.labels[v] for v in range(g2.n_vertices) if v != i2]
    edges = list(g1.edges) + [(remap[u], remap[v], lo, hi) for u, v, lo, hi in g2.edges]
    names = [f"a{v}" for v in range(n1)] + [f"b{v}" for v in range(g2.n_vertices) if v != i2]
    junctions = g1.junctions + (t1,) + tuple(remap[j] for j in g2.junctions)
    return TransitionGraph(
        tuple(labels), tuple(edges), tuple(names), g1.modes | g2.modes, junctions
    )


def compose_power(g: TransitionGraph, i: int) -> TransitionGraph:
    """The ``i``-fold sequential composition of ``g`` with itself."""
    if i < 1:
        raise ValueError("power must be a positive integer")
    out = g
    for _ in range(i - 1):
        out = sequential_compose(out, g)
    return out


def merge_intervals(intervals: Iterable[Interval], tol: float = COVER_TOL) -> list[Interval]:
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def interval_covered(target: Interval, intervals: Iterable[Interval], tol: float = COVER_TOL) -> bool:
    """Whether the closed interval ``target`` lies inside the union of ``intervals``."""
    lo, hi = target
    for a, b in merge_intervals(intervals, tol):
        if a - tol <= lo and hi <= b + tol:
            return True
    return False


@dataclass(frozen=True)
class SimulationRelation:
    pairs: frozenset
    iterations: int = 0
    sizes: tuple[int, ...] = field(default=(), compare=False)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)


def _mapped(lmap: Mapping[str, str] | None, mode: str) -> str:
    if lmap is None:
        return mode
    try:
        return lmap[mode]
    except KeyError:
        raise UnknownModeReference(f"mode map is not total: {mode!r} unmapped") from None


def check_forward_simulation(
    g1: TransitionGraph, g2: TransitionGraph, lmap: Mapping[str, str] | None = None
) -> SimulationRelation | None:
    """Largest forward simulation from ``g1`` to ``g2``, or ``None``.

    Starts from all label-compatible pairs and deletes pairs whose outgoing
    edges cannot be matched by related successors covering the dwell
    interval.  ``None`` means the fixpoint does not relate every initial
    vertex of ``g1`` to an initial vertex of ``g2``.
    """
    for mode in g1.modes:
        _mapped(lmap, mode)
    rel = {
        (v, u)
        for v in range(g1.n_vertices)
        for u in range(g2.n_vertices)
        if _mapped(lmap, g1.labels[v]) == g2.labels[u]
    }
    sizes = [len(rel)]
    iterations = 0
    while True:
        iterations += 1
        drop = set()
        for v, u in rel:
            for w in g1.succ[v]:
                cover = [g2.elab[u, x] for x in g2.succ[u] if (w, x) in rel]
                if not cover or not interval_covered(g1.elab[v, w], cover):
                    drop.add((v, u))
                    break
        rel -= drop
        sizes.append(len(rel))
        if not drop:
            break
    init2 = set(g2.initial)
    for v in g1.initial:
        if not any((v, u) in rel for u in init2):
            return None
    return SimulationRelation(frozenset(rel), iterations, tuple(sizes))


def apply_lmap(trace: TimedTrace, lmap: Mapping[str, str] | None) -> TimedTrace:
    return tuple(_mapped(lmap, x) if i % 2 == 0 else x for i, x in enumerate(trace))


def is_prefix(a: TimedTrace, b: TimedTrace) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


def traces_contained(
    g1: TransitionGraph, g2: TransitionGraph, lmap: Mapping[str, str] | None, step: float
) -> bool:
    """Brute-force containment on a dwell grid: each mapped trace of g1 prefixes one of g2."""
    t2 = enumerate_traces(g2, step)
    prefixes = set()
    for tr in t2:
        for k in range(1, len(tr) + 1, 2):
            prefixes.add(tr[:k])
    return all(apply_lmap(tr, lmap) in prefixes for tr in enumerate_traces(g1, step))


def descendants(g: TransitionGraph, v: int) -> set[int]:
    seen, stack = {v}, [v]
    while stack:
        for w in g.succ[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def ancestors(g: TransitionGraph, v: int) -> set[int]:
    seen, stack = {v}, [v]
    while stack:
        for w in g.pred[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def subgraph(g: TransitionGraph, keep: Iterable[int]) -> tuple[TransitionGraph, list[int]]:
    """Induced subgraph on ``keep`` and the old index of each new vertex."""
    old = sorted(set(keep))
    new = {v: i for i, v in enumerate(old)}
    edges = [(new[u], new[v], lo, hi) for u, v, lo, hi in g.edges if u in new and v in new]
    sub = TransitionGraph(
        tuple(g.labels[v] for v in old),
        tuple(edges),
        tuple(g.names[v] for v in old),
        frozenset(g.labels[v] for v in old),
    )
    return sub, old
