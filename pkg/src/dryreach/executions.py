"""Concrete executions of a hybrid system: sampling, batching and replay."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import maximal_paths
from .sim import SimTrace, simulate, simulate_many, time_grid
from .system import HybridSystem, UnsafeSet

GRID_TOL = 1e-9


@dataclass
class Execution:
    """One run along ``path``: per-vertex sampled trajectories with local times."""

    path: tuple[int, ...]
    x0: np.ndarray
    dwells: tuple[float, ...]
    segments: list[SimTrace]

    def timed_trace(self, h: HybridSystem) -> tuple:
        out: list = []
        for v, d in zip(self.path, self.dwells):
            out += [h.graph.labels[v], d]
        out.append(h.graph.labels[self.path[-1]])
        return tuple(out)

    def first_unsafe(self, u: UnsafeSet) -> tuple[int, int] | None:
        """``(segment, sample)`` of the first sampled state inside ``u``."""
        for k, seg in enumerate(self.segments):
            hit = np.flatnonzero(u.mask(seg.mode, seg.states, seg.times))
            if len(hit):
                return k, int(hit[0])
        return None

    def rows(self) -> list[list[float]]:
        """Flattened ``(global time, local time, vertex, state...)`` rows."""
        out = []
        offset = 0.0
        for v, seg in zip(self.path, self.segments):
            for t, x in zip(seg.times, seg.states):
                out.append([offset + float(t), float(t), v, *map(float, x)])
            offset += float(seg.times[-1])
        return out


def grid_dwells(lo: float, hi: float, grid: float) -> np.ndarray:
    """Multiples of ``grid`` inside ``[lo, hi]``; ``[lo]`` when there are none."""
    k0 = int(np.ceil(lo / grid - GRID_TOL))
    k1 = int(np.floor(hi / grid + GRID_TOL))
    if k1 < k0:
        return np.array([lo])
    return np.round(np.arange(k0, k1 + 1) * grid, 12)


def run_batch(
    h: HybridSystem, path: Sequence[int], x0s: np.ndarray, dwells: np.ndarray, grid: float
) -> list[Execution]:
    """Simulate many executions along one path, one batched call per vertex.

    ``dwells`` has shape ``(m, len(path) - 1)`` and holds grid multiples, so
    every member's trajectory is a prefix of the shared sample grid.
    """
    m = len(x0s)
    g = h.graph
    x = np.asarray(x0s, dtype=float)
    segs: list[list[SimTrace]] = [[] for _ in range(m)]
    term = h.dwell(path[-1])
    for k, v in enumerate(path):
        d = dwells[:, k] if k < len(path) - 1 else np.full(m, term)
        times = time_grid(float(d.max()), grid)
        states = simulate_many(h.simulator, g.labels[v], x, times)
        idx = np.searchsorted(times, d - GRID_TOL)
        nxt = np.empty_like(x)
        for j in range(m):
            segs[j].append(SimTrace(g.labels[v], times[: idx[j] + 1], states[: idx[j] + 1, j]))
            nxt[j] = states[idx[j], j]
        x = nxt
    return [
        Execution(tuple(path), np.asarray(x0s[j], dtype=float), tuple(float(t) for t in dwells[j]), segs[j])
        for j in range(m)
    ]


def replay(h: HybridSystem, path: Sequence[int], x0, dwells: Sequence[float], grid: float) -> Execution:
    """Re-simulate one execution state by state with :func:`simulate`."""
    x = np.asarray(x0, dtype=float)
    segs = []
    full = list(dwells) + [h.dwell(path[-1])]
    for v, d in zip(path, full):
        tr = simulate(h.simulator, h.graph.labels[v], x, time_grid(d, grid))
        segs.append(tr)
        x = tr.lstate
    return Execution(tuple(path), np.asarray(x0, dtype=float), tuple(float(t) for t in dwells), segs)


def sample_executions(h: HybridSystem, n: int, rng: np.random.Generator, grid: float) -> list[Execution]:
    """``n`` random executions: uniform path, initial state and grid dwell times."""
    paths = list(maximal_paths(h.graph))
    choice = rng.integers(0, len(paths), n)
    x0s = h.theta.sample(rng, n)
    dwell_rows = []
    for i in range(n):
        p = paths[choice[i]]
        row = []
        for a, b in zip(p[:-1], p[1:]):
            opts = grid_dwells(*h.graph.elab[a, b], grid)
            row.append(opts[rng.integers(0, len(opts))])
        dwell_rows.append(row)
    out: list[Execution | None] = [None] * n
    for pi, p in enumerate(paths):
        members = np.flatnonzero(choice == pi)
        if not len(members):
            continue
        d = np.array([dwell_rows[j] for j in members], dtype=float).reshape(len(members), len(p) - 1)
        for j, ex in zip(members, run_batch(h, p, x0s[members], d, grid)):
            out[j] = ex
    return out  # type: ignore[return-value]


def executions_in_tubes(executions, result, tol: float = 1e-9) -> np.ndarray:
    """Per execution: every sample lies in some tube at its vertex and local time."""
    ok = np.ones(len(executions), dtype=bool)
    for i, ex in enumerate(executions):
        for v, seg in zip(ex.path, ex.segments):
            inside = np.zeros(len(seg.times), dtype=bool)
            for rt in result.at(v):
                inside |= rt.contains_samples(seg.times, seg.states, tol)
            if not inside.all():
                ok[i] = False
                break
    return ok
