"""Reachtubes: bloated simulations propagated through the transition graph."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .boxes import Box
from .discrepancy import (
    DiscrepancyFn,
    learn_global_discrepancy,
    learn_piecewise_discrepancy,
    trivial_discrepancy,
)
from .errors import (
    DegenerateInitialStates,
    DimensionMismatch,
    DurationExceedsDiscrepancyHorizon,
    RefusesEmptyGraph,
    WindowOutOfRange,
)
from .graph import topo_sort
from .sim import SimTrace, SimulatorSpec, simulate, simulate_many, time_grid
from .system import HybridSystem, UnsafeSet

log = logging.getLogger(__name__)

DEFAULT_GRID = 0.05
TIME_TOL = 1e-9


@dataclass(eq=False)
class Reachtube:
    """Boxes over consecutive mode-local time windows at one vertex.

    Segment ``i`` covers local times ``[times[i], times[i+1]]`` with box
    ``[lo[i], hi[i]]``.  ``path`` is the vertex sequence that led here.
    """

    vertex: int
    mode: str
    times: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    center: SimTrace | None = None
    path: tuple[int, ...] = ()
    init: Box | None = None
    discrepancy: DiscrepancyFn | None = None

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.lo)

    def segment(self, i: int) -> tuple[tuple[float, float], Box]:
        return (float(self.times[i]), float(self.times[i + 1])), Box(self.lo[i], self.hi[i])

    def hull(self) -> Box:
        return Box(self.lo.min(axis=0), self.hi.max(axis=0))

    def segment_index(self, t) -> np.ndarray:
        """Index of a segment whose window contains local time ``t``."""
        return np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.lo) - 1)

    def contains_samples(self, times, states, tol: float = 1e-9) -> np.ndarray:
        """Per sample: inside a segment box whose window holds its time."""
        times = np.asarray(times, dtype=float)
        inside = (times >= -TIME_TOL) & (times <= self.duration + TIME_TOL)
        out = np.zeros(len(times), dtype=bool)
        # a sample on a window boundary may use either neighbouring segment
        for side in ("right", "left"):
            idx = np.clip(np.searchsorted(self.times, times, side=side) - 1, 0, len(self.lo) - 1)
            ok = np.all(self.lo[idx] - tol <= states, axis=1) & np.all(states <= self.hi[idx] + tol, axis=1)
            out |= ok
        return out & inside


@dataclass
class ReachResult:
    tubes: list[Reachtube] = field(default_factory=list)
    ver_init: dict[int, list[Box]] = field(default_factory=dict)

    def at(self, v: int) -> list[Reachtube]:
        return [rt for rt in self.tubes if rt.vertex == v]

    def vertex_hull(self, v: int) -> Box | None:
        tubes = self.at(v)
        return Box.hull(rt.hull() for rt in tubes) if tubes else None


@dataclass(frozen=True)
class ReachOptions:
    grid: float = DEFAULT_GRID
    n_train: int = 20
    kind: str = "GED"
    gamma_cap: float = 2.0
    seed: int = 0


def _bloat(center: SimTrace, s_init: Box, beta: DiscrepancyFn) -> Reachtube:
    times, c = center.times, center.states
    r0 = s_init.radius
    radii = np.array([r0 * beta.max_factor(a, b) for a, b in zip(times[:-1], times[1:])])
    lo = np.minimum(c[:-1], c[1:]) - radii[:, None]
    hi = np.maximum(c[:-1], c[1:]) + radii[:, None]
    return Reachtube(-1, center.mode, times, lo, hi, center, init=s_init, discrepancy=beta)


def bloat_traces(
    spec: SimulatorSpec,
    mode: str,
    s_init: Box,
    duration: float,
    beta: DiscrepancyFn,
    grid: float = DEFAULT_GRID,
) -> Reachtube:
    """Simulate the center of ``s_init`` and inflate it by the discrepancy radius.

    Segment ``[t_i, t_i+1]`` gets the hull of the two center states grown by
    ``r0 * max beta-factor`` over the window, ``r0`` being the distance from
    the center to the corners of ``s_init``.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if beta.horizon < duration - TIME_TOL:
        raise DurationExceedsDiscrepancyHorizon(
            f"discrepancy learned up to {beta.horizon}, tube requested up to {duration}"
        )
    center = simulate(spec, mode, s_init.center, time_grid(duration, grid))
    return _bloat(center, s_init, beta)


def _learn(mode, times, states, opts) -> DiscrepancyFn:
    traces = [SimTrace(mode, times, states[:, j]) for j in range(states.shape[1])]
    try:
        if opts.kind == "PED":
            return learn_piecewise_discrepancy(traces, times[-1], opts.gamma_cap)
        return learn_global_discrepancy(traces, times[-1])
    except DegenerateInitialStates:
        return trivial_discrepancy(times[-1])


def learn_discrepancy(
    spec: SimulatorSpec,
    mode: str,
    s_init: Box,
    duration: float,
    opts: ReachOptions,
    rng: np.random.Generator,
) -> DiscrepancyFn:
    """Fit a discrepancy for ``mode`` from fresh simulations out of ``s_init``."""
    times = time_grid(duration, opts.grid)
    if s_init.radius < 1e-12:
        return trivial_discrepancy(times[-1])
    states = simulate_many(spec, mode, s_init.sample(rng, opts.n_train), times)
    return _learn(mode, times, states, opts)


def reach_comp(
    spec: SimulatorSpec, mode: str, s_init: Box, duration: float, opts: ReachOptions, rng: np.random.Generator
) -> Reachtube:
    """Learn a discrepancy from ``s_init`` and bloat its center simulation.

    The center and the training runs share one batched simulator call.
    """
    times = time_grid(duration, opts.grid)
    if s_init.radius < 1e-12:
        center = simulate(spec, mode, s_init.center, times)
        return _bloat(center, s_init, trivial_discrepancy(times[-1]))
    x0s = np.vstack([s_init.center, s_init.sample(rng, opts.n_train)])
    states = simulate_many(spec, mode, x0s, times)
    beta = _learn(mode, times, states[:, 1:], opts)
    return _bloat(SimTrace(mode, times, states[:, 0]), s_init, beta)


def restrict_tube(rt: Reachtube, window: tuple[float, float]) -> Box:
    """Bounding box of every segment whose time window meets ``window``."""
    t0, t1 = window
    if t0 > t1 or t0 < -TIME_TOL or t1 > rt.duration + TIME_TOL:
        raise WindowOutOfRange(f"window {window} outside [0, {rt.duration}]")
    seg_lo, seg_hi = rt.times[:-1], rt.times[1:]
    # segments merely touching a window of positive length add nothing: the
    # shared boundary state is in the box of the segment inside the window
    hit = (seg_lo < t1 - TIME_TOL) & (seg_hi > t0 + TIME_TOL)
    if not hit.any():
        hit = (seg_lo <= t1 + TIME_TOL) & (seg_hi >= t0 - TIME_TOL)
    idx = np.flatnonzero(hit)
    return Box(rt.lo[idx].min(axis=0), rt.hi[idx].max(axis=0))


def graph_reach(h: HybridSystem, opts: ReachOptions = ReachOptions(), theta: Box | None = None) -> ReachResult:
    """Reachtubes for every vertex, scanning the graph in topological order."""
    g = h.graph
    if g.n_vertices == 0:
        raise RefusesEmptyGraph("graph has no vertices")
    theta = h.theta if theta is None else theta
    rng = np.random.default_rng(opts.seed)
    pending: dict[int, list[tuple[Box, tuple[int, ...]]]] = {v: [] for v in range(g.n_vertices)}
    for v in g.initial:
        pending[v].append((theta, ()))
    result = ReachResult()
    for v in topo_sort(g):
        result.ver_init[v] = [b for b, _ in pending[v]]
        mode = g.labels[v]
        dt = h.dwell(v)
        for s_init, path in pending[v]:
            rt = reach_comp(h.simulator, mode, s_init, dt, opts, rng)
            rt.vertex = v
            rt.path = path + (v,)
            result.tubes.append(rt)
            for w in g.succ[v]:
                pending[w].append((restrict_tube(rt, g.elab[v, w]), rt.path))
    return result


class Overlap(enum.Enum):
    DISJOINT = "Disjoint"
    CONTAINED = "SegmentContained"
    PARTIAL = "Partial"


def tube_vs_set(rt: Reachtube, u: UnsafeSet) -> tuple[Overlap, int | None]:
    """Classify a tube against the unsafe set, segment by segment.

    Returns the first fully contained segment as witness, if any.
    """
    if rt.lo.shape[1] != u.dimension:
        raise DimensionMismatch("unsafe set and tube disagree on dimension")
    conjs = list(u.conjunctions(rt.mode))
    if not conjs:
        return Overlap.DISJOINT, None
    lo = np.column_stack([rt.lo, rt.times[:-1]])
    hi = np.column_stack([rt.hi, rt.times[1:]])
    touched = np.zeros(len(lo), dtype=bool)
    for conj in conjs:
        meets = np.ones(len(lo), dtype=bool)
        inside = np.ones(len(lo), dtype=bool)
        for c in conj:
            coef = np.asarray(c.coeffs)
            mn = np.where(coef >= 0, coef * lo, coef * hi).sum(axis=1) + c.const
            mx = np.where(coef >= 0, coef * hi, coef * lo).sum(axis=1) + c.const
            if c.strict:
                meets &= mn < 0
                inside &= mx < 0
            else:
                meets &= mn <= 0
                inside &= mx <= 0
        if inside.any():
            return Overlap.CONTAINED, int(np.flatnonzero(inside)[0])
        touched |= meets
    return (Overlap.PARTIAL if touched.any() else Overlap.DISJOINT), None
