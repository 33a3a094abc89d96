"""Hybrid systems and unsafe sets."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boxes import Box
from .errors import DimensionMismatch, SchemaError, UnknownModeReference
from .expr import LinearConstraint, parse_constraint
from .graph import TransitionGraph
from .sim import SimulatorSpec

WILDCARD = "*"


@dataclass(frozen=True)
class HybridSystem:
    """``<modes, Theta, G, simulator>``; ``terminal_dwell`` bounds terminal modes."""

    graph: TransitionGraph
    theta: Box
    simulator: SimulatorSpec
    terminal_dwell: float | None = None

    def __post_init__(self):
        if self.theta.dim != self.simulator.dimension:
            raise DimensionMismatch(
                f"initial set has dimension {self.theta.dim}, simulator {self.simulator.dimension}"
            )
        missing = sorted(m for m in set(self.graph.labels) if not self.simulator.has_mode(m))
        if missing:
            raise UnknownModeReference(f"simulator has no dynamics for modes {missing}")
        if self.terminal_dwell is not None and self.terminal_dwell <= 0:
            raise SchemaError("terminal dwell must be positive")

    @property
    def modes(self) -> frozenset:
        return frozenset(self.graph.labels)

    def dwell(self, v: int) -> float:
        """Longest time the system may stay at vertex ``v``."""
        g = self.graph
        if g.succ[v]:
            return max(g.elab[v, w][1] for w in g.succ[v])
        if self.terminal_dwell is not None:
            return float(self.terminal_dwell)
        if g.pred[v]:
            return max(g.elab[u, v][1] for u in g.pred[v])
        raise SchemaError("isolated vertex needs an explicit terminal_dwell")

    def with_graph(self, graph: TransitionGraph) -> "HybridSystem":
        return HybridSystem(graph, self.theta, self.simulator, self.terminal_dwell)

    def with_theta(self, theta: Box) -> "HybridSystem":
        return HybridSystem(self.graph, theta, self.simulator, self.terminal_dwell)


@dataclass(frozen=True)
class UnsafeEntry:
    mode: str
    constraints: tuple[str, ...]
    alternatives: tuple[tuple[LinearConstraint, ...], ...] = field(compare=False)

    def applies(self, mode: str) -> bool:
        return self.mode == WILDCARD or self.mode == mode


@dataclass(frozen=True)
class UnsafeSet:
    """Union over entries of (mode, conjunction of linear constraints).

    Constraints range over the state variables and ``t``, the time since
    the last mode switch.
    """

    variables: tuple[str, ...]
    entries: tuple[UnsafeEntry, ...]

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def conjunctions(self, mode: str):
        for e in self.entries:
            if e.applies(mode):
                yield from e.alternatives

    def contains(self, mode: str, x, t: float) -> bool:
        z = np.append(np.asarray(x, dtype=float), t)
        return any(all(c.holds(z) for c in conj) for conj in self.conjunctions(mode))

    def mask(self, mode: str, states: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Vectorised membership for rows of ``states`` at ``times``."""
        z = np.column_stack([states, times])
        hit = np.zeros(len(z), dtype=bool)
        for conj in self.conjunctions(mode):
            ok = np.ones(len(z), dtype=bool)
            for c in conj:
                val = z @ np.asarray(c.coeffs) + c.const
                ok &= val < 0 if c.strict else val <= 0
            hit |= ok
        return hit

    def to_list(self) -> list[dict]:
        return [{"mode": e.mode, "constraints": list(e.constraints)} for e in self.entries]


def make_unsafe_set(entries: Sequence[dict], variables: Sequence[str], modes=None) -> UnsafeSet:
    names = list(variables) + ["t"]
    out = []
    for raw in entries:
        try:
            mode = str(raw.get("mode", WILDCARD))
            cons = [str(c) for c in raw["constraints"]]
        except (KeyError, AttributeError, TypeError):
            raise SchemaError(f"bad unsafe entry {raw!r}") from None
        if modes is not None and mode != WILDCARD and mode not in modes:
            raise UnknownModeReference(f"unsafe set refers to unknown mode {mode!r}")
        parsed = [parse_constraint(c, names) for c in cons]
        alternatives = tuple(
            tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*parsed)
        )
        out.append(UnsafeEntry(mode, tuple(cons), alternatives))
    return UnsafeSet(tuple(variables), tuple(out))
