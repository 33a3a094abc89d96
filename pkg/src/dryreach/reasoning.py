"""Reasoning about reach sets through graph structure.

Three results are implemented: reach containment from a forward
simulation, two-stage reach of a sequential composition, and the
fixpoint check that lifts a one-round analysis to any number of rounds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .boxes import Box
from .errors import UnknownJunction
from .graph import (
    SimulationRelation,
    TransitionGraph,
    ancestors,
    check_forward_simulation,
    descendants,
    sequential_compose,
    subgraph,
)
from .reach import ReachOptions, ReachResult, graph_reach
from .system import HybridSystem, UnsafeSet
from .verify import Budget, verify_safety


@dataclass(frozen=True)
class Premise:
    name: str
    holds: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "detail": self.detail}


@dataclass
class ContainmentCertificate:
    """Every premise needed to conclude ``Reach(h1) ⊆ Reach(h2)``."""

    premises: list[Premise]
    relation: SimulationRelation
    lmap: dict
    ok: bool = True

    def to_dict(self) -> dict:
        return {
            "kind": "containment",
            "ok": True,
            "premises": [p.to_dict() for p in self.premises],
            "lmap": dict(sorted(self.lmap.items())),
            "relation": [list(p) for p in self.relation],
        }


@dataclass
class Failure:
    reason: str
    premises: list[Premise] = field(default_factory=list)
    ok: bool = False

    def to_dict(self) -> dict:
        return {"kind": "containment", "ok": False, "reason": self.reason,
                "premises": [p.to_dict() for p in self.premises]}


def _same_simulator(h1: HybridSystem, h2: HybridSystem, lmap: Mapping[str, str]) -> Premise:
    s1, s2 = h1.simulator, h2.simulator
    if s1 is not s2 and (s1 != s2 or s1.to_dict() != s2.to_dict()):
        return Premise("SameSimulator", False, "the systems use different simulator configurations")
    bad = sorted(m for m, m2 in lmap.items() if s1.canonical_mode(m) != s1.canonical_mode(m2))
    if bad:
        return Premise("SameSimulator", False, f"modes {bad} map to modes with undeclared dynamics")
    return Premise("SameSimulator", True, "shared simulator; mapped modes share dynamics")


def certify_reach_containment(
    h1: HybridSystem, h2: HybridSystem, lmap: Mapping[str, str] | None = None
) -> ContainmentCertificate | Failure:
    """Check the premises under which every state reached by ``h1`` is reached by ``h2``.

    Initial-set inclusion, a forward simulation from ``h1``'s graph to
    ``h2``'s, and identical dynamics for mapped modes.  On success, safety
    of ``h2`` implies safety of ``h1``.
    """
    lmap = dict(lmap) if lmap is not None else {m: m for m in h1.graph.modes}
    premises = []
    init_ok = h1.theta.dim == h2.theta.dim and h2.theta.contains(h1.theta, tol=1e-12)
    premises.append(Premise("InitialSetContained", init_ok, f"{h1.theta!r} in {h2.theta!r}"))
    if not init_ok:
        return Failure("InitialSetNotContained", premises)
    sim = _same_simulator(h1, h2, lmap)
    premises.append(sim)
    if not sim.holds:
        return Failure("SimulatorMismatch", premises)
    rel = check_forward_simulation(h1.graph, h2.graph, lmap)
    if rel is None:
        premises.append(Premise("ForwardSimulation", False, "greatest fixpoint misses an initial vertex"))
        return Failure("NoForwardSimulation", premises)
    premises.append(Premise("ForwardSimulation", True, f"{len(rel)} related pairs after {rel.iterations} rounds"))
    return ContainmentCertificate(premises, rel, lmap)


@dataclass
class Decomposition:
    """Reach of ``g1 ∘ g2`` computed in two stages glued at ``junction``."""

    junction: int
    first: HybridSystem
    second: HybridSystem
    first_vertices: list[int]
    second_vertices: list[int]
    first_result: ReachResult
    second_result: ReachResult

    def vertex_boxes(self, v: int) -> list[Box]:
        """Hulls of every stage tube attached to global vertex ``v``."""
        out = []
        for verts, rs in ((self.first_vertices, self.first_result), (self.second_vertices, self.second_result)):
            if v in verts:
                out += [rt.hull() for rt in rs.at(verts.index(v))]
        return out


def split_at_junction(g: TransitionGraph, junction: int | None = None):
    """The two parts of a composed graph and their global vertex indices."""
    if junction is None:
        if not g.junctions:
            raise UnknownJunction("graph records no composition junction")
        junction = g.junctions[0]
    if not 0 <= junction < g.n_vertices:
        raise UnknownJunction(f"vertex {junction} is not in the graph")
    before = ancestors(g, junction)
    after = descendants(g, junction)
    if before | after != set(range(g.n_vertices)) or before & after != {junction}:
        raise UnknownJunction(f"vertex {g.names[junction]!r} does not split the graph in two")
    g1, idx1 = subgraph(g, before)
    g2, idx2 = subgraph(g, after)
    return junction, g1, idx1, g2, idx2


def decompose_reach(
    h: HybridSystem, opts: ReachOptions = ReachOptions(), junction: int | None = None
) -> Decomposition:
    """Reach the first part from ``h``'s initial set, then the second part
    from the bounding box of everything reached at the junction."""
    j, g1, idx1, g2, idx2 = split_at_junction(h.graph, junction)
    h1 = HybridSystem(g1, h.theta, h.simulator, h.terminal_dwell)
    rs1 = graph_reach(h1, opts)
    seed = rs1.vertex_hull(idx1.index(j))
    h2 = HybridSystem(g2, seed, h.simulator, h.terminal_dwell)
    rs2 = graph_reach(h2, opts)
    return Decomposition(j, h1, h2, idx1, idx2, rs1, rs2)


@dataclass
class FixpointCertificate:
    """Terminal reach of one round against the initial set."""

    terminal: int
    terminal_box: Box
    theta: Box
    contained: bool
    result: ReachResult = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "kind": "fixpoint",
            "ok": self.contained,
            "premises": [
                Premise("SelfComposable", True, "terminal mode equals initial mode").to_dict(),
                Premise(
                    "TerminalReachInInitialSet",
                    self.contained,
                    f"{self.terminal_box.intervals()} in {self.theta.intervals()}",
                ).to_dict(),
            ],
        }


def certify_unbounded_composition(h: HybridSystem, opts: ReachOptions = ReachOptions()) -> FixpointCertificate:
    """Whether the terminal reach box of one round lies inside the initial set.

    When it does, each further round starts inside the initial set again,
    so the reach of any power of the graph is covered by one round's reach.
    """
    sequential_compose(h.graph, h.graph)  # raises unless self-composable
    rs = graph_reach(h, opts)
    term = h.graph.terminal[0]
    box = rs.vertex_hull(term)
    return FixpointCertificate(term, box, h.theta, h.theta.contains(box, tol=1e-12), rs)


@dataclass
class ExtensionReport:
    """Workflow for ``g1 ∘ g2^i ∘ g3``: one safe round per part plus the
    two containment checks that chain them."""

    label: str
    entry_contained: bool
    loop: FixpointCertificate
    verdicts: dict
    ok: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.label,
            "ok": self.ok,
            "premises": [
                Premise("PrefixReachInLoopSet", self.entry_contained).to_dict(),
                Premise("LoopReachInLoopSet", self.loop.contained).to_dict(),
                *[Premise(f"{k}Safe", v.verdict == "SAFE", v.verdict).to_dict() for k, v in self.verdicts.items()],
            ],
        }


def certify_extension(
    prefix: HybridSystem,
    loop_graph: TransitionGraph,
    suffix_graph: TransitionGraph,
    loop_theta: Box,
    u: UnsafeSet,
    budget: Budget = Budget(),
    opts: ReachOptions = ReachOptions(),
) -> ExtensionReport:
    """Safety of ``prefix ∘ loop^i ∘ suffix`` for every ``i`` from three bounded checks.

    ``loop_theta`` must hold the prefix's terminal reach and the loop's own
    terminal reach; the suffix is then analysed from ``loop_theta``.  This
    is the straightforward reading of the generalisation and is reported
    with the label "extension".
    """
    sequential_compose(prefix.graph, loop_graph)
    sequential_compose(loop_graph, suffix_graph)
    rs = graph_reach(prefix, opts)
    entry = rs.vertex_hull(prefix.graph.terminal[0])
    entry_ok = loop_theta.contains(entry, tol=1e-12)
    loop_sys = HybridSystem(loop_graph, loop_theta, prefix.simulator, prefix.terminal_dwell)
    cert = certify_unbounded_composition(loop_sys, opts)
    verdicts = {
        "Prefix": verify_safety(prefix, u, budget, opts),
        "Loop": verify_safety(loop_sys, u, budget, opts),
        "Suffix": verify_safety(loop_sys.with_graph(suffix_graph), u, budget, opts),
    }
    ok = entry_ok and cert.contained and all(v.verdict == "SAFE" for v in verdicts.values())
    return ExtensionReport("extension", entry_ok, cert, verdicts, ok)


def lift_vertex(g_power: TransitionGraph, g: TransitionGraph, v: int) -> int:
    """Vertex of ``g`` matching vertex ``v`` of a power of ``g``.

    Powers are numbered copy by copy, each copy after the first omitting
    its initial vertex, which is glued onto the previous terminal vertex;
    glued vertices match the initial vertex of ``g``.
    """
    n = g.n_vertices
    if v < n:
        return g.initial[0] if v in g_power.junctions else v
    if v in g_power.junctions:
        return g.initial[0]
    rest = [w for w in range(n) if w != g.initial[0]]
    return rest[(v - n) % (n - 1)]
