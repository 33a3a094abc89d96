"""Scenario files: one TOML document describing a verification problem.

Layout::

    name = "aeb_safe"
    terminal_dwell = 5.0            # optional
    [simulator]                     # see make_simulator
    [graph]                         # vertices = [{id, mode}], edges = [{src, dst, interval}]
    [initial]                       # variable = [lo, hi], one entry per state variable
    [[unsafe]]                      # mode = "*" | name, constraints = ["..."]
    [discrepancy]                   # type, train_count, seed, gamma_cap
    [verifier]                      # max_refine, time_cap, falsify_samples, partition, grid
    [plot]                          # dims = [["t", "sy_A"], ...]

Serialisation is canonical: defaults are filled in, keys are sorted and
numbers become floats where the schema says so, so a dumped scenario
parses back to an identical document.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .boxes import Box
from .errors import SchemaError
from .graph import parse_graph
from .reach import DEFAULT_GRID, ReachOptions
from .sim import make_simulator
from .system import HybridSystem, UnsafeSet, make_unsafe_set
from .verify import Budget

TOP_KEYS = {"name", "description", "terminal_dwell", "simulator", "graph", "initial", "unsafe",
            "discrepancy", "verifier", "plot"}
DISCREPANCY_DEFAULTS = {"type": "GED", "train_count": 20, "seed": 0, "gamma_cap": 2.0}
VERIFIER_DEFAULTS = {"max_refine": 10, "falsify_samples": 100, "partition": 2, "grid": DEFAULT_GRID}


@dataclass
class Scenario:
    name: str
    system: HybridSystem
    unsafe: UnsafeSet
    reach: ReachOptions
    budget: Budget
    falsify_samples: int
    partition: int
    plot_dims: list[tuple[str, str]]
    description: str = ""
    source: Path | None = field(default=None, compare=False)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.system.simulator.variables

    def to_dict(self) -> dict:
        h = self.system
        out: dict[str, Any] = {"name": self.name}
        if self.description:
            out["description"] = self.description
        if h.terminal_dwell is not None:
            out["terminal_dwell"] = float(h.terminal_dwell)
        out["simulator"] = h.simulator.to_dict()
        out["graph"] = h.graph.to_dict()
        out["initial"] = {v: [float(a), float(b)] for v, (a, b) in zip(self.variables, h.theta.intervals())}
        out["unsafe"] = self.unsafe.to_list()
        out["discrepancy"] = {
            "type": self.reach.kind,
            "train_count": self.reach.n_train,
            "seed": self.reach.seed,
            "gamma_cap": float(self.reach.gamma_cap),
        }
        ver = {
            "max_refine": self.budget.max_refine,
            "falsify_samples": self.falsify_samples,
            "partition": self.partition,
            "grid": float(self.reach.grid),
        }
        if self.budget.time_cap is not None:
            ver["time_cap"] = float(self.budget.time_cap)
        out["verifier"] = ver
        out["plot"] = {"dims": [list(p) for p in self.plot_dims]}
        return out

    def with_overrides(self, seed=None, grid=None, max_refine=None, terminal_dwell=None) -> "Scenario":
        sc = self
        if seed is not None or grid is not None:
            sc = replace(sc, reach=replace(
                sc.reach,
                seed=sc.reach.seed if seed is None else int(seed),
                grid=sc.reach.grid if grid is None else float(grid),
            ))
        if max_refine is not None:
            sc = replace(sc, budget=replace(sc.budget, max_refine=int(max_refine)))
        if terminal_dwell is not None:
            h = sc.system
            sc = replace(sc, system=HybridSystem(h.graph, h.theta, h.simulator, float(terminal_dwell)))
        return sc


def _table(doc: Mapping, key: str, defaults: Mapping | None = None) -> dict:
    raw = doc.get(key, {})
    if not isinstance(raw, Mapping):
        raise SchemaError(f"[{key}] must be a table")
    if defaults is not None:
        unknown = set(raw) - set(defaults) - ({"time_cap"} if key == "verifier" else set())
        if unknown:
            raise SchemaError(f"[{key}] has unknown keys {sorted(unknown)}")
        return {**defaults, **raw}
    return dict(raw)


def scenario_from_dict(doc: Mapping, source: Path | None = None) -> Scenario:
    if not isinstance(doc, Mapping):
        raise SchemaError("scenario must be a table")
    unknown = set(doc) - TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown top-level keys {sorted(unknown)}")
    for key in ("name", "simulator", "graph", "initial"):
        if key not in doc:
            raise SchemaError(f"scenario is missing {key!r}")
    sim = make_simulator(_table(doc, "simulator"))
    graph = parse_graph(_table(doc, "graph"), sim.modes)
    initial = _table(doc, "initial")
    missing = [v for v in sim.variables if v not in initial]
    extra = sorted(set(initial) - set(sim.variables))
    if missing or extra:
        raise SchemaError(f"[initial] must bound exactly the state variables (missing {missing}, extra {extra})")
    try:
        theta = Box.from_intervals([[float(x) for x in initial[v]] for v in sim.variables])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad initial interval: {exc}") from None
    td = doc.get("terminal_dwell")
    system = HybridSystem(graph, theta, sim, None if td is None else float(td))
    unsafe_raw = doc.get("unsafe", [])
    if not isinstance(unsafe_raw, list):
        raise SchemaError("unsafe must be an array of tables")
    unsafe = make_unsafe_set(unsafe_raw, sim.variables, graph.modes)
    dis = _table(doc, "discrepancy", DISCREPANCY_DEFAULTS)
    if dis["type"] not in ("GED", "PED"):
        raise SchemaError("discrepancy type must be GED or PED")
    ver = _table(doc, "verifier", VERIFIER_DEFAULTS)
    try:
        reach = ReachOptions(float(ver["grid"]), int(dis["train_count"]), str(dis["type"]),
                             float(dis["gamma_cap"]), int(dis["seed"]))
        tc = ver.get("time_cap")
        budget = Budget(int(ver["max_refine"]), None if tc is None else float(tc))
        falsify, parts = int(ver["falsify_samples"]), int(ver["partition"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad option value: {exc}") from None
    if reach.grid <= 0 or reach.n_train < 2 or budget.max_refine < 0 or parts < 2 or falsify < 0:
        raise SchemaError("options out of range")
    dims = [tuple(map(str, p)) for p in _table(doc, "plot").get("dims", [])]
    names = set(sim.variables) | {"t"}
    for p in dims:
        if len(p) != 2 or not set(p) <= names:
            raise SchemaError(f"bad plot pair {list(p)}")
    return Scenario(
        str(doc["name"]), system, unsafe, reach, budget, falsify, parts, dims,
        str(doc.get("description", "")), source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    return scenario_from_dict(doc, path)


def loads_scenario(text: str) -> Scenario:
    try:
        return scenario_from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(str(exc)) from None


def dumps_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(sc.to_dict())


def load_mode_map(path) -> dict[str, str]:
    """A ``from_mode = "to_mode"`` TOML table."""
    try:
        doc = tomllib.loads(Path(path).read_text())
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if not all(isinstance(v, str) for v in doc.values()):
        raise SchemaError("mode map values must be mode names")
    return dict(doc)
