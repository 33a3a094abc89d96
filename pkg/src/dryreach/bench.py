"""Benchmark suite runner and the brute-force sweep oracle."""
from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .executions import run_batch
from .graph import maximal_paths
from .system import HybridSystem, UnsafeSet

log = logging.getLogger(__name__)


def sweep_oracle(
    h: HybridSystem, u: UnsafeSet, points: int = 5, dwell_points: int = 5, grid: float = 0.05,
    cap: int = 500_000, chunk: int = 4096,
) -> tuple[str, int]:
    """Verdict from simulating a regular grid of executions.

    Initial states take ``points`` evenly spaced values per uncertain
    dimension; dwell times take ``dwell_points`` evenly spaced values per
    edge interval, snapped to the sample grid, endpoints included.
    Returns ``("UNSAFE", runs)`` once some run enters ``u`` and
    ``("SAFE", runs)`` otherwise.
    """
    axes = [np.linspace(a, b, points) if b > a else np.array([a]) for a, b in h.theta.intervals()]
    starts = np.array(list(itertools.product(*axes)))
    runs = 0
    for path in maximal_paths(h.graph):
        opts = []
        for a, b in zip(path[:-1], path[1:]):
            lo, hi = h.graph.elab[a, b]
            d = np.round(np.linspace(lo, hi, dwell_points) / grid) * grid
            opts.append(np.unique(np.clip(np.round(d, 12), lo, hi)))
        combos = np.array(list(itertools.product(*opts)), dtype=float).reshape(-1, len(path) - 1)
        x0s = np.repeat(starts, len(combos), axis=0)
        dws = np.tile(combos, (len(starts), 1))
        if runs + len(x0s) > cap:
            raise SchemaError(f"sweep would need more than {cap} runs")
        for k in range(0, len(x0s), chunk):
            exs = run_batch(h, path, x0s[k : k + chunk], dws[k : k + chunk], grid)
            runs += len(exs)
            if any(ex.first_unsafe(u) is not None for ex in exs):
                return "UNSAFE", runs
    return "SAFE", runs


# -- suites ------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkEntry:
    scenario: Path
    expected: str
    oracle: str


def load_suite(path) -> list[BenchmarkEntry]:
    """``[[entry]]`` tables with ``scenario``, ``expected`` and ``oracle``.

    Scenario paths are relative to the suite file.
    """
    from .scenario import tomllib

    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    raw = doc.get("entry", [])
    if not isinstance(raw, list):
        raise SchemaError("entry must be an array of tables")
    out = []
    for e in raw:
        if not isinstance(e, dict) or not {"scenario", "expected", "oracle"} <= set(e):
            raise SchemaError("each entry needs scenario, expected and oracle")
        if e["expected"] not in ("SAFE", "UNSAFE"):
            raise SchemaError(f"expected verdict must be SAFE or UNSAFE, got {e['expected']!r}")
        if not str(e["oracle"]).strip():
            raise SchemaError("oracle note must be nonempty")
        out.append(BenchmarkEntry(path.parent / e["scenario"], e["expected"], str(e["oracle"])))
    return out


def time_horizon(h: HybridSystem) -> float:
    """Longest total duration of any execution."""
    best = 0.0
    for path in maximal_paths(h.graph):
        total = sum(h.graph.elab[a, b][1] for a, b in zip(path[:-1], path[1:]))
        best = max(best, total + h.dwell(path[-1]))
    return best


def _run_entry(entry: BenchmarkEntry, out: Path, overrides: dict) -> dict:
    from .cli import verify_scenario
    from .scenario import load_scenario

    sc = load_scenario(entry.scenario).with_overrides(**overrides)
    d = out / sc.name
    d.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    data, _, _ = verify_scenario(sc, d)
    theta = " x ".join(
        f"{v}[{a:g},{b:g}]" for v, (a, b) in zip(sc.variables, sc.system.theta.intervals()) if b > a
    )
    return {
        "name": sc.name,
        "TH": time_horizon(sc.system),
        "theta": theta,
        "refinements": data["stats"]["refinements"],
        "verdict": data["verdict"],
        "expected": entry.expected,
        "match": data["verdict"] == entry.expected,
        "time": time.perf_counter() - t0,
    }


def run_bench(suite: list[BenchmarkEntry], out, jobs: int = 1, overrides: dict | None = None) -> list[dict]:
    """Verify every entry; rows keep suite order.  Each entry writes to its own directory."""
    out = Path(out)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if jobs > 1 and len(suite) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_run_entry, e, out, overrides) for e in suite]
            return [f.result() for f in futs]
    return [_run_entry(e, out, overrides) for e in suite]


def format_table(rows: list[dict]) -> str:
    head = ["model", "TH", "initial set", "refinements", "verdict", "expected", "match", "runtime"]
    body = [
        [r["name"], f"{r['TH']:g}", r["theta"], str(r["refinements"]), r["verdict"], r["expected"],
         "yes" if r["match"] else "NO", f"{r['time']:.2f}s"]
        for r in rows
    ]
    widths = [max(len(c) for c in col) for col in zip(head, *body)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in [head] + body]
    return "\n".join(lines)
