from __future__ import annotations

import numpy as np
import pytest

from dryreach.cli import SCENARIO_DIR
from dryreach.graph import build_graph
from dryreach.scenario import load_scenario


def shipped(name: str):
    return load_scenario(SCENARIO_DIR / f"{name}.toml")


def random_dag(rng: np.random.Generator, max_vertices: int = 6, modes: str = "ab", max_end: int = 5):
    """Random DAG with integer edge endpoints; vertex i only points to j > i."""
    n = int(rng.integers(1, max_vertices + 1))
    labels = [modes[int(rng.integers(len(modes)))] for _ in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.45:
                lo = int(rng.integers(0, max_end + 1))
                hi = int(rng.integers(lo, max_end + 1))
                edges.append((i, j, float(lo), float(hi)))
    return build_graph(labels, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
