"""Regenerate the shipped scenario files and benchmark suite in canonical form.

Usage: python3 scripts/make_scenarios.py
"""
from __future__ import annotations

from pathlib import Path

import tomli_w

from dryreach.scenario import dumps_scenario, scenario_from_dict

OUT = Path(__file__).resolve().parents[1] / "src" / "dryreach" / "scenarios"


def _graph(vertices, edges, junctions=None):
    g = {
        "vertices": [{"id": f"v{i}", "mode": m} for i, m in enumerate(vertices)],
        "edges": [{"src": f"v{a}", "dst": f"v{b}", "interval": [float(lo), float(hi)]} for a, b, lo, hi in edges],
    }
    if junctions:
        g["junctions"] = [f"v{j}" for j in junctions]
    return g


def close(a, b):
    """Separation violation between vehicles ``a`` and ``b``."""
    return {"mode": "*", "constraints": [f"abs(sx_{a} - sx_{b}) < 2", f"abs(sy_{a} - sy_{b}) < 2"]}


def vehicles(name, desc, names, init, vertices, edges, unsafe, max_refine=10, td=None):
    variables = [f"{v}_{n}" for n in names for v in ("sx", "vx", "sy", "vy")]
    initial = {v: [0.0, 0.0] for v in variables}
    for k, val in init.items():
        initial[k] = [float(val[0]), float(val[1])] if isinstance(val, (list, tuple)) else [float(val)] * 2
    d = {
        "name": name,
        "description": desc,
        "simulator": {"kind": "product", "vehicles": list(names)},
        "graph": _graph(vertices, edges),
        "initial": initial,
        "unsafe": unsafe,
        "verifier": {"max_refine": max_refine},
        "plot": {"dims": [["t", "sy_A"], ["sx_A", "sy_A"]]},
    }
    if td is not None:
        d["terminal_dwell"] = td
    return d


def scripted(name, desc, variables, modes, vertices, edges, initial, unsafe, dims, td=None, junctions=None):
    d = {
        "name": name,
        "description": desc,
        "simulator": {"kind": "scripted_ode", "variables": variables,
                      "modes": {m: {"rhs": r} for m, r in modes.items()}},
        "graph": _graph(vertices, edges, junctions),
        "initial": {v: [float(a), float(b)] for v, (a, b) in zip(variables, initial)},
        "unsafe": unsafe,
        "plot": {"dims": dims},
    }
    if td is not None:
        d["terminal_dwell"] = td
    return d


S: dict[str, dict] = {}
SUITE: list[tuple[str, str]] = []

# -- emergency braking ---------------------------------------------------------
AEB_V = ["cruise|cruise", "em_brake|cruise"]
AEB_E = [(0, 1, 0.5, 4.5)]
AEB_SAFE = {"vy_A": 15, "sy_B": [95, 105]}
S["aeb_safe"] = vehicles("aeb_safe", "A cruises at 15 m/s toward stopped B, brakes within [0.5, 4.5] s.",
                         "AB", AEB_SAFE, AEB_V, AEB_E, [close("A", "B")], max_refine=14)
S["aeb_unsafe"] = vehicles("aeb_unsafe", "As aeb_safe with B only 20 to 30 m ahead.",
                           "AB", {"vy_A": 15, "sy_B": [20, 30]}, AEB_V, AEB_E, [close("A", "B")], max_refine=14)
S["aeb_g1"] = vehicles("aeb_g1", "Braking graph with a single window [0.5, 4.5] s.",
                       "AB", AEB_SAFE, AEB_V, AEB_E, [close("A", "B")], max_refine=14)
S["aeb_g2"] = vehicles("aeb_g2", "Braking graph with two em_brake branches, [1, 2] s and [2.5, 3.5] s.",
                       "AB", AEB_SAFE, ["cruise|cruise", "em_brake|cruise", "em_brake|cruise"],
                       [(0, 1, 1.0, 2.0), (0, 2, 2.5, 3.5)], [close("A", "B")], max_refine=14)

# -- lane merges ---------------------------------------------------------------
MERGE_V = ["speedup|cruise", "ch_right|cruise"]
MERGE_E = [(0, 1, 1.0, 1.2)]
MERGE = {"sx_A": -3.5, "vy_A": 10, "vy_B": 10}
S["merge_safe"] = vehicles("merge_safe", "A speeds up in the left lane, then merges in front of B.",
                           "AB", {**MERGE, "sy_B": [28, 30]}, MERGE_V, MERGE_E, [close("A", "B")], td=5.0)
S["merge_unsafe"] = vehicles("merge_unsafe", "As merge_safe with B only 5 to 10 m ahead.",
                             "AB", {**MERGE, "sy_B": [5, 10]}, MERGE_V, MERGE_E, [close("A", "B")], td=5.0)
S["merge_behind"] = vehicles("merge_behind", "A merges while B, ahead in the right lane, also speeds up.",
                             "AB", {**MERGE, "sy_B": [20, 21]}, ["speedup|speedup", "ch_right|speedup"],
                             MERGE_E, [close("A", "B")], td=5.0)
S["merge_ahead"] = vehicles("merge_ahead", "A merges ahead of B, which starts behind and brakes.",
                            "AB", {**MERGE, "sy_B": [-6, -5]}, ["speedup|brake", "ch_right|brake"],
                            MERGE_E, [close("A", "B")], td=5.0)

# -- overtaking ----------------------------------------------------------------
S["autopassing_unsafe"] = vehicles(
    "autopassing_unsafe", "A moves left, speeds up and cuts back right with B initially close ahead.",
    "AB", {"vy_A": 10, "vy_B": 10, "sy_B": [4, 6.5]}, ["ch_left|cruise", "speedup|cruise", "ch_right|cruise"],
    [(0, 1, 5.0, 5.0), (1, 2, 1.0, 1.5)], [close("A", "B")], td=5.0)
S["merge3_unsafe"] = vehicles(
    "merge3_unsafe", "Three vehicles: A passes B and merges back while C cruises just ahead of B.",
    "ABC", {"vy_A": 10, "vy_B": 10, "vy_C": 10, "sy_A": [-3, 3], "sy_B": [14, 15], "sy_C": [16, 20]},
    ["ch_left|cruise|cruise", "speedup|cruise|cruise", "ch_right|cruise|cruise"],
    [(0, 1, 5.0, 5.0), (1, 2, 3.0, 4.0)], [close("A", "B"), close("A", "C"), close("B", "C")], td=5.0)

# -- powertrain surrogate ------------------------------------------------------
PT = {
    "startup": ["-(2 + p^2) * (lam - 14.7)", "0.8 - p"],
    "normal": ["-(2 + p^2) * (lam - 14.7)", "0.8 - p"],
    "powerup": ["-(2 + p^2) * (lam - 12.5)", "1.5 - p"],
}
U_P = [
    {"mode": "powerup", "constraints": ["t > 4", "lam notin [12.4, 12.6]"]},
    {"mode": "normal", "constraints": ["t > 4", "lam notin [14.6, 14.8]"]},
]
PT_DIMS = [["t", "lam"], ["t", "p"]]
PT_THETA = [[14.6, 14.8], [0.7, 0.9]]
GB_E = [(5.0, 10.0), (10.0, 15.0)]


def powertrain_chain(rounds: int):
    """Startup followed by ``rounds`` normal -> powerup rounds, sharing junction vertices."""
    vertices = ["startup", "normal", "powerup"]
    edges = [(0, 1, *GB_E[0]), (1, 2, *GB_E[1])]
    junctions = []
    for _ in range(rounds - 1):
        j = len(vertices) - 1
        junctions.append(j)
        vertices += ["normal", "powerup"]
        edges += [(j, j + 1, *GB_E[0]), (j + 1, j + 2, *GB_E[1])]
    return vertices, edges, junctions


v, e, j = powertrain_chain(2)
S["powertrain"] = scripted("powertrain", "Air-fuel ratio surrogate: startup, then two normal/powerup rounds.",
                           ["lam", "p"], PT, v, e, PT_THETA, U_P, PT_DIMS, junctions=j)
v, e, j = powertrain_chain(4)
S["powertrain_4fold"] = scripted("powertrain_4fold", "As powertrain with four normal/powerup rounds.",
                                 ["lam", "p"], PT, v, e, PT_THETA, U_P, PT_DIMS, junctions=j)
S["powertrain_unsafe"] = scripted(
    "powertrain_unsafe", "Powertrain with a band requirement that applies after only 0.5 s in powerup.",
    ["lam", "p"], PT, ["startup", "normal", "powerup"], [(0, 1, *GB_E[0]), (1, 2, *GB_E[1])], PT_THETA,
    [{"mode": "powerup", "constraints": ["t > 0.5", "lam notin [12.4, 12.6]"]}], PT_DIMS)
S["powertrain_loop"] = scripted(
    "powertrain_loop", "One powerup -> normal -> powerup round from a set covering both operating points.",
    ["lam", "p"], PT, ["powerup", "normal", "powerup"], [(0, 1, *GB_E[0]), (1, 2, *GB_E[1])],
    [[12.3, 14.9], [0.7, 1.6]], U_P, PT_DIMS)

# -- automatic transmission surrogate ------------------------------------------
ATS = {f"gear{k}": [f"{a}", f"5 * ({r} * v - w)"]
       for k, a, r in [(1, 3.0, 0.18), (2, 1.5, 0.11), (3, 1.0, 0.075), (4, 0.5, 0.055)]}
ATS_V = ["gear1", "gear2", "gear3", "gear4"]
ATS_U = [{"mode": "*", "constraints": ["w > 4"]}]
S["ats_safe"] = scripted(
    "ats_safe", "Four-gear upshift sequence; engine speed w in krpm must stay at or below 4.",
    ["v", "w"], ATS, ATS_V, [(0, 1, 3.0, 3.2), (1, 2, 3.0, 3.2), (2, 3, 3.0, 3.2)],
    [[5.0, 5.5], [0.9, 1.0]], ATS_U, [["t", "w"], ["v", "w"]], td=4.0)
S["ats_unsafe"] = scripted(
    "ats_unsafe", "As ats_safe with a late first upshift in [5, 6] s.",
    ["v", "w"], ATS, ATS_V, [(0, 1, 5.0, 6.0), (1, 2, 3.0, 4.0), (2, 3, 3.0, 4.0)],
    [[5.0, 5.5], [0.9, 1.0]], ATS_U, [["t", "w"], ["v", "w"]], td=4.0)

SWEEP_NOTE = ("brute-force sweep: 5 points per uncertain initial dimension x 5 dwell values per edge, "
              "0.05 s grid ({verdict}); surrogate dynamics, reference timings and numbers not reproduced")
EXPECTED = {
    "aeb_safe": "SAFE", "aeb_unsafe": "UNSAFE", "merge_safe": "SAFE", "merge_unsafe": "UNSAFE",
    "merge_behind": "SAFE", "merge_ahead": "SAFE", "autopassing_unsafe": "UNSAFE", "merge3_unsafe": "UNSAFE",
    "powertrain": "SAFE", "powertrain_unsafe": "UNSAFE", "ats_safe": "SAFE", "ats_unsafe": "UNSAFE",
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, doc in S.items():
        sc = scenario_from_dict(doc)
        (OUT / f"{name}.toml").write_text(dumps_scenario(sc))
    suite = {"entry": [
        {"scenario": f"{n}.toml", "expected": v, "oracle": SWEEP_NOTE.format(verdict=v)} for n, v in EXPECTED.items()
    ]}
    (OUT / "suite.toml").write_text(tomli_w.dumps(suite))
    print(f"wrote {len(S)} scenarios and suite.toml to {OUT}")


if __name__ == "__main__":
    main()
