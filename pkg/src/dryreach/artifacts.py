"""Files written by the command line: tube and witness CSVs, SVG plots, reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .errors import BadDimension
from .executions import Execution
from .graph import TransitionGraph
from .reach import ReachResult, Reachtube


def _num(x: float) -> str:
    return repr(float(x))


def write_tube_csv(path, results: Iterable[ReachResult], graph_of, n: int) -> Path:
    """One row per tube segment.  ``graph_of(i)`` names the graph of result ``i``."""
    path = Path(path)
    header = ["vertex", "mode", "t_lo", "t_hi"] + [f"dim{d}_{s}" for d in range(n) for s in ("lo", "hi")]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, rs in enumerate(results):
            g = graph_of(i)
            for rt in rs.tubes:
                for k in range(len(rt)):
                    row = [g.names[rt.vertex], rt.mode, _num(rt.times[k]), _num(rt.times[k + 1])]
                    for d in range(n):
                        row += [_num(rt.lo[k, d]), _num(rt.hi[k, d])]
                    w.writerow(row)
    return path


def write_witness_csv(path, ex: Execution, n: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "mode"] + [f"dim{d}" for d in range(n)])
        offset = 0.0
        for seg in ex.segments:
            for t, x in zip(seg.times, seg.states):
                w.writerow([_num(offset + t), seg.mode] + [_num(v) for v in x])
            offset += float(seg.times[-1])
    return path


def write_report(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


# -- plots -------------------------------------------------------------------

W, H, PAD = 640, 400, 50


def _axis(name, variables: Sequence[str]) -> int:
    """Column index of a plot axis; ``-1`` is global time."""
    if name in ("t", "time"):
        return -1
    if isinstance(name, int) or (isinstance(name, str) and name.isdigit()):
        k = int(name)
        if not 0 <= k < len(variables):
            raise BadDimension(f"dimension {k} outside 0..{len(variables) - 1}")
        return k
    if name not in variables:
        raise BadDimension(f"unknown plot dimension {name!r}")
    return variables.index(name)


def _offsets(rt: Reachtube, g: TransitionGraph) -> tuple[float, float]:
    lo = sum(g.elab[a, b][0] for a, b in zip(rt.path[:-1], rt.path[1:]))
    hi = sum(g.elab[a, b][1] for a, b in zip(rt.path[:-1], rt.path[1:]))
    return lo, hi


def emit_plot(
    path,
    results: Sequence[ReachResult],
    graphs: Sequence[TransitionGraph],
    variables: Sequence[str],
    dims: tuple,
    witness: Execution | None = None,
) -> Path:
    """SVG of tube boxes projected on ``dims``; time axes use global time.

    A segment's global time window spans every admissible arrival time at
    its vertex, so rectangles over time are sound but widen along a path.
    """
    ax = [_axis(d, variables) for d in dims]
    rects = []
    for rs, g in zip(results, graphs):
        for rt in rs.tubes:
            o_lo, o_hi = _offsets(rt, g)
            for k in range(len(rt)):
                box = []
                for a in ax:
                    if a < 0:
                        box.append((o_lo + rt.times[k], o_hi + rt.times[k + 1]))
                    else:
                        box.append((rt.lo[k, a], rt.hi[k, a]))
                rects.append(box)
    line = []
    if witness is not None:
        offset = 0.0
        for seg in witness.segments:
            for t, x in zip(seg.times, seg.states):
                line.append(tuple(offset + t if a < 0 else x[a] for a in ax))
            offset += float(seg.times[-1])
    xs = [v for r in rects for v in r[0]] + [p[0] for p in line]
    ys = [v for r in rects for v in r[1]] + [p[1] for p in line]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="12">{dims[0]}</text>',
        f'<text x="14" y="{H / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {H / 2:.1f})">{dims[1]}</text>',
        f'<text x="{PAD}" y="{H - PAD + 14}" font-size="10">{x0:.3g}</text>',
        f'<text x="{W - PAD}" y="{H - PAD + 14}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{PAD - 4}" y="{H - PAD}" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{PAD - 4}" y="{PAD + 8}" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    for (a, b), (c, d) in rects:
        out.append(
            f'<rect x="{sx(a):.3f}" y="{sy(d):.3f}" width="{sx(b) - sx(a):.3f}" '
            f'height="{sy(c) - sy(d):.3f}" fill="#3b6fb6" fill-opacity="0.15" stroke="#3b6fb6" stroke-opacity="0.3"/>'
        )
    if line:
        pts = " ".join(f"{sx(p[0]):.3f},{sy(p[1]):.3f}" for p in line)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
