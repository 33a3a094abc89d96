"""Learning exponential discrepancy functions from simulation traces.

Log-transforming ``|x1(t) - x2(t)| <= |x1(0) - x2(0)| K exp(gamma t)`` turns a
discrepancy into a linear separator ``x <= a y + b`` for the sample set of
pairs ``(ln ratio, t)``.  The separator minimising the log-bound at the
horizon is found exactly by scanning the kinks of a piecewise-linear
convex function; no LP solver is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DegenerateInitialStates, DomainError, EmptySampleSet, InsufficientTraces
from .sim import SimTrace

ZERO_DIST = 1e-12
CHECK_SLACK = 1e-9


def pac_sample_size(eps: float, delta: float) -> int:
    """Samples needed so a consistent separator has error < eps w.p. >= 1 - delta."""
    if not (0 < eps <= 1 and 0 < delta <= 1):
        raise DomainError("eps and delta must lie in (0, 1]")
    return max(1, math.ceil((1.0 / eps) * math.log(1.0 / delta)))


def _envelope_lines(x: np.ndarray, y: np.ndarray, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Lines ``f_i(a) = (T - y_i) a + x_i`` reduced to one per slope."""
    slopes = T - y
    order = np.lexsort((x, slopes))
    s, c = slopes[order], x[order]
    last = np.r_[s[1:] != s[:-1], True]
    return s[last], c[last]


def envelope_kinks(slopes: np.ndarray, intercepts: np.ndarray) -> list[float]:
    """Breakpoints of ``max_i (slopes_i a + intercepts_i)``; slopes sorted, distinct."""
    hull: list[int] = []
    for i in range(len(slopes)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # k is redundant if line i overtakes j no later than k does
            lhs = (intercepts[j] - intercepts[i]) * (slopes[k] - slopes[j])
            rhs = (intercepts[j] - intercepts[k]) * (slopes[i] - slopes[j])
            if lhs <= rhs:
                hull.pop()
            else:
                break
        hull.append(i)
    return [
        float((intercepts[j] - intercepts[k]) / (slopes[k] - slopes[j]))
        for j, k in zip(hull, hull[1:])
    ]


def separator_objective(a: float, x: np.ndarray, y: np.ndarray, T: float) -> float:
    return float(a * T + np.max(x - a * y))


def fit_separator(samples, T: float) -> tuple[float, float]:
    """Separator ``(a, b)`` minimising ``a T + b`` subject to ``x_i <= a y_i + b``.

    The objective ``f(a) = a T + max_i (x_i - a y_i)`` is convex and
    piecewise linear; it is minimised over its kinks (``a = 0`` when it has
    none).  Ties go to the smallest ``|a|``, then the smallest ``b``.
    """
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptySampleSet("cannot fit a separator to no samples")
    if T <= 0:
        raise ValueError("horizon must be positive")
    x, y = pts[:, 0], pts[:, 1]
    slopes, icpts = _envelope_lines(x, y, T)
    candidates = envelope_kinks(slopes, icpts) or [0.0]
    best = None
    for a in candidates:
        b = float(np.max(x - a * y))
        key = (a * T + b, abs(a), b)
        if best is None or key < best[0]:
            best = (key, a, b)
    _, a, b = best
    while np.any(x > a * y + b):
        b = float(np.nextafter(b, math.inf))
    return float(a), b


@dataclass(frozen=True)
class DiscrepancyFn:
    """Global (one segment) or piecewise exponential discrepancy.

    ``breakpoints`` are ``0 = t_0 < ... < t_N = T`` and ``gammas`` the N
    segment rates; a GED is the ``N = 1`` case.
    """

    kind: str
    K: float
    gammas: tuple[float, ...]
    breakpoints: tuple[float, ...]

    @property
    def gamma(self) -> float:
        return self.gammas[0]

    @property
    def horizon(self) -> float:
        return self.breakpoints[-1]

    @property
    def log_offsets(self) -> np.ndarray:
        """Exponent accumulated at the start of each segment."""
        bp = np.asarray(self.breakpoints)
        return np.r_[0.0, np.cumsum(np.asarray(self.gammas) * np.diff(bp))]

    def log_factor(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        bp = np.asarray(self.breakpoints)
        i = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, len(self.gammas) - 1)
        g = np.asarray(self.gammas)[i]
        return math.log(self.K) + self.log_offsets[i] + g * (t - bp[i])

    def factor(self, t) -> np.ndarray:
        """``beta(x1, x2, t) / |x1 - x2|``."""
        return np.exp(self.log_factor(t))

    def __call__(self, x1, x2, t):
        d = float(np.linalg.norm(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)))
        return d * self.factor(t)

    def max_factor(self, t0: float, t1: float) -> float:
        """Largest factor on ``[t0, t1]``; the exponent is piecewise linear."""
        pts = [t0, t1] + [b for b in self.breakpoints if t0 < b < t1]
        return float(np.max(self.factor(pts)))

    def describe(self) -> dict:
        out = {"type": self.kind, "K": self.K}
        if self.kind == "GED":
            out["gamma"] = self.gamma
        else:
            out["breakpoints"] = list(self.breakpoints)
            out["gammas"] = list(self.gammas)
        return out


def _check_traces(traces: Sequence[SimTrace]) -> tuple[np.ndarray, np.ndarray]:
    if len(traces) < 2:
        raise InsufficientTraces("need at least two traces")
    times = np.asarray(traces[0].times, dtype=float)
    for tr in traces[1:]:
        if len(tr.times) != len(times) or not np.allclose(tr.times, times, rtol=0, atol=1e-9):
            raise InsufficientTraces("traces must share one sample grid")
        if tr.mode != traces[0].mode:
            raise InsufficientTraces("traces must come from one mode")
    return times, np.stack([tr.states for tr in traces])


def log_ratio_samples(traces: Sequence[SimTrace], horizon: float | None = None):
    """All separator samples ``(ln(|d(t)| / |d(0)|), t)`` over trace pairs.

    Pairs with coincident initial states and instants where the two traces
    touch are skipped: the discrepancy inequality is vacuous there.
    """
    times, states = _check_traces(traces)
    if horizon is not None:
        keep = times <= horizon + 1e-9
        times, states = times[keep], states[:, keep]
    xs, ys = [], []
    usable = 0
    for i, j in combinations(range(len(states)), 2):
        d = np.linalg.norm(states[i] - states[j], axis=1)
        if d[0] < ZERO_DIST:
            continue
        usable += 1
        ok = d >= ZERO_DIST
        xs.append(np.log(d[ok] / d[0]))
        ys.append(times[ok])
    if not usable:
        raise DegenerateInitialStates("all pairwise initial distances are below 1e-12")
    return np.concatenate(xs), np.concatenate(ys), times


def _max_per_time(x: np.ndarray, y: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Largest log-ratio observed at each grid time (``-inf`` if none)."""
    idx = np.searchsorted(times, y - 1e-12)
    g = np.full(len(times), -np.inf)
    np.maximum.at(g, idx, x)
    return g


def learn_global_discrepancy(traces: Sequence[SimTrace], T: float) -> DiscrepancyFn:
    x, y, _ = log_ratio_samples(traces, T)
    a, b = fit_separator(np.column_stack([x, y]), T)
    fn = DiscrepancyFn("GED", math.exp(b), (a,), (0.0, float(T)))
    assert validate_discrepancy(fn, traces, T) == 1.0
    return fn


def learn_piecewise_discrepancy(
    traces: Sequence[SimTrace], T: float, gamma_cap: float = 2.0
) -> DiscrepancyFn:
    """Piecewise exponential discrepancy with greedily placed breakpoints.

    The first segment is fitted like a GED and fixes ``K``.  Each later
    segment starts from the bound already accumulated at its left end and
    gets the smallest rate that keeps every observed pair below the bound,
    so the single-``K`` product formula holds on the training data.
    Segments grow one sample at a time while their rate stays below
    ``gamma_cap``; a segment is never shorter than one sample step.
    """
    x, y, times = log_ratio_samples(traces, T)
    g = _max_per_time(x, y, times)
    M = len(times) - 1
    if M == 0:
        raise InsufficientTraces("need at least two sample times")

    def first_fit(e):
        sel = np.isfinite(g[: e + 1])
        pts = np.column_stack([g[: e + 1][sel], times[: e + 1][sel]])
        return fit_separator(pts, times[e])

    a, b = first_fit(1)
    end = 1
    for e in range(2, M + 1):
        if a >= gamma_cap:
            break
        a2, b2 = first_fit(e)
        if a2 >= gamma_cap:
            break
        a, b, end = a2, b2, e
    breaks = [0.0, float(times[end])]
    gammas = [a]
    bound = b + a * times[end]
    s = end
    while s < M:
        rate = -math.inf
        e = s
        for k in range(s + 1, M + 1):
            r = (g[k] - bound) / (times[k] - times[s]) if np.isfinite(g[k]) else -math.inf
            cand = max(rate, r)
            if k > s + 1 and cand >= gamma_cap:
                break
            rate, e = cand, k
            if rate >= gamma_cap:
                break
        if not math.isfinite(rate):
            rate = 0.0
        # nudge so that rounding never lets a sample poke above the bound
        while np.any(g[s + 1 : e + 1] > bound + rate * (times[s + 1 : e + 1] - times[s])):
            rate = float(np.nextafter(rate, math.inf))
        gammas.append(float(rate))
        breaks.append(float(times[e]))
        bound = bound + rate * (times[e] - times[s])
        s = e
    fn = DiscrepancyFn("PED", math.exp(b), tuple(gammas), tuple(breaks))
    assert validate_discrepancy(fn, traces, T) == 1.0
    return fn


def validate_discrepancy(fn: DiscrepancyFn, test_traces: Sequence[SimTrace], horizon: float | None = None) -> float:
    """Fraction of (pair, time) checks where the discrepancy bound holds.

    Instants where a pair is closer than ``ZERO_DIST`` are skipped, as in
    training.
    """
    times, states = _check_traces(test_traces)
    keep = times <= (fn.horizon if horizon is None else horizon) + 1e-9
    times, states = times[keep], states[:, keep]
    fac = fn.factor(times) * (1.0 + CHECK_SLACK)
    ok = total = 0
    for i, j in combinations(range(len(states)), 2):
        d = np.linalg.norm(states[i] - states[j], axis=1)
        if d[0] < ZERO_DIST:
            continue
        live = d >= ZERO_DIST
        ok += int(np.sum(d[live] <= d[0] * fac[live]))
        total += int(live.sum())
    if total == 0:
        raise InsufficientTraces("no pair of test traces with distinct initial states")
    return ok / total


def trivial_discrepancy(T: float) -> DiscrepancyFn:
    """Discrepancy used for point initial sets, where the radius is zero anyway."""
    return DiscrepancyFn("GED", 1.0, (0.0,), (0.0, float(T)))
