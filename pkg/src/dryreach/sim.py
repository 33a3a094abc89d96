"""Black-box mode simulators.

Every simulator is a deterministic function ``(mode, x0, times) -> states``.
The built-in bank covers affine modes, scripted ODEs and a surrogate
vehicle model (4 states per vehicle: ``sx, vx, sy, vy``).  All of them are
integrated with classical fixed-step RK4.

Arrays passed to right-hand sides have shape ``(n,)`` or ``(n, m)``; the
second form simulates ``m`` initial states at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, NonMonotonicTimes, NumericOverflow, SchemaError, UnknownMode
from .expr import compile_expression

OVERFLOW = 1e12
DEFAULT_STEP = 0.01

Rhs = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SimTrace:
    """A sampled labeled trajectory."""

    mode: str
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) == 0 or len(self.times) != len(self.states):
            raise ValueError("times and states must be nonempty and of equal length")

    @property
    def fstate(self) -> np.ndarray:
        return self.states[0]

    @property
    def lstate(self) -> np.ndarray:
        return self.states[-1]

    @property
    def ltime(self) -> float:
        return float(self.times[-1])


def _check_overflow(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) > OVERFLOW):
        raise NumericOverflow("state magnitude exceeded 1e12")


def rk4_step(rhs: Rhs, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance(rhs, x, t0, t1, h, project):
    span = t1 - t0
    n_full = int(math.floor(span / h + 1e-9))
    for k in range(n_full):
        x = rk4_step(rhs, t0 + k * h, x, h)
        if project is not None:
            x = project(x)
    rem = span - n_full * h
    if rem > 1e-12 * max(1.0, abs(t1)):
        x = rk4_step(rhs, t0 + n_full * h, x, rem)
        if project is not None:
            x = project(x)
    return x


def integrate_fixed_step(
    rhs: Rhs, x0, t_end: float, h: float, project: Callable | None = None
) -> np.ndarray:
    """RK4 from 0 to ``t_end`` with step ``h`` and one trailing partial step."""
    if h <= 0:
        raise ValueError("step must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    x = np.array(x0, dtype=float)
    x = _advance(rhs, x, 0.0, float(t_end), h, project)
    _check_overflow(x)
    return x


def sample_trajectory(
    rhs: Rhs, x0, times: Sequence[float], h: float, project: Callable | None = None
) -> np.ndarray:
    """States at ``times``; fixed steps restart from each requested point.

    Restarting at every sample point makes the output prefix-closed: the
    states for ``times[:j]`` never depend on later entries.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise NonMonotonicTimes("need a nonempty 1-D list of time points")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise NonMonotonicTimes("time points must be nonnegative and strictly increasing")
    x = np.array(x0, dtype=float)
    out = np.empty((len(times),) + x.shape)
    t = 0.0
    for i, ti in enumerate(times):
        x = _advance(rhs, x, t, float(ti), h, project)
        _check_overflow(x)
        out[i] = x
        t = float(ti)
    return out


# -- mode dynamics -----------------------------------------------------------

@dataclass(frozen=True)
class ModeDynamics:
    rhs: Rhs
    project: Callable | None = None


def _affine(A: np.ndarray, b: np.ndarray) -> ModeDynamics:
    n = len(b)
    rows = [[(j, float(A[i, j])) for j in range(n) if A[i, j] != 0.0] for i in range(n)]

    def rhs(t, x):
        out = np.empty_like(x)
        for i in range(n):
            acc = b[i] + 0.0 * x[0]
            # elementwise accumulation keeps batched and single runs identical
            for j, a in rows[i]:
                acc = acc + a * x[j]
            out[i] = acc
        return out

    return ModeDynamics(rhs)


def _scripted(exprs: Sequence[str], variables: Sequence[str]) -> ModeDynamics:
    names = list(variables) + ["t"]
    funcs = [compile_expression(e, names) for e in exprs]

    def rhs(t, x):
        env = {v: x[i] for i, v in enumerate(variables)}
        env["t"] = t
        out = np.empty_like(x)
        for i, f in enumerate(funcs):
            out[i] = f(env)
        return out

    return ModeDynamics(rhs)


VEHICLE_MODES = ("cruise", "speedup", "brake", "em_brake", "ch_left", "ch_right")
VEHICLE_DEFAULTS = {
    "speedup": 2.0,
    "brake": 2.0,
    "em_brake": 6.0,
    "lane_width": 3.5,
    "lane_time": 5.0,
}


def _vehicle_block(mode: str, params: Mapping[str, float]) -> tuple[float, float]:
    """Lateral direction sign and longitudinal acceleration of one vehicle."""
    if mode not in VEHICLE_MODES:
        raise UnknownMode(f"unknown vehicle mode {mode!r}")
    sign = {"ch_left": -1.0, "ch_right": 1.0}.get(mode, 0.0)
    accel = {"speedup": params["speedup"], "brake": -params["brake"], "em_brake": -params["em_brake"]}.get(mode, 0.0)
    return sign, accel


STOP_TOL = 1e-9


def _vehicles(modes: Sequence[str], params: Mapping[str, float]) -> ModeDynamics:
    """Point-mass vehicles; lane changes follow a half-sine lateral velocity."""
    blocks = [_vehicle_block(m, params) for m in modes]
    signs = np.array([[s] for s, _ in blocks])
    accel = np.array([[a] for _, a in blocks])
    braking = accel < 0
    clamped = [4 * j + 3 for j, (_, a) in enumerate(blocks) if a < 0]
    width, dur = params["lane_width"], params["lane_time"]
    peak = (width / dur) * (math.pi / 2.0) * (math.pi / dur)
    steering = bool(signs.any())

    def rhs(t, x):
        out = np.empty_like(x)
        flat = x.ndim == 1
        out[0::4] = x[1::4]
        out[2::4] = x[3::4]
        if clamped:
            # RK4 stages may probe a negative speed; a stopped car stays put
            out[[c - 1 for c in clamped]] = np.maximum(x[clamped], 0.0)
        if steering and t <= dur * (1 + 1e-12):
            lat = signs * (peak * math.cos(math.pi * t / dur))
            out[1::4] = lat[:, 0] if flat else lat
        else:
            out[1::4] = 0.0
        acc = accel[:, 0] if flat else accel
        if clamped:
            # braking stops at standstill instead of reversing
            brk = braking[:, 0] if flat else braking
            out[3::4] = np.where(brk & (x[3::4] < -STOP_TOL), 0.0, acc)
        else:
            out[3::4] = acc
        return out

    project = None
    if clamped:
        def project(x):
            x[clamped] = np.maximum(x[clamped], 0.0)
            return x

    return ModeDynamics(rhs, project)


# -- simulator specs ---------------------------------------------------------

@dataclass(frozen=True)
class SimulatorSpec:
    """A validated simulator configuration.

    ``config`` is the canonical dictionary form (as found in scenario
    files); the dynamics are built from it and cached per mode.
    """

    kind: str
    variables: tuple[str, ...]
    h: float
    config: Mapping = field(compare=False, repr=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def modes(self) -> frozenset | None:
        """Finite mode set, or ``None`` for product specs (checked lazily)."""
        extra = set(self.config.get("aliases", {}))
        if self.kind in ("affine", "scripted_ode"):
            return frozenset(self.config["modes"]) | extra
        if self.kind == "vehicle":
            return frozenset(VEHICLE_MODES) | extra
        return None

    def canonical_mode(self, mode: str) -> str:
        """Resolve declared aliases; aliased modes share their dynamics."""
        return str(self.config.get("aliases", {}).get(mode, mode))

    def has_mode(self, mode: str) -> bool:
        try:
            self.dynamics(mode)
        except UnknownMode:
            return False
        return True

    def dynamics(self, mode: str) -> ModeDynamics:
        if mode in self._cache:
            return self._cache[mode]
        cfg = self.config
        aliases = cfg.get("aliases", {})
        if mode in aliases:
            dyn = self.dynamics(str(aliases[mode]))
        elif self.kind == "affine":
            if mode not in cfg["modes"]:
                raise UnknownMode(mode)
            m = cfg["modes"][mode]
            n = self.dimension
            A = np.asarray(m.get("A", np.zeros((n, n))), dtype=float).reshape(n, n)
            b = np.asarray(m.get("b", np.zeros(n)), dtype=float).reshape(n)
            dyn = _affine(A, b)
        elif self.kind == "scripted_ode":
            if mode not in cfg["modes"]:
                raise UnknownMode(mode)
            dyn = _scripted(cfg["modes"][mode]["rhs"], self.variables)
        else:
            parts = mode.split("|")
            if len(parts) != self.dimension // 4:
                raise UnknownMode(f"mode {mode!r} does not name one mode per vehicle")
            dyn = _vehicles(parts, {**VEHICLE_DEFAULTS, **cfg.get("params", {})})
        self._cache[mode] = dyn
        return dyn

    def to_dict(self) -> dict:
        return _canonical(self.config)


def _canonical(cfg: Mapping) -> dict:
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        out[k] = _canonical(v) if isinstance(v, Mapping) else v
    return out


def make_simulator(config: Mapping) -> SimulatorSpec:
    """Validate a ``simulator`` block and build a :class:`SimulatorSpec`."""
    if not isinstance(config, Mapping):
        raise SchemaError("simulator block must be a table")
    kind = config.get("kind")
    h = float(config.get("h", DEFAULT_STEP))
    if h <= 0:
        raise SchemaError("integrator step h must be positive")
    cfg = dict(config)
    cfg["h"] = h
    if kind in ("affine", "scripted_ode"):
        variables = tuple(map(str, config.get("variables", ())))
        if not variables:
            raise SchemaError(f"{kind} simulator needs a nonempty variables list")
        modes = config.get("modes")
        if not isinstance(modes, Mapping) or not modes:
            raise SchemaError(f"{kind} simulator needs a modes table")
        n = len(variables)
        for name, m in modes.items():
            if kind == "affine":
                A = np.asarray(m.get("A", np.zeros((n, n))), dtype=float)
                b = np.asarray(m.get("b", np.zeros(n)), dtype=float)
                if A.shape != (n, n) or b.shape != (n,):
                    raise DimensionMismatch(f"mode {name!r}: A must be {n}x{n} and b length {n}")
            else:
                rhs = m.get("rhs")
                if not isinstance(rhs, (list, tuple)) or len(rhs) != n:
                    raise DimensionMismatch(f"mode {name!r}: need {n} right-hand sides")
                _scripted(rhs, variables)
    elif kind == "vehicle":
        variables = ("sx", "vx", "sy", "vy")
    elif kind == "product":
        vehicles = config.get("vehicles")
        if not isinstance(vehicles, (list, tuple)) or not vehicles:
            raise SchemaError("product simulator needs a vehicles list")
        variables = tuple(f"{v}_{str(name)}" for name in vehicles for v in ("sx", "vx", "sy", "vy"))
        if "dimension" in config and int(config["dimension"]) != len(variables):
            raise DimensionMismatch("declared dimension disagrees with vehicle count")
    else:
        raise SchemaError(f"unknown simulator kind {kind!r}")
    aliases = config.get("aliases", {})
    if not isinstance(aliases, Mapping):
        raise SchemaError("aliases must map mode names to mode names")
    unknown = set(config.get("params", {})) - set(VEHICLE_DEFAULTS)
    if unknown:
        raise SchemaError(f"unknown vehicle parameters {sorted(unknown)}")
    spec = SimulatorSpec(kind, variables, h, cfg)
    for alias in aliases:
        if alias in aliases.values() or not spec.has_mode(str(aliases[alias])):
            raise SchemaError(f"alias {alias!r} must point at a concrete mode")
    return spec


def simulate_many(spec: SimulatorSpec, mode: str, x0s, time_points) -> np.ndarray:
    """States of ``m`` simulations, shape ``(len(time_points), m, n)``."""
    dyn = spec.dynamics(mode)
    x0s = np.asarray(x0s, dtype=float)
    if x0s.ndim != 2 or x0s.shape[1] != spec.dimension:
        raise DimensionMismatch(f"expected initial states of dimension {spec.dimension}")
    out = sample_trajectory(dyn.rhs, x0s.T.copy(), time_points, spec.h, dyn.project)
    return np.transpose(out, (0, 2, 1))


def simulate(spec: SimulatorSpec, mode: str, x0, time_points) -> SimTrace:
    """Deterministic simulation of one mode from ``x0`` sampled at ``time_points``."""
    dyn = spec.dynamics(mode)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.dimension,):
        raise DimensionMismatch(f"expected a state of dimension {spec.dimension}")
    times = np.asarray(time_points, dtype=float)
    states = sample_trajectory(dyn.rhs, x0[:, None].copy(), times, spec.h, dyn.project)[:, :, 0]
    return SimTrace(mode, times, states)


def time_grid(duration: float, step: float) -> np.ndarray:
    """``0, step, 2 step, ...`` up to and including ``duration``."""
    k = int(math.floor(duration / step + 1e-9))
    pts = np.round(np.arange(k + 1) * step, 12)
    if duration - pts[-1] > 1e-9:
        pts = np.append(pts, duration)
    return pts
