"""Adaptive Runge–Kutta integration of any chart, with events and terminal tags.

The stepping loop itself is compiled (see ``_rk_core``); this module wraps it
with seeding conventions, event localization on the cubic Hermite dense
output, terminal classification and CSV export.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _rk_core as core
from .dynsys import CHART_DIM, ChartId, param_vector, phase_of_states
from .errors import DomainError
from .exponents import RegimeParams

__all__ = [
    "Controls",
    "Thresholds",
    "Terminal",
    "EventKind",
    "EventSpec",
    "Event",
    "Trajectory",
    "integrate",
    "detect_terminal",
    "locate_event",
    "event_values",
    "hermite_eval",
    "count_sign_changes",
    "PHASE_CHARTS",
    "CROSSING_CAP",
]

PHASE_CHARTS = (ChartId.FULL_PHASE, ChartId.STAT_OFFSET, ChartId.PLANE_X0, ChartId.PLANE_Z0)
CROSSING_CAP = 10


@dataclass(frozen=True)
class Controls:
    """Step-size control.  ``atol`` may be set tiny for purely relative control."""

    rtol: float = 1e-10
    atol: float = 1e-12
    max_span: float = 200.0
    max_steps: int = 2_000_000
    buffer_rows: int = 65536

    def tightened(self, factor: float = 10.0) -> "Controls":
        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor)

    def as_dict(self) -> dict:
        return {"rtol": self.rtol, "atol": self.atol, "max_span": self.max_span, "max_steps": self.max_steps}


@dataclass(frozen=True)
class Thresholds:
    """Terminal-detection thresholds (all recorded in run manifests)."""

    y_escape: float = 1e6
    p0_ball: float = 1e-8
    x_strip: float = 1e3
    q5_x: float = 1e4
    q5_z: float = 1e-6
    q5_y: float = 1e-3
    crit_ball: float = 1e-8
    blowup: float = 1e8

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class Terminal(IntEnum):
    NONE = core.ST_RUNNING
    HIT_P0 = core.ST_HIT_P0
    HIT_Q1 = core.ST_HIT_Q1
    ESCAPE_Q2 = core.ST_ESC_Q2
    ESCAPE_Q3 = core.ST_ESC_Q3
    ESCAPE_Q5 = core.ST_ESC_Q5
    VANISH_AT_XI0 = core.ST_VANISH
    HIT_P1 = core.ST_HIT_P1
    HIT_P2 = core.ST_HIT_P2
    STRIP_EXIT = core.ST_STRIP_EXIT
    BLOWUP = core.ST_BLOWUP
    SPAN_EXHAUSTED = core.ST_SPAN
    STEP_FAILURE = core.ST_STEP_FAIL
    AMBIGUOUS = 30

    @property
    def label(self) -> str:
        return _TERMINAL_LABELS[self]


_TERMINAL_LABELS = {
    Terminal.NONE: "None",
    Terminal.HIT_P0: "HitP0",
    Terminal.HIT_Q1: "HitQ1",
    Terminal.ESCAPE_Q2: "EscapeQ2",
    Terminal.ESCAPE_Q3: "EscapeQ3",
    Terminal.ESCAPE_Q5: "EscapeQ5",
    Terminal.VANISH_AT_XI0: "VanishAtXi0",
    Terminal.HIT_P1: "HitP1",
    Terminal.HIT_P2: "HitP2",
    Terminal.STRIP_EXIT: "StripExit",
    Terminal.BLOWUP: "Blowup",
    Terminal.SPAN_EXHAUSTED: "SpanExhausted",
    Terminal.STEP_FAILURE: "StepFailure",
    Terminal.AMBIGUOUS: "Ambiguous",
}

_FLAG_OF = {
    Terminal.HIT_P0: core.F_P0,
    Terminal.HIT_Q1: core.F_Q1,
    Terminal.ESCAPE_Q2: core.F_Q2,
    Terminal.ESCAPE_Q3: core.F_Q3,
    Terminal.ESCAPE_Q5: core.F_Q5,
    Terminal.HIT_P1: core.F_P1,
    Terminal.HIT_P2: core.F_P2,
    Terminal.STRIP_EXIT: core.F_STRIP_EXIT,
    Terminal.VANISH_AT_XI0: core.F_VANISH,
    Terminal.BLOWUP: core.F_BLOWUP,
}


def default_terminals(chart: ChartId, direction: int) -> frozenset[Terminal]:
    """Terminal criteria that make sense for a chart and time direction."""
    T = Terminal
    if chart in (ChartId.FULL_PHASE, ChartId.STAT_OFFSET):
        if direction > 0:
            return frozenset({T.HIT_Q1, T.ESCAPE_Q2, T.ESCAPE_Q3, T.ESCAPE_Q5})
        return frozenset({T.HIT_P0, T.ESCAPE_Q2, T.ESCAPE_Q3})
    if chart == ChartId.PLANE_X0:
        if direction > 0:
            return frozenset({T.HIT_P2, T.ESCAPE_Q2, T.ESCAPE_Q3})
        return frozenset({T.HIT_P0, T.HIT_P1, T.ESCAPE_Q2, T.ESCAPE_Q3})
    if chart == ChartId.PLANE_Z0:
        if direction > 0:
            return frozenset({T.ESCAPE_Q5, T.ESCAPE_Q2, T.ESCAPE_Q3})
        return frozenset({T.HIT_P0, T.HIT_P1, T.ESCAPE_Q2, T.ESCAPE_Q3})
    if chart == ChartId.PROFILE_ODE:
        return frozenset({T.VANISH_AT_XI0, T.BLOWUP})
    return frozenset({T.BLOWUP})


def _threshold_vector(th: Thresholds, terminals: Iterable[Terminal]) -> np.ndarray:
    tp = np.zeros(core.N_THRESH)
    tp[core.T_Y_ESC] = th.y_escape
    tp[core.T_P0_BALL] = th.p0_ball
    tp[core.T_X_STRIP] = th.x_strip
    tp[core.T_Q5_X] = th.q5_x
    tp[core.T_Q5_Z] = th.q5_z
    tp[core.T_Q5_Y] = th.q5_y
    tp[core.T_CRIT_BALL] = th.crit_ball
    tp[core.T_BLOWUP] = th.blowup
    for term in terminals:
        tp[_FLAG_OF[Terminal(term)]] = 1.0
    return tp


# ---------------------------------------------------------------------------
# events


class EventKind(Enum):
    CROSS_Z0 = "CrossZ0"
    CROSS_Y_ZERO = "CrossYZero"
    CROSS_Y_STAT = "CrossYStat"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class EventSpec:
    """An event g = 0.  ``direction`` is "any", "up" (g increasing) or "down"."""

    kind: EventKind
    direction: str = "any"
    func: Callable[[float, np.ndarray], float] | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if self.direction not in ("any", "up", "down"):
            raise ValueError(f"event direction must be any/up/down, got {self.direction!r}")
        if self.kind is EventKind.CUSTOM and self.func is None:
            raise ValueError("custom events need a scalar function g(t, state)")

    @property
    def label(self) -> str:
        return self.name or self.kind.value


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    state: np.ndarray
    direction: int  # +1 when g increases through zero (in increasing t), -1 otherwise, 0 for a graze
    label: str


def event_values(spec: EventSpec, chart: ChartId, t: np.ndarray, states: np.ndarray, params: RegimeParams) -> np.ndarray:
    """Event function g evaluated on each row of ``states``."""
    states = np.atleast_2d(states)
    if spec.kind is EventKind.CUSTOM:
        return np.array([float(spec.func(ti, ui)) for ti, ui in zip(np.atleast_1d(t), states)])
    if chart not in PHASE_CHARTS:
        raise DomainError(f"{spec.kind.value} events need a phase chart, not {ChartId(chart).name}")
    if chart == ChartId.STAT_OFFSET:
        if spec.kind is EventKind.CROSS_Z0:
            return states[:, 2].copy()
        if spec.kind is EventKind.CROSS_Y_STAT:
            return states[:, 1].copy()
        return states[:, 1] + params.y_stat
    xyz = phase_of_states(chart, states, params)
    if spec.kind is EventKind.CROSS_Z0:
        return xyz[:, 2] - param_vector(params)[4]
    if spec.kind is EventKind.CROSS_Y_STAT:
        return xyz[:, 1] - params.y_stat
    return xyz[:, 1].copy()


def _event_scale(spec: EventSpec, params: RegimeParams) -> float:
    if spec.kind is EventKind.CROSS_Z0:
        return max(1.0, abs(param_vector(params)[4]))
    if spec.kind in (EventKind.CROSS_Y_STAT, EventKind.CROSS_Y_ZERO):
        return max(1.0, abs(params.y_stat))
    return 1.0


def hermite_eval(t0: float, y0: np.ndarray, f0: np.ndarray, t1: float, y1: np.ndarray, f1: np.ndarray, t: float) -> np.ndarray:
    """Cubic Hermite interpolant through (t0, y0, f0) and (t1, y1, f1)."""
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * h * f0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * h * f1
    )


def count_sign_changes(values: np.ndarray) -> int:
    """Sign changes in a sequence, ignoring exact zeros."""
    s = np.sign(np.asarray(values, dtype=np.float64))
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def locate_event(
    traj: "Trajectory",
    index: int,
    spec: EventSpec,
    params: RegimeParams,
    gtol: float = 1e-12,
    ttol: float = 1e-13,
) -> tuple[float, np.ndarray]:
    """Bisection for g = 0 on the dense output between samples ``index`` and ``index+1``.

    Stops when |g| ≤ gtol·scale or the bracket is narrower than ttol.
    """
    t0, t1 = traj.t[index], traj.t[index + 1]
    y0, y1 = traj.states[index], traj.states[index + 1]
    f0, f1 = traj.derivs[index], traj.derivs[index + 1]
    chart = traj.chart
    scale = _event_scale(spec, params)

    def g(t: float) -> tuple[float, np.ndarray]:
        u = hermite_eval(t0, y0, f0, t1, y1, f1, t)
        return float(event_values(spec, chart, np.array([t]), u[None, :], params)[0]), u

    ga, ua = g(t0)
    if ga == 0.0:
        return t0, ua
    gb, ub = g(t1)
    if gb == 0.0:
        return t1, ub
    a, b = t0, t1
    tm, um = b, ub
    for _ in range(200):
        tm = 0.5 * (a + b)
        gm, um = g(tm)
        if abs(gm) <= gtol * scale or abs(b - a) <= ttol * max(1.0, abs(tm)):
            break
        if (gm > 0) == (ga > 0):
            a, ga = tm, gm
        else:
            b, gb = tm, gm
    return tm, um


def _find_events(traj: "Trajectory", spec: EventSpec, params: RegimeParams, graze_tol: float = 1e-10) -> list[Event]:
    g = event_values(spec, traj.chart, traj.t, traj.states, params)
    n = g.size
    if n < 2:
        return []
    sgn = np.sign(g)
    # carry the last nonzero sign forward so that exact zeros do not split a crossing
    idx = np.where(sgn != 0, np.arange(n), 0)
    np.maximum.accumulate(idx, out=idx)
    filled = sgn[idx]
    cross = np.nonzero((filled[:-1] != filled[1:]) & (filled[:-1] != 0) & (filled[1:] != 0))[0]
    tsign = 1.0 if traj.t[-1] >= traj.t[0] else -1.0
    scale = _event_scale(spec, params)
    found: list[Event] = []
    crossing_index: list[int] = []
    for i in cross:
        up_in_t = (filled[i + 1] > filled[i]) == (tsign > 0)
        d = 1 if up_in_t else -1
        t_star, u_star = locate_event(traj, int(i), spec, params)
        found.append(Event(t_star, spec.kind, u_star, d, spec.label))
        crossing_index.append(int(i))
    # a double root: two opposite crossings with a negligible excursion in between
    merged: list[Event] = []
    j = 0
    while j < len(found):
        if j + 1 < len(found):
            i0, i1 = crossing_index[j], crossing_index[j + 1]
            excursion = np.max(np.abs(g[i0 + 1 : i1 + 1])) if i1 > i0 else 0.0
            if excursion <= graze_tol * scale and found[j].direction != found[j + 1].direction:
                e0 = found[j]
                merged.append(Event(e0.t, e0.kind, e0.state, 0, e0.label))
                j += 2
                continue
        merged.append(found[j])
        j += 1
    if spec.direction == "up":
        merged = [e for e in merged if e.direction > 0]
    elif spec.direction == "down":
        merged = [e for e in merged if e.direction < 0]
    return merged


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit; ``t`` is the chart's independent variable (η, ξ or s)."""

    chart: ChartId
    params: RegimeParams
    t: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    events: tuple[Event, ...]
    terminal: Terminal
    direction: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.t.size)

    def phase(self) -> np.ndarray:
        """(X, Y, Z) for every sample (phase-type charts only)."""
        return phase_of_states(self.chart, self.states, self.params)

    def events_of(self, kind: EventKind | str) -> list[Event]:
        if isinstance(kind, EventKind):
            return [e for e in self.events if e.kind is kind]
        return [e for e in self.events if e.label == kind]

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def interpolate(self, t: float) -> np.ndarray:
        """Dense-output state at ``t`` (within the sampled range)."""
        ts = self.t if self.t[-1] >= self.t[0] else self.t[::-1]
        order = slice(None) if self.t[-1] >= self.t[0] else slice(None, None, -1)
        if not ts[0] <= t <= ts[-1]:
            raise DomainError(f"t={t} outside the trajectory range [{ts[0]}, {ts[-1]}]")
        st, dv = self.states[order], self.derivs[order]
        i = int(np.clip(np.searchsorted(ts, t) - 1, 0, ts.size - 2))
        return hermite_eval(ts[i], st[i], dv[i], ts[i + 1], st[i + 1], dv[i + 1], t)

    def ascending(self) -> "Trajectory":
        """The same samples ordered by increasing independent variable."""
        if self.t.size < 2 or self.t[-1] >= self.t[0]:
            return self
        return replace(self, t=self.t[::-1].copy(), states=self.states[::-1].copy(), derivs=self.derivs[::-1].copy())

    def to_csv(self, path, events_path=None) -> None:
        names = _column_names(self.chart)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([_tname(self.chart)] + names)
            for ti, ui in zip(self.t, self.states):
                w.writerow([repr(float(ti))] + [repr(float(v)) for v in ui])
        if events_path is not None:
            with open(events_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow([_tname(self.chart), "kind", "direction"] + names)
                for e in self.events:
                    w.writerow([repr(float(e.t)), e.label, e.direction] + [repr(float(v)) for v in e.state])


def _tname(chart: ChartId) -> str:
    if chart == ChartId.PROFILE_ODE:
        return "xi"
    if chart in (ChartId.G_EQUATION, ChartId.LINEARIZED):
        return "s"
    if chart == ChartId.INF_X or chart == ChartId.W_PLANE:
        return "eta1"
    if chart in (ChartId.INF_Y_PLUS, ChartId.INF_Y_MINUS):
        return "eta2"
    return "eta"


def _column_names(chart: ChartId) -> list[str]:
    return {
        ChartId.FULL_PHASE: ["X", "Y", "Z"],
        ChartId.STAT_OFFSET: ["X", "Y_minus_Ystat", "Z_minus_Z0"],
        ChartId.PROFILE_ODE: ["f", "fprime"],
        ChartId.INF_X: ["x", "y", "z"],
        ChartId.INF_Y_PLUS: ["xt", "zt", "wt"],
        ChartId.INF_Y_MINUS: ["xt", "zt", "wt"],
        ChartId.PLANE_X0: ["Y", "Z"],
        ChartId.PLANE_Z0: ["X", "Y"],
        ChartId.W_PLANE: ["y", "w"],
        ChartId.G_EQUATION: ["g", "gprime"],
        ChartId.LINEARIZED: ["y", "yprime"],
    }[ChartId(chart)]


def natural_start(chart: ChartId, state: np.ndarray, params: RegimeParams) -> float:
    """η = ½ ln(X/α) for phase charts with X > 0, else 0."""
    if chart in (ChartId.FULL_PHASE, ChartId.STAT_OFFSET, ChartId.PLANE_Z0) and state[0] > 0.0:
        return 0.5 * math.log(state[0] / params.alpha)
    return 0.0


def integrate(
    chart: ChartId,
    seed,
    direction: int | str,
    events: Sequence[EventSpec] = (),
    controls: Controls | None = None,
    params: RegimeParams | None = None,
    *,
    t0: float | None = None,
    t_end: float | None = None,
    thresholds: Thresholds | None = None,
    terminals: Iterable[Terminal] | None = None,
    store: bool = True,
    xi_min: float | None = None,
) -> Trajectory:
    """Integrate ``chart`` from ``seed`` forward (+1) or backward (−1).

    ``seed`` is a state vector or any object with ``state`` (and optionally
    ``t0``) attributes.  The run stops at the first terminal criterion, at
    ``t_end`` or after ``controls.max_span`` units of the independent variable.
    With ``store=False`` only the first and last samples are kept, which is
    enough for classification by the in-loop crossing counter.
    """
    if params is None:
        raise DomainError("integrate needs regime parameters")
    chart = ChartId(chart)
    controls = controls or Controls()
    thresholds = thresholds or Thresholds()
    if isinstance(direction, str):
        direction = {"forward": 1, "backward": -1}[direction]
    direction = 1 if direction > 0 else -1
    if hasattr(seed, "state"):
        y0 = np.array(seed.state, dtype=np.float64)
        if t0 is None:
            t0 = getattr(seed, "t0", None)
    else:
        y0 = np.array(seed, dtype=np.float64).reshape(-1)
    if y0.size != CHART_DIM[chart]:
        raise DomainError(f"seed has {y0.size} components, chart {chart.name} needs {CHART_DIM[chart]}")
    if not np.all(np.isfinite(y0)):
        raise DomainError("seed must be finite")
    if t0 is None:
        t0 = natural_start(chart, y0, params)
    span = controls.max_span
    if t_end is not None:
        span = min(span, abs(t_end - t0))
        if (t_end - t0) * direction < 0:
            raise DomainError("t_end lies behind the start for the requested direction")
    terms = frozenset(default_terminals(chart, direction) if terminals is None else terminals)
    tp = _threshold_vector(thresholds, terms)
    prm = param_vector(params, xi_min if xi_min is not None else 1e-8)
    st = np.zeros(core.N_STATE)
    h0 = core.initial_step(int(chart), prm, float(t0), y0, float(direction), span, controls.rtol, controls.atol)
    if h0 < 0:
        raise DomainError(f"seed is singular for chart {chart.name}")
    st[core.S_H] = h0
    st[core.S_FACOLD] = 1e-4

    cap = controls.buffer_rows if store else 4096
    n = y0.size
    chunks_t: list[np.ndarray] = []
    chunks_y: list[np.ndarray] = []
    chunks_f: list[np.ndarray] = []
    tau = 0.0
    y = y0
    first = True
    while True:
        out_t = np.empty(cap)
        out_y = np.empty((cap, n))
        out_f = np.empty((cap, n))
        status, rows, tau = core.dopri_run(
            int(chart), prm, float(t0), tau, y, float(direction), span,
            controls.rtol, controls.atol, controls.max_steps, tp, st, out_t, out_y, out_f,
        )
        # a refill repeats the last accepted row as its first row
        keep = slice(0 if first else 1, rows) if store else slice(0, 1) if first else slice(rows - 1, rows)
        if store or first or rows > 1:
            chunks_t.append(out_t[keep].copy())
            chunks_y.append(out_y[keep].copy())
            chunks_f.append(out_f[keep].copy())
        if not store and first and rows > 1:
            chunks_t.append(out_t[rows - 1 : rows].copy())
            chunks_y.append(out_y[rows - 1 : rows].copy())
            chunks_f.append(out_f[rows - 1 : rows].copy())
        y = out_y[rows - 1].copy()
        first = False
        if status != core.ST_BUFFER_FULL:
            break
    t = np.concatenate(chunks_t)
    states = np.concatenate(chunks_y)
    derivs = np.concatenate(chunks_f)
    if not store and t.size > 2:
        t, states, derivs = t[[0, -1]], states[[0, -1]], derivs[[0, -1]]

    if status in (core.ST_MAX_STEPS, core.ST_SINGULAR, core.ST_STEP_FAIL):
        terminal = Terminal.STEP_FAILURE
    else:
        terminal = Terminal(status)
    meta = {
        "status": int(status),
        "nsteps": int(st[core.S_NSTEPS]),
        "nfev": int(st[core.S_NFEV]),
        "nreject": int(st[core.S_NREJ]),
        "loop_crossings_Z0": int(st[core.S_NCROSS]),
        "terminals": sorted(t_.label for t_ in terms),
        "controls": controls.as_dict(),
        "thresholds": thresholds.as_dict(),
        "stored": bool(store),
        "span_used": float(tau),
    }
    traj = Trajectory(chart, params, t, states, derivs, (), terminal, direction, meta)
    if events and store:
        evs: list[Event] = []
        for spec in events:
            evs.extend(_find_events(traj, spec, params))
        evs.sort(key=lambda e: e.t * direction)
        traj = replace(traj, events=tuple(evs))
    return traj


def detect_terminal(
    traj: Trajectory,
    params: RegimeParams,
    thresholds: Thresholds | None = None,
    terminals: Iterable[Terminal] | None = None,
) -> Terminal:
    """Replay the terminal criteria along the stored samples.

    Returns the first criterion that fires, or ``Terminal.AMBIGUOUS`` if none does.
    """
    thresholds = thresholds or Thresholds()
    terms = default_terminals(traj.chart, traj.direction) if terminals is None else terminals
    tp = _threshold_vector(thresholds, terms)
    prm = param_vector(params)
    st = np.zeros(core.N_STATE)
    xyz = np.empty(3)
    dev = np.empty(2)
    for u in traj.states:
        code = core.check_terminal(int(traj.chart), np.ascontiguousarray(u), prm, tp, st, xyz, dev)
        if code != core.ST_RUNNING:
            return Terminal(code)
    return Terminal.AMBIGUOUS
