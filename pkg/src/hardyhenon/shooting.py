"""Shooting over one-parameter orbit families and bisection for connections.

Backward shooting (σ > 0) classifies the centre-manifold family C_k entering
Q1 by the number of crossings with {Z = Z0}.  Forward shooting (σ < 0)
classifies the unstable family of P0 by how it first leaves the strip
−(σ+2)/(p−1) < Y < 0.  Boundaries between labels are located by bisection,
then the connecting orbit is rebuilt by stitching a forward piece from P0 to
a backward piece from Q1 and matching them at X = X_match; the residual
mismatch is the verification measure.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .dynsys import ChartId, from_offset, to_offset
from .errors import BracketInvalid, DomainError
from .exponents import RegimeParams, profile_constants
from .integrator import (
    CROSSING_CAP,
    Controls,
    EventKind,
    EventSpec,
    Terminal,
    Thresholds,
    Trajectory,
    _find_events,
    count_sign_changes,
    detect_terminal,
    integrate,
)
from .local_analysis import c_from_f0, f0_from_c, seed_center_Q1, seed_unstable_P0
from .profiles import Profile, reconstruct_profile

__all__ = [
    "ShootingConfig",
    "ShotOutcome",
    "Candidate",
    "backward_label",
    "classify_backward",
    "sweep_backward",
    "backward_grid",
    "find_brackets",
    "find_k_star",
    "multiplicity_search",
    "classify_forward",
    "sweep_forward",
    "forward_grid",
    "find_forward_brackets",
    "bisect_forward",
    "cylinder_slack",
    "write_sweep_csv",
    "CROSSING_CAP",
]



@dataclass(frozen=True)
class ShootingConfig:
    """Numerical settings shared by sweeps, bisection and verification."""

    seed_x0: float = 1e4
    controls: Controls = field(default_factory=lambda: Controls(rtol=1e-10, atol=1e-300))
    thresholds: Thresholds = field(default_factory=Thresholds)
    grid: int = 256
    k_lo_frac: float = 1e-3
    k_hi_frac: float = 1.0 - 1e-3
    f0_lo: float = 1e-3
    f0_hi: float = 1e3
    p0_eps: float = 1e-9
    x_match: float = 1.0
    bisect_rtol: float = 1e-13
    max_bisect: int = 60
    match_tol: float = 1e-6
    workers: int = 1

    def tightened(self, factor: float = 10.0) -> "ShootingConfig":
        return replace(self, controls=self.controls.tightened(factor))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["controls"] = self.controls.as_dict()
        d["thresholds"] = self.thresholds.as_dict()
        return d


@dataclass(frozen=True)
class ShotOutcome:
    """Classification of one member of an orbit family."""

    family_parameter: float
    crossings_Z0: int
    origin: Terminal
    set_label: str
    mode: str
    eta_span_used: float
    many: bool = False
    ambiguous: bool = False
    trajectory: Trajectory | None = None

    def as_row(self) -> dict:
        return {
            "family_parameter": repr(float(self.family_parameter)),
            "set_label": self.set_label,
            "crossings_Z0": self.crossings_Z0,
            "terminal": self.origin.label,
            "eta_span_used": repr(float(self.eta_span_used)),
        }


@dataclass(frozen=True)
class Candidate:
    """A located connection P0 → Q1 with its stitched orbit and profile."""

    family_parameter: float
    bracket: tuple[float, float]
    bracket_width: float
    crossings: int
    level: int
    origin: Terminal
    labels: tuple[str, str]
    f0: float
    tail_K: float
    mismatch_Y: float
    mismatch_Z: float
    verified: bool
    trajectory: Trajectory
    profile: Profile
    notes: tuple[str, ...] = ()

    def summary(self) -> dict:
        return {
            "family_parameter": self.family_parameter,
            "bracket": list(self.bracket),
            "bracket_width": self.bracket_width,
            "crossings": self.crossings,
            "level": self.level,
            "origin": self.origin.label,
            "labels": list(self.labels),
            "f0": self.f0,
            "tail_K": self.tail_K,
            "mismatch_Y": self.mismatch_Y,
            "mismatch_Z": self.mismatch_Z,
            "verified": self.verified,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# backward shooting on the centre manifold of Q1


def backward_label(crossings: int, origin: Terminal, level: int = 1) -> str:
    """U: exactly 2·level crossings and origin Q2; W: at least 2·level+1; V otherwise."""
    if crossings >= 2 * level + 1:
        return "W"
    if crossings == 2 * level and origin is Terminal.ESCAPE_Q2:
        return "U"
    return "V"


def _check_backward(k: float, params: RegimeParams) -> None:
    if params.sigma <= 0.0:
        raise DomainError("backward shooting on the centre manifold needs sigma > 0")
    Z0 = profile_constants(params).Z0
    if not 0.0 < k < Z0:
        raise DomainError(f"k must lie in (0, Z0) = (0, {Z0})")


def _backward_run(k: float, params: RegimeParams, cfg: ShootingConfig, store: bool, t_end: float | None = None) -> Trajectory:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        seed = seed_center_Q1(k, cfg.seed_x0, params)
    events = [EventSpec(EventKind.CROSS_Z0)] if store else []
    return integrate(
        ChartId.STAT_OFFSET,
        seed.offset_state,
        -1,
        events,
        cfg.controls,
        params,
        t0=seed.t0,
        t_end=t_end,
        thresholds=cfg.thresholds,
        store=store,
    )


def classify_backward(
    k: float,
    params: RegimeParams,
    cfg: ShootingConfig | None = None,
    level: int = 1,
    store: bool = False,
) -> ShotOutcome:
    """Integrate C_k backward from Q1 and label it by its Z = Z0 crossings."""
    cfg = cfg or ShootingConfig()
    _check_backward(k, params)
    tr = _backward_run(k, params, cfg, store)
    n = tr.meta["loop_crossings_Z0"]
    ambiguous = tr.terminal in (Terminal.SPAN_EXHAUSTED, Terminal.STEP_FAILURE, Terminal.AMBIGUOUS)
    label = "V" if ambiguous else backward_label(n, tr.terminal, level)
    return ShotOutcome(
        family_parameter=float(k),
        crossings_Z0=min(n, CROSSING_CAP),
        origin=tr.terminal,
        set_label=label,
        mode="backward",
        eta_span_used=tr.meta["span_used"],
        many=n > CROSSING_CAP,
        ambiguous=ambiguous,
        trajectory=tr if store else None,
    )


def backward_grid(params: RegimeParams, cfg: ShootingConfig) -> np.ndarray:
    Z0 = profile_constants(params).Z0
    return np.linspace(cfg.k_lo_frac * Z0, cfg.k_hi_frac * Z0, cfg.grid)


def _classify_backward_task(args):
    k, params, cfg = args
    return classify_backward(k, params, cfg)


def _classify_forward_task(args):
    f0, params, cfg = args
    return classify_forward(f0, params, cfg)


def _map(task, items, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [task(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(task, items, chunksize=max(1, len(items) // (4 * workers))))


def sweep_backward(params: RegimeParams, cfg: ShootingConfig | None = None, grid: np.ndarray | None = None) -> list[ShotOutcome]:
    """Classify C_k over a k grid (default: cfg.grid uniform points in (0, Z0))."""
    cfg = cfg or ShootingConfig()
    ks = backward_grid(params, cfg) if grid is None else np.asarray(grid, dtype=float)
    return _map(_classify_backward_task, [(float(k), params, cfg) for k in ks], cfg.workers)


def find_brackets(outcomes: list[ShotOutcome], level: int = 1, above: float = 0.0) -> list[tuple[float, float]]:
    """Adjacent grid pairs (k_a < k_b) with k_a in U and k_b in W at ``level``."""
    rows = sorted((o for o in outcomes if o.family_parameter > above), key=lambda o: o.family_parameter)
    out = []
    for a, b in zip(rows[:-1], rows[1:]):
        la = backward_label(a.crossings_Z0, a.origin, level)
        lb = backward_label(b.crossings_Z0, b.origin, level)
        if la == "U" and lb == "W" and not a.ambiguous:
            out.append((a.family_parameter, b.family_parameter))
    return out


def _eta_of(X: float, params: RegimeParams) -> float:
    return 0.5 * math.log(X / params.alpha)


def _as_full(tr: Trajectory, params: RegimeParams) -> Trajectory:
    """Re-express an offset-chart trajectory in the full phase chart."""
    if tr.chart is ChartId.FULL_PHASE:
        return tr
    evs = tuple(replace(e, state=from_offset(e.state, params)) for e in tr.events)
    return replace(tr, chart=ChartId.FULL_PHASE, states=from_offset(tr.states, params), events=evs)


def _join(first: Trajectory, second: Trajectory, params: RegimeParams, terminal: Terminal, direction: int, meta: dict) -> Trajectory:
    """Concatenate two full-chart pieces on a common η axis and relocate the events."""
    a, b = first.ascending(), second.ascending()
    t = np.concatenate([a.t, b.t])
    states = np.concatenate([a.states, b.states])
    derivs = np.concatenate([a.derivs, b.derivs])
    order = np.argsort(t, kind="stable")
    t, states, derivs = t[order], states[order], derivs[order]
    # the pieces meet at X_match; keep one sample there
    keep = np.concatenate([[True], np.diff(t) > 1e-9 * np.maximum(1.0, np.abs(t[1:]))])
    tr = Trajectory(ChartId.FULL_PHASE, params, t[keep], states[keep], derivs[keep], (), terminal, 1, meta)
    evs = []
    for spec in (EventSpec(EventKind.CROSS_Z0), EventSpec(EventKind.CROSS_Y_ZERO), EventSpec(EventKind.CROSS_Y_STAT)):
        evs.extend(_find_events(tr, spec, params))
    evs.sort(key=lambda e: e.t)
    tr = replace(tr, events=tuple(evs))
    if direction < 0:
        tr = replace(tr, t=tr.t[::-1].copy(), states=tr.states[::-1].copy(), derivs=tr.derivs[::-1].copy(),
                     events=tuple(reversed(tr.events)), direction=-1)
    return tr


def _forward_piece(family: float, params: RegimeParams, cfg: ShootingConfig, eta_end: float, store: bool = True,
                   terminals=(Terminal.ESCAPE_Q2, Terminal.ESCAPE_Q3)):
    """Orbit of the unstable manifold of P0 up to η = eta_end, in the full chart.

    Near P0 the value of Z is tiny, so it is integrated in the full chart,
    which keeps its relative precision there.
    """
    seed = seed_unstable_P0(family, cfg.p0_eps, params)
    tr = integrate(
        ChartId.FULL_PHASE,
        seed.state,
        1,
        (),
        cfg.controls,
        params,
        t0=seed.t0,
        t_end=eta_end,
        thresholds=cfg.thresholds,
        terminals=terminals,
        store=store,
    )
    return seed, tr


def _backward_piece(k: float, params: RegimeParams, cfg: ShootingConfig, eta_end: float, store: bool = True) -> Trajectory:
    """C_k from its centre-manifold seed down to η = eta_end, in the offset chart."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = seed_center_Q1(k, cfg.seed_x0, params)
    return integrate(
        ChartId.STAT_OFFSET, s.offset_state, -1, (), cfg.controls, params,
        t0=s.t0, t_end=eta_end, thresholds=cfg.thresholds,
        terminals=(Terminal.ESCAPE_Q2, Terminal.ESCAPE_Q3), store=store,
    )


def _match_1d(end_yz, target: np.ndarray, xs: np.ndarray) -> float:
    """Parameter x at which the end point (Y, Z) = end_yz(x) meets ``target``.

    Roots of the Y and of the Z difference are located on the grid xs
    (brentq refinement, NaN values skipped), and the root with the smallest
    combined relative mismatch wins.  Using both components keeps the match
    well posed where one of them is stationary in x.
    """
    scale = np.maximum(1.0, np.abs(target))
    vals = np.array([end_yz(x) for x in xs])
    roots = []
    for j in (0, 1):
        def F(x, j=j):
            return float(end_yz(x)[j] - target[j])

        d = vals[:, j] - target[j]
        for i in range(xs.size - 1):
            if np.isfinite(d[i]) and np.isfinite(d[i + 1]) and d[i] * d[i + 1] < 0.0:
                roots.append(brentq(F, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200))
            elif d[i] == 0.0:
                roots.append(float(xs[i]))
    if not roots:
        raise DomainError("no orbit of the family meets the other piece at X_match")
    score = [float(np.max(np.abs(end_yz(r) - target) / scale)) for r in roots]
    return roots[int(np.argmin(score))]


def _mismatch(full_end: np.ndarray, off_end: np.ndarray, params: RegimeParams) -> tuple[float, float]:
    """Relative (Y, Z) mismatch between a full-chart and an offset-chart state at the same η."""
    Z0 = profile_constants(params).Z0
    ys = params.y_stat
    return (abs(full_end[1] - (ys + off_end[1])) / max(1.0, abs(ys)),
            abs(full_end[2] - (Z0 + off_end[2])) / max(1.0, Z0))


def _origin_of(tr: Trajectory, params: RegimeParams, cfg: ShootingConfig) -> Terminal:
    a = tr.ascending()
    rev = replace(a, t=a.t[::-1], states=a.states[::-1], derivs=a.derivs[::-1], direction=-1)
    return detect_terminal(rev, params, cfg.thresholds, terminals=(Terminal.HIT_P0,))


def _reliable_eta(lo: float, hi: float, params: RegimeParams, cfg: ShootingConfig, tol: float = 1e-8) -> float:
    """Smallest η down to which the C_k orbits at both bracket ends still agree.

    Below it the shadowing of the connection is lost to the finite bracket
    width, so the stitch has to happen above it.
    """
    ta = _backward_run(lo, params, cfg, store=True)
    tb = _backward_run(hi, params, cfg, store=True)
    grid, d = _divergence(ta, tb)
    bad = np.nonzero(d > tol)[0]
    return float(grid[bad[-1]]) if bad.size else float(grid[0])


def _divergence(ta: Trajectory, tb: Trajectory, n: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Relative (Y, Z) distance of two orbits of the same chart on a common η grid."""
    ta, tb = ta.ascending(), tb.ascending()
    t0, t1 = max(ta.t[0], tb.t[0]), min(ta.t[-1], tb.t[-1])
    grid = np.linspace(t0, t1, n)
    ya = np.array([ta.interpolate(t) for t in grid])
    yb = np.array([tb.interpolate(t) for t in grid])
    return grid, np.max(np.abs(ya[:, 1:] - yb[:, 1:]) / (1.0 + np.abs(ya[:, 1:])), axis=1)


def _connect_backward(k: float, params: RegimeParams, cfg: ShootingConfig, eta_m: float):
    """Forward piece from P0 meeting C_k at η = eta_m."""
    bwd = _backward_piece(k, params, cfg, eta_m)
    if bwd.terminal is not Terminal.SPAN_EXHAUSTED:
        raise DomainError(f"backward piece stopped before X_match ({bwd.terminal.label})")
    target = from_offset(bwd.states[-1], params)[1:]

    def end_yz(logf0: float) -> np.ndarray:
        _, fw = _forward_piece(c_from_f0(math.exp(logf0), params), params, cfg, eta_m, store=False)
        if fw.terminal is not Terminal.SPAN_EXHAUSTED:
            return np.array([math.nan, math.nan])
        return fw.states[-1, 1:].copy()

    r = _match_1d(end_yz, target, np.linspace(math.log(cfg.f0_lo), math.log(cfg.f0_hi), 241))
    C = c_from_f0(math.exp(r), params)
    _, fwd = _forward_piece(C, params, cfg, eta_m)
    my, mz = _mismatch(fwd.states[-1], bwd.states[-1], params)
    return fwd, bwd, C, my, mz


def find_k_star(
    bracket: tuple[float, float],
    params: RegimeParams,
    cfg: ShootingConfig | None = None,
    level: int = 1,
) -> Candidate:
    """Bisect a U/W bracket to the boundary k and rebuild the connecting orbit."""
    cfg = cfg or ShootingConfig()
    a, b = float(bracket[0]), float(bracket[1])
    oa = classify_backward(a, params, cfg, level)
    ob = classify_backward(b, params, cfg, level)
    labels = {oa.set_label, ob.set_label}
    if labels != {"U", "W"}:
        raise BracketInvalid(f"bracket endpoints carry labels {oa.set_label} and {ob.set_label}, need U and W")
    lo, hi = (a, b) if oa.set_label == "U" else (b, a)
    Z0 = profile_constants(params).Z0
    it = 0
    while abs(hi - lo) > cfg.bisect_rtol * Z0 and it < cfg.max_bisect:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if classify_backward(mid, params, cfg, level).set_label == "W":
            hi = mid
        else:
            lo = mid
        it += 1
    k = lo
    # stitch at X_match, or higher where the bracket no longer resolves the orbit
    eta_m = max(_eta_of(cfg.x_match, params), _reliable_eta(lo, hi, params, cfg) + 0.5)
    fwd, bwd, C, my, mz = _connect_backward(k, params, cfg, eta_m)
    stitched = _join(fwd, _as_full(bwd, params), params, Terminal.HIT_P0, 1,
                     {"stitched": True, "eta_match": eta_m, "x_match": params.alpha * math.exp(2.0 * eta_m), "k": k, "C": C})
    origin = _origin_of(stitched, params, cfg)
    f0 = f0_from_c(C, params)
    prof = reconstruct_profile(stitched, params, f0=f0, reached_q1=True)
    crossings = len(stitched.events_of(EventKind.CROSS_Z0))
    prof = replace(prof, tail_K=k ** (1.0 / (params.p - 1.0)))
    notes = []
    if crossings != 2 * level:
        notes.append(f"stitched orbit crosses Z=Z0 {crossings} times, expected {2 * level}")
    verified = my <= cfg.match_tol and origin is Terminal.HIT_P0 and crossings == 2 * level
    return Candidate(
        family_parameter=k,
        bracket=(min(lo, hi), max(lo, hi)),
        bracket_width=abs(hi - lo),
        crossings=crossings,
        level=level,
        origin=origin,
        labels=("U", "W"),
        f0=f0,
        tail_K=k ** (1.0 / (params.p - 1.0)),
        mismatch_Y=float(my),
        mismatch_Z=float(mz),
        verified=bool(verified),
        trajectory=stitched,
        profile=prof,
        notes=tuple(notes),
    )


def multiplicity_search(
    max_k: int,
    params: RegimeParams,
    cfg: ShootingConfig | None = None,
    outcomes: list[ShotOutcome] | None = None,
) -> list[Candidate]:
    """Locate k1 < k2 < ... with 2, 4, ... crossings of {Z = Z0}.

    Level i looks for the first U_i/W_i bracket above k_(i−1), where U_i has
    exactly 2i crossings and origin Q2 and W_i has at least 2i+1.  The
    default grid adds log-spaced points near k = 0, where the low-level
    boundaries sit when σ is large.  Stops at the first level without a
    bracket.
    """
    cfg = cfg or ShootingConfig()
    if max_k <= 0:
        return []
    if outcomes is None:
        Z0 = profile_constants(params).Z0
        grid = np.union1d(backward_grid(params, cfg), Z0 * np.geomspace(1e-6, cfg.k_lo_frac, 32))
        outcomes = sweep_backward(params, cfg, grid)
    found: list[Candidate] = []
    above = 0.0
    for level in range(1, max_k + 1):
        br = find_brackets(outcomes, level, above)
        if not br:
            break
        cand = find_k_star(br[0], params, cfg, level)
        found.append(cand)
        above = cand.family_parameter
    return found


# ---------------------------------------------------------------------------
# forward shooting from P0 (σ < 0)


def _check_forward(f0: float, params: RegimeParams) -> None:
    if not -2.0 < params.sigma < 0.0:
        raise DomainError("forward strip shooting needs sigma in (-2, 0)")
    if not f0 > 0.0:
        raise DomainError("f0 must be positive")


_FORWARD_TERMINALS = (
    Terminal.STRIP_EXIT,
    Terminal.HIT_Q1,
    Terminal.ESCAPE_Q2,
    Terminal.ESCAPE_Q3,
    Terminal.ESCAPE_Q5,
)


def _forward_run(f0: float, params: RegimeParams, cfg: ShootingConfig, store: bool):
    """l_C forward in two stages: full chart near P0, offset chart afterwards.

    The full chart keeps the relative precision of the tiny Z values near P0;
    the offset chart keeps that of the deviation from the stationary line.
    The hand-over happens at the first sample with Z ≥ Z0/2 (or at X_match if
    Z stays below).  The result is expressed in the full chart.
    """
    eta_m = _eta_of(cfg.x_match, params)
    Z0 = profile_constants(params).Z0
    seed, first = _forward_piece(f0, params, cfg, eta_m, True, terminals=_FORWARD_TERMINALS)
    high = np.nonzero(first.states[:, 2] >= 0.5 * Z0)[0]
    if high.size and high[0] < first.n - 1:
        i = int(high[0])
        first = replace(first, t=first.t[: i + 1], states=first.states[: i + 1], derivs=first.derivs[: i + 1])
        first_done = False
    else:
        first_done = first.terminal is not Terminal.SPAN_EXHAUSTED
    # crossings in the first stage, counted from the samples (Z stays below Z0 there)
    n = count_sign_changes(first.states[:, 2] - Z0)
    span = abs(first.t[-1] - first.t[0])
    if first_done:
        meta = {**first.meta, "crossings": n, "span_used": span}
        tr = _join(first, first, params, first.terminal, 1, meta) if store else replace(first, meta=meta)
        return seed, tr
    second = integrate(
        ChartId.STAT_OFFSET,
        to_offset(first.states[-1], params),
        1,
        (),
        cfg.controls,
        params,
        t0=float(first.t[-1]),
        thresholds=cfg.thresholds,
        terminals=_FORWARD_TERMINALS,
        store=store,
    )
    n += second.meta["loop_crossings_Z0"]
    meta = {**second.meta, "crossings": n, "span_used": span + second.meta["span_used"]}
    if store:
        tr = _join(first, _as_full(second, params), params, second.terminal, 1, meta)
    else:
        tr = replace(_as_full(second, params), meta=meta)
    return seed, tr


def classify_forward(
    f0: float,
    params: RegimeParams,
    cfg: ShootingConfig | None = None,
    store: bool = False,
) -> ShotOutcome:
    """Label l_C (f(0) = f0) by its first exit from the strip.

    A: exit through Y = −(σ+2)/(p−1) (Y decreasing); C: exit through Y = 0
    (Y increasing), including seeds already at Y ≥ 0; B: the strip criterion
    for Q1 fires first.  Other terminals give an ambiguous V label.
    """
    cfg = cfg or ShootingConfig()
    _check_forward(f0, params)
    seed, tr = _forward_run(f0, params, cfg, store)
    n = tr.meta["crossings"]
    ambiguous = False
    if seed.pre_exit:
        label = "C"
    elif tr.terminal is Terminal.STRIP_EXIT:
        Y_end = tr.states[-1, 1]
        dY = tr.derivs[-1, 1]
        if Y_end <= params.y_stat:
            label = "A" if dY < 0.0 else "V"
        else:
            label = "C" if dY > 0.0 else "V"
        ambiguous = label == "V"
    elif tr.terminal is Terminal.HIT_Q1:
        label = "B"
    else:
        label, ambiguous = "V", True
    return ShotOutcome(
        family_parameter=float(f0),
        crossings_Z0=min(n, CROSSING_CAP),
        origin=tr.terminal,
        set_label=label,
        mode="forward",
        eta_span_used=tr.meta["span_used"],
        many=n > CROSSING_CAP,
        ambiguous=ambiguous,
        trajectory=tr if store else None,
    )


def forward_grid(cfg: ShootingConfig) -> np.ndarray:
    return np.geomspace(cfg.f0_lo, cfg.f0_hi, cfg.grid)


def sweep_forward(params: RegimeParams, cfg: ShootingConfig | None = None, grid: np.ndarray | None = None) -> list[ShotOutcome]:
    """Classify l_C over a log grid of f(0) (default [1e-3, 1e3], cfg.grid points)."""
    cfg = cfg or ShootingConfig()
    fs = forward_grid(cfg) if grid is None else np.asarray(grid, dtype=float)
    return _map(_classify_forward_task, [(float(f), params, cfg) for f in fs], cfg.workers)


def find_forward_brackets(outcomes: list[ShotOutcome]) -> list[tuple[float, float]]:
    """Adjacent grid pairs whose labels are A and C (in either order)."""
    rows = sorted(outcomes, key=lambda o: o.family_parameter)
    return [
        (a.family_parameter, b.family_parameter)
        for a, b in zip(rows[:-1], rows[1:])
        if {a.set_label, b.set_label} == {"A", "C"}
    ]


def cylinder_slack(tr: Trajectory, params: RegimeParams) -> float:
    """min of Z + (N−2)Y + Y² over samples with Y in [−(σ+2)/(p−1), 0].

    In the offset chart it is evaluated in deviation variables, where the
    constant part cancels exactly: Z + (N−2)Y + Y² = v + (N−2+2·Y_stat)u + u²
    with u = Y − Y_stat, v = Z − Z0.  Returns +inf if no sample lies in the strip.
    """
    if tr.chart is not ChartId.STAT_OFFSET:
        xyz = tr.phase()
        Y, Z = xyz[:, 1], xyz[:, 2]
        mask = (Y >= params.y_stat) & (Y <= 0.0)
        val = Z + (params.N - 2.0) * Y + Y * Y
    else:
        u, v = tr.states[:, 1], tr.states[:, 2]
        ys = params.y_stat
        Y = ys + u
        mask = (u >= 0.0) & (Y <= 0.0)
        val = v + (params.N - 2.0 + 2.0 * ys) * u + u * u
    return float(np.min(val[mask])) if np.any(mask) else math.inf


def bisect_forward(
    bracket: tuple[float, float],
    params: RegimeParams,
    cfg: ShootingConfig | None = None,
) -> Candidate:
    """Bisect an A/C bracket in log f(0) and rebuild the connection P0 → Q1.

    The boundary orbit is followed forward to X_match and matched to the
    centre-manifold orbit C_k of Q1 by solving for k; the stitched orbit must
    pass the strip criterion and the cylinder barrier.
    """
    cfg = cfg or ShootingConfig()
    a, b = float(bracket[0]), float(bracket[1])
    oa = classify_forward(a, params, cfg)
    ob = classify_forward(b, params, cfg)
    if {oa.set_label, ob.set_label} != {"A", "C"}:
        raise BracketInvalid(f"bracket endpoints carry labels {oa.set_label} and {ob.set_label}, need A and C")
    la, lb = math.log(a), math.log(b)
    lab_a = oa.set_label
    it = 0
    while abs(lb - la) > cfg.bisect_rtol and it < cfg.max_bisect:
        mid = 0.5 * (la + lb)
        if mid in (la, lb):
            break
        if classify_forward(math.exp(mid), params, cfg).set_label == lab_a:
            la = mid
        else:
            lb = mid
        it += 1
    f0 = math.exp(la)
    Z0 = profile_constants(params).Z0
    # stitch at X_match, or lower if the bracket ends separate before it
    _, ta = _forward_run(f0, params, cfg, store=True)
    _, tb = _forward_run(math.exp(lb), params, cfg, store=True)
    grid, d = _divergence(ta, tb)
    bad = np.nonzero(d > 1e-8)[0]
    eta_m = _eta_of(cfg.x_match, params)
    if bad.size:
        eta_m = min(eta_m, float(grid[bad[0]]) - 0.5)
    seed, fwd = _forward_piece(f0, params, cfg, eta_m)
    if fwd.terminal is not Terminal.SPAN_EXHAUSTED:
        raise DomainError(f"forward piece stopped before X_match ({fwd.terminal.label})")
    target = fwd.states[-1, 1:].copy()

    def end_yz(logk: float) -> np.ndarray:
        tr = _backward_piece(math.exp(logk), params, cfg, eta_m, store=False)
        if tr.terminal is not Terminal.SPAN_EXHAUSTED:
            return np.array([math.nan, math.nan])
        return from_offset(tr.states[-1], params)[1:]

    grid = math.log(Z0) + np.linspace(math.log(1e-3), math.log(1e3), 97)
    r = _match_1d(end_yz, target, grid[np.abs(grid - math.log(Z0)) > 1e-12])
    k = math.exp(r)
    bwd = _backward_piece(k, params, cfg, eta_m)
    my, mz = _mismatch(fwd.states[-1], bwd.states[-1], params)
    stitched = _join(fwd, _as_full(bwd, params), params, Terminal.HIT_Q1, 1,
                     {"stitched": True, "eta_match": eta_m, "x_match": params.alpha * math.exp(2.0 * eta_m), "k": k})
    origin = _origin_of(stitched, params, cfg)
    strip = detect_terminal(stitched, params, cfg.thresholds, terminals=_FORWARD_TERMINALS)
    slack = cylinder_slack(stitched, params)
    stitched = replace(stitched, terminal=strip, meta={**stitched.meta, "origin": origin.label, "cylinder_slack": slack})
    prof = reconstruct_profile(stitched, params, f0=f0, reached_q1=strip is Terminal.HIT_Q1)
    prof = replace(prof, tail_K=k ** (1.0 / (params.p - 1.0)))
    notes = (f"cylinder slack {slack:.3e}", f"Q1 limit k = {k!r}")
    verified = my <= cfg.match_tol and strip is Terminal.HIT_Q1 and slack >= -1e-8 and origin is Terminal.HIT_P0
    return Candidate(
        family_parameter=f0,
        bracket=(math.exp(min(la, lb)), math.exp(max(la, lb))),
        bracket_width=abs(math.exp(lb) - math.exp(la)),
        crossings=len(stitched.events_of(EventKind.CROSS_Z0)),
        level=1,
        origin=origin,
        labels=("A", "C"),
        f0=f0,
        tail_K=k ** (1.0 / (params.p - 1.0)),
        mismatch_Y=float(my),
        mismatch_Z=float(mz),
        verified=bool(verified),
        trajectory=stitched,
        profile=prof,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# outputs


def write_sweep_csv(outcomes: list[ShotOutcome], path) -> None:
    cols = ["family_parameter", "set_label", "crossings_Z0", "terminal", "eta_span_used"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for o in outcomes:
            w.writerow(o.as_row())


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return repr(o)
    return str(o)
