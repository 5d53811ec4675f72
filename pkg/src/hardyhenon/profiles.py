"""Self-similar profiles f(ξ): reconstruction, diagnostics and oracles.

A :class:`Profile` is built either from a phase-space trajectory (through the
inverse change of variables) or by integrating the profile equation directly
in ξ; the two routes are independent and are compared against each other.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .dynsys import ChartId
from .errors import DiscriminantNegative, DomainError
from .exponents import RegimeParams, profile_constants
from .integrator import (
    Controls,
    EventKind,
    EventSpec,
    Terminal,
    Thresholds,
    Trajectory,
    count_sign_changes,
    integrate,
)
from .local_analysis import f0_from_c

__all__ = [
    "Profile",
    "TailReport",
    "reconstruct_profile",
    "stationary_profile",
    "tail_constant",
    "count_stationary_intersections",
    "linear_zero_count",
    "direct_shoot_ssode",
    "evaluate_solution",
    "ssode_residual",
    "g_residual",
    "origin_series",
    "IDENTICAL_TOL",
]

IDENTICAL_TOL = 1e-9


@dataclass(frozen=True)
class Profile:
    """Samples (ξ, f, f′, f″) with ξ increasing, plus diagnostics."""

    params: RegimeParams
    xi: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    f0: float | None
    tail_K: float | None
    intersections: int
    monotone_decreasing: bool
    identical_to_stationary: bool = False
    reached_q1: bool = False
    terminal: str = ""
    source: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def decay_exponent(self) -> float:
        """(σ+2)/(p−1), the power in the tail ξ^(−(σ+2)/(p−1))."""
        return (self.params.sigma + 2.0) / (self.params.p - 1.0)

    @property
    def g(self) -> np.ndarray:
        """ξ^((σ+2)/(p−1)) f, which tends to the tail constant K."""
        return self.xi**self.decay_exponent * self.f

    def interior_maximum(self) -> bool:
        """True when f′ changes sign from + to − somewhere on the samples."""
        s = np.sign(self.fp)
        return bool(np.any((s[:-1] > 0) & (s[1:] < 0)))

    def to_csv(self, path) -> None:
        p = self.params
        with open(path, "w", newline="") as fh:
            fh.write(f"# N={p.N} sigma={p.sigma!r} p={p.p!r}\n")
            fh.write(f"# source={self.source} terminal={self.terminal}\n")
            fh.write(f"# f0={self.f0!r} K={self.tail_K!r} intersections={self.intersections}\n")
            w = csv.writer(fh)
            w.writerow(["xi", "f", "fprime", "g"])
            for row in zip(self.xi, self.f, self.fp, self.g):
                w.writerow([repr(float(v)) for v in row])


def _intersections(g: np.ndarray, C: float) -> tuple[int, bool]:
    if g.size and float(np.max(np.abs(g - C))) < IDENTICAL_TOL:
        return 0, True
    return count_sign_changes(g - C), False


def origin_series(f0: float, xi: np.ndarray | float, params: RegimeParams) -> tuple[np.ndarray, np.ndarray]:
    """Leading small-ξ behaviour of the profile with f(0) = f0: (f, f′).

    Combines the regular term α f0 ξ²/(2N) with the reaction term, which is
    f0^p ξ^(σ+2)/((σ+2)(N+σ)) at leading order (written in closed form for
    σ < 0, where it dominates).
    """
    N, s, p = params.N, params.sigma, params.p
    xi = np.asarray(xi, dtype=np.float64)
    lin = params.alpha * f0 / N
    if s < 0.0:
        base = f0 ** (1.0 - p) + (p - 1.0) * xi ** (s + 2.0) / ((N + s) * (s + 2.0))
        f = base ** (-1.0 / (p - 1.0)) + 0.5 * lin * xi * xi
        fp = -(xi ** (s + 1.0)) * base ** (-p / (p - 1.0)) / (N + s) + lin * xi
    else:
        f = f0 + 0.5 * lin * xi * xi - f0**p * xi ** (s + 2.0) / ((s + 2.0) * (N + s))
        fp = lin * xi - f0**p * xi ** (s + 1.0) / (N + s)
    return f, fp


def reconstruct_profile(
    traj: Trajectory,
    params: RegimeParams,
    f0: float | None = None,
    reached_q1: bool | None = None,
) -> Profile:
    """Invert the phase variables along a trajectory: (X, Y, Z) → (ξ, f, f′).

    f″ comes from the phase field at each sample (f″ = f(Y′ + Y² − Y)/ξ²), so
    the profile equation residual tests the change of variables sample by
    sample.  Without an explicit ``f0`` the origin value is extrapolated from
    the first sample when it lies near P0.
    """
    if traj.chart not in (ChartId.FULL_PHASE, ChartId.STAT_OFFSET):
        raise DomainError("reconstruct_profile needs a full phase-space trajectory")
    tr = traj.ascending()
    xyz = tr.phase()
    X, Y, Z = xyz[:, 0], xyz[:, 1], xyz[:, 2]
    if np.any(X <= 0.0):
        raise DomainError("trajectory has samples with X <= 0 (no finite xi)")
    if np.any(Z <= 0.0):
        raise DomainError("trajectory has samples with Z <= 0 (no positive profile)")
    p, s2 = params.p, params.sigma + 2.0
    a = params.alpha
    xi = np.sqrt(X / a)
    f = (X / a) ** (-s2 / (2.0 * (p - 1.0))) * Z ** (1.0 / (p - 1.0))
    fp = Y * f / xi
    dY = tr.derivs[:, 1]
    fpp = f * (dY + Y * Y - Y) / (xi * xi)
    if f0 is None and max(X[0], abs(Y[0]), Z[0]) < 1e-4:
        if params.sigma > 0.0:
            f0 = f0_from_c(Z[0] / X[0] ** (s2 / 2.0), params) / (1.0 + a * xi[0] ** 2 / (2.0 * params.N))
        elif params.sigma < 0.0:
            r = xi[0] ** s2
            k = (f[0] - 0.0) ** (1.0 - p) - (p - 1.0) * r / ((params.N + params.sigma) * s2)
            f0 = k ** (1.0 / (1.0 - p)) if k > 0.0 else None
    consts = profile_constants(params)
    g = xi ** (s2 / (p - 1.0)) * f
    nint, identical = _intersections(g, consts.C_sigma)
    if reached_q1 is None:
        reached_q1 = tr.terminal is Terminal.HIT_Q1
    tail = float(Z[-1] ** (1.0 / (p - 1.0))) if reached_q1 else None
    return Profile(
        params=params,
        xi=xi,
        f=f,
        fp=fp,
        fpp=fpp,
        f0=f0,
        tail_K=tail,
        intersections=nint,
        monotone_decreasing=bool(np.all(np.diff(f) < 0.0)),
        identical_to_stationary=identical,
        reached_q1=bool(reached_q1),
        terminal=tr.terminal.label,
        source="phase",
    )


def stationary_profile(params: RegimeParams, xi: np.ndarray) -> Profile:
    """The singular stationary profile C(σ) ξ^(−(σ+2)/(p−1)) on the given grid."""
    xi = np.asarray(xi, dtype=np.float64)
    if np.any(xi <= 0.0):
        raise DomainError("stationary profile needs xi > 0")
    C = profile_constants(params).C_sigma
    m = (params.sigma + 2.0) / (params.p - 1.0)
    f = C * xi ** (-m)
    fp = -m * f / xi
    fpp = m * (m + 1.0) * f / xi**2
    return Profile(params, xi, f, fp, fpp, None, C, 0, True, True, True, "HitQ1", "stationary")


@dataclass(frozen=True)
class TailReport:
    K: float
    K_decade_mean: float
    relative_gap: float
    derivative_limit: float
    derivative_values: np.ndarray
    derivative_converging: bool


def tail_constant(profile: Profile, params: RegimeParams) -> TailReport:
    """K = (last Z)^(1/(p−1)), its last-decade average and the derivative law.

    The derivative limit ξ^((σ+2)/(p−1)+1) f′ → −((σ+2)/(p−1)) K is reported
    with its sign; the values over the last decade must approach it
    monotonically.
    """
    if not profile.reached_q1:
        raise DomainError("tail_constant needs a profile whose orbit entered Q1")
    m = profile.decay_exponent
    xi, f, fp = profile.xi, profile.f, profile.fp
    K = float(xi[-1] ** m * f[-1])
    last = xi >= xi[-1] / 10.0
    if np.count_nonzero(last) < 2:
        last = np.ones_like(xi, dtype=bool)
    gm = float(np.mean(xi[last] ** m * f[last]))
    limit = -m * K
    h = xi[last] ** (m + 1.0) * fp[last]
    dist = np.abs(h - limit)
    converging = bool(np.all(np.diff(dist) <= 1e-12 * abs(limit))) if dist.size > 1 else True
    return TailReport(K, gm, abs(gm - K) / K, limit, h, converging)


def count_stationary_intersections(profile: Profile, params: RegimeParams) -> int:
    """Sign changes of ξ^((σ+2)/(p−1)) f − C(σ); 0 for the stationary profile itself."""
    n, _ = _intersections(profile.g, profile_constants(params).C_sigma)
    return n


def ssode_residual(profile: Profile, params: RegimeParams) -> np.ndarray:
    """Pointwise residual of the profile equation, scaled by max(1, |f″|)."""
    N, s, p = params.N, params.sigma, params.p
    xi, f, fp, fpp = profile.xi, profile.f, profile.fp, profile.fpp
    r = fpp + (N - 1.0) * fp / xi - 0.5 * xi * fp - params.alpha * f + xi**s * f**p
    return np.abs(r) / np.maximum(1.0, np.abs(fpp))


def g_residual(profile: Profile, params: RegimeParams) -> np.ndarray:
    """Residual of the equation for g(s) = ξ^((σ+2)/(p−1)) f(ξ), s = ln ξ, scaled."""
    c = profile_constants(params)
    p = params.p
    a2 = profile.decay_exponent
    xi, f, fp, fpp = profile.xi, profile.f, profile.fp, profile.fpp
    w = xi**a2
    g = w * f
    gs = w * (a2 * f + xi * fp)
    gss = w * (a2 * (a2 * f + xi * fp) + xi * ((a2 + 1.0) * fp + xi * fpp))
    r = gss + c.A * gs - c.B / (p - 1.0) * g + g**p - 0.5 * xi * xi * gs
    scale = np.maximum.reduce([np.ones_like(g), np.abs(gss), np.abs(c.A * gs), np.abs(g**p)])
    return np.abs(r) / scale


# ---------------------------------------------------------------------------
# oracles


def linear_zero_count(
    params: RegimeParams,
    K: float = 1.0,
    s_span: tuple[float, float] = (-40.0, 6.0),
    controls: Controls | None = None,
) -> int:
    """Zeros of the linearized tail equation y″ + Ay′ + By − ½e^{2s}y′ = 0.

    Starts at s_max with y = K, y′ = 2BK e^{−2 s_max} and integrates down to
    s_min, renormalising the (linear) solution in chunks to avoid overflow.
    """
    c = profile_constants(params)
    if c.A * c.A - 4.0 * c.B < 0.0:
        raise DiscriminantNegative("linear_zero_count needs A^2 >= 4B (p >= p_JL)")
    if not K > 0.0:
        raise DomainError("K must be positive")
    s_min, s_max = s_span
    controls = controls or Controls(rtol=1e-10, atol=1e-300)
    y = np.array([K, 2.0 * c.B * K * math.exp(-2.0 * s_max)])
    s = s_max
    signs: list[np.ndarray] = []
    zero_s: list[float] = []
    chunk = 2.0
    while s > s_min:
        s_next = max(s_min, s - chunk)
        tr = integrate(ChartId.LINEARIZED, y, -1, (), controls, params, t0=s, t_end=s_next, terminals=())
        if tr.terminal is not Terminal.SPAN_EXHAUSTED:
            raise DomainError(f"linearized integration failed: {tr.terminal.label}")
        vals = tr.states[:, 0]
        sg = np.sign(vals)
        change = np.nonzero((sg[:-1] * sg[1:]) < 0)[0]
        zero_s.extend(float(tr.t[i]) for i in change)
        signs.append(vals)
        y = tr.states[-1].copy()
        m = float(np.max(np.abs(y)))
        if m > 1e100 or m < 1e-100:
            y = y / m
        s = s_next
    n = 0
    prev = 0.0
    for vals in signs:
        for v in np.sign(vals):
            if v != 0.0:
                if prev != 0.0 and v != prev:
                    n += 1
                prev = v
    if zero_s and min(zero_s) < s_min + 1.0:
        warnings.warn("sign change within one unit of s_min: span may be too short", RuntimeWarning, stacklevel=2)
    return n


def direct_shoot_ssode(
    f0: float,
    params: RegimeParams,
    xi_span: tuple[float | None, float] = (None, 3.0),
    controls: Controls | None = None,
    thresholds: Thresholds | None = None,
) -> Profile:
    """Integrate the profile equation in ξ from the origin data f(0) = f0.

    Starts at ξ0 = 1e-4 (σ > 0) or 1e-6 (σ < 0) with the small-ξ series.  The
    terminal is "VanishAtXi0" (f reaches zero; ξ0 and the slope are stored in
    ``meta``), "decay" (f′ < 0 at the end) or "growth".
    """
    if not f0 > 0.0:
        raise DomainError("f0 must be positive")
    xi0 = xi_span[0]
    if xi0 is None:
        xi0 = 1e-4 if params.sigma >= 0.0 else 1e-6
    xi_end = xi_span[1]
    f, fp = origin_series(f0, np.array([xi0]), params)
    controls = controls or Controls(rtol=1e-12, atol=1e-14)
    vanish = EventSpec(EventKind.CUSTOM, "down", func=lambda t, u: u[0], name="f_zero")
    tr = integrate(
        ChartId.PROFILE_ODE,
        np.array([f[0], fp[0]]),
        1,
        [vanish],
        controls,
        params,
        t0=xi0,
        t_end=xi_end,
        thresholds=thresholds,
    )
    xi = tr.t
    vals = tr.states
    meta: dict = {"nsteps": tr.meta["nsteps"]}
    keep = vals[:, 0] > 0.0
    if tr.terminal is Terminal.VANISH_AT_XI0:
        ev = tr.events_of("f_zero")
        if ev:
            meta["xi0"] = float(ev[0].t)
            meta["slope"] = float(ev[0].state[1])
        terminal = "VanishAtXi0"
    elif tr.terminal is Terminal.BLOWUP:
        terminal = "growth"
    else:
        terminal = "decay" if vals[-1, 1] < 0.0 else "growth"
    xi, fv, fpv, fppv = xi[keep], vals[keep, 0], vals[keep, 1], tr.derivs[keep, 1]
    g = xi ** ((params.sigma + 2.0) / (params.p - 1.0)) * fv
    nint, identical = _intersections(g, profile_constants(params).C_sigma)
    return Profile(
        params=params,
        xi=xi,
        f=fv,
        fp=fpv,
        fpp=fppv,
        f0=float(f0),
        tail_K=None,
        intersections=nint,
        monotone_decreasing=bool(np.all(np.diff(fv) < 0.0)),
        identical_to_stationary=identical,
        reached_q1=False,
        terminal=terminal,
        source="direct",
        meta=meta,
    )


def evaluate_solution(profile: Profile, x_norm, t: float, T: float, params: RegimeParams):
    """u(x, t) = (T−t)^(−α) f(|x| (T−t)^(−1/2)).

    Cubic Hermite interpolation inside the sampled range, the tail law
    K ξ^(−(σ+2)/(p−1)) beyond it, and the origin series (or the constant
    f(0)) below the first sample.
    """
    if not t < T:
        raise DomainError("evaluate_solution needs t < T")
    x = np.asarray(x_norm, dtype=np.float64)
    if np.any(x < 0.0):
        raise DomainError("x_norm must be non-negative")
    tau = T - t
    xi = x / math.sqrt(tau)
    spline = CubicHermiteSpline(profile.xi, profile.f, profile.fp)
    out = np.empty_like(xi)
    inside = (xi >= profile.xi[0]) & (xi <= profile.xi[-1])
    out[inside] = spline(xi[inside])
    above = xi > profile.xi[-1]
    if np.any(above):
        K = profile.tail_K if profile.tail_K is not None else float(profile.g[-1])
        out[above] = K * xi[above] ** (-profile.decay_exponent)
    below = xi < profile.xi[0]
    if np.any(below):
        if profile.identical_to_stationary:
            C = profile_constants(params).C_sigma
            with np.errstate(divide="ignore"):
                out[below] = C * xi[below] ** (-profile.decay_exponent)
        elif profile.f0 is not None:
            out[below] = origin_series(profile.f0, xi[below], params)[0]
        else:
            out[below] = profile.f[0]
    u = tau ** (-params.alpha) * out
    return u if u.ndim else float(u)
