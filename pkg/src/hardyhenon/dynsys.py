"""Vector fields of every coordinate system and the transforms between them.

All right-hand sides live in a single compiled function, :func:`field_rhs`,
dispatched on an integer chart id.  The integrator core calls it directly and
:func:`eval_field` wraps it for Python callers, so there is exactly one
implementation of each system.

Phase variables (independent variable η = ln ξ)::

    X = (σ+2) ξ² / (2(p−1)),   Y = ξ f′/f,   Z = ξ^(σ+2) f^(p−1)

Besides the systems of the analysis there is one computational chart,
``STAT_OFFSET``, holding (X, u, v) = (X, Y − Y_stat, Z − Z0).  It is an exact
affine change of the full phase system in which the stationary line is the
axis u = v = 0; integrating there keeps full relative precision for orbits
that pass extremely close to the stationary point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .errors import DomainError, SingularityError
from .exponents import RegimeParams, p_sobolev

__all__ = [
    "ChartId",
    "CHART_DIM",
    "PhasePoint",
    "ProfileState",
    "DEFAULT_XI_MIN",
    "param_vector",
    "field_rhs",
    "eval_field",
    "to_phase",
    "from_phase",
    "chart_x",
    "chart_y",
    "to_offset",
    "from_offset",
    "phase_of_states",
    "dulac_divergence",
]

DEFAULT_XI_MIN = 1e-8


class ChartId(IntEnum):
    FULL_PHASE = 0
    PROFILE_ODE = 1
    INF_X = 2
    INF_Y_PLUS = 3
    INF_Y_MINUS = 4
    PLANE_X0 = 5
    PLANE_Z0 = 6
    W_PLANE = 7
    G_EQUATION = 8
    LINEARIZED = 9
    STAT_OFFSET = 10


CHART_DIM = {
    ChartId.FULL_PHASE: 3,
    ChartId.PROFILE_ODE: 2,
    ChartId.INF_X: 3,
    ChartId.INF_Y_PLUS: 3,
    ChartId.INF_Y_MINUS: 3,
    ChartId.PLANE_X0: 2,
    ChartId.PLANE_Z0: 2,
    ChartId.W_PLANE: 2,
    ChartId.G_EQUATION: 2,
    ChartId.LINEARIZED: 2,
    ChartId.STAT_OFFSET: 3,
}

# Layout of the parameter vector handed to compiled code.
I_N, I_SIGMA, I_P, I_YS, I_Z0, I_Q, I_A, I_B, I_ALPHA, I_XIMIN = range(10)


def param_vector(params: RegimeParams, xi_min: float = DEFAULT_XI_MIN) -> np.ndarray:
    """Pack (N, σ, p) and the derived constants used by the fields."""
    N, s, p = float(params.N), params.sigma, params.p
    z0 = (s + 2.0) * ((N - 2.0) * p - (N + s)) / (p - 1.0) ** 2
    A = N - 2.0 - 2.0 * (s + 2.0) / (p - 1.0)
    B = (s + 2.0) * (N - 2.0 - (s + 2.0) / (p - 1.0))
    return np.array(
        [N, s, p, -(s + 2.0) / (p - 1.0), z0, (p - 1.0) / (s + 2.0), A, B, params.alpha, xi_min],
        dtype=np.float64,
    )


@njit(cache=True)
def _signed_pow(f, e):
    # |f|^e * sign(f): keeps odd-like behaviour for non-integer p
    if f >= 0.0:
        return f**e
    return -((-f) ** e)


@njit(cache=True)
def field_rhs(chart, t, u, prm, out):
    """Evaluate the right-hand side of ``chart`` at (t, u) into ``out``.

    Returns 0 on success and 1 when the point is singular for the chart
    (ProfileODE at ξ ≤ 0, or ξ < ξ_min with σ < 0).
    """
    N = prm[0]
    s = prm[1]
    p = prm[2]
    ys = prm[3]
    z0 = prm[4]
    q = prm[5]
    if chart == 0:  # full phase system
        X = u[0]
        Y = u[1]
        Z = u[2]
        out[0] = 2.0 * X
        out[1] = X - (N - 2.0) * Y - Z - Y * Y + q * X * Y
        out[2] = Z * (s + 2.0 + (p - 1.0) * Y)
    elif chart == 10:  # (X, Y - Y_stat, Z - Z0)
        X = u[0]
        du = u[1]
        dv = u[2]
        out[0] = 2.0 * X
        out[1] = (-(N - 2.0) - 2.0 * ys + q * X) * du - dv - du * du
        out[2] = (dv + z0) * (p - 1.0) * du
    elif chart == 1:  # profile equation in xi
        xi = t
        if xi <= 0.0 or (s < 0.0 and xi < prm[9]):
            return 1
        f = u[0]
        fp = u[1]
        out[0] = fp
        out[1] = -(N - 1.0) / xi * fp + 0.5 * xi * fp + prm[8] * f - xi**s * _signed_pow(f, p)
    elif chart == 2:  # chart at infinity projected on X
        x = u[0]
        y = u[1]
        z = u[2]
        out[0] = -2.0 * x * x
        out[1] = -y * y + q * y + x - N * x * y - x * z
        out[2] = z * ((p - 1.0) * y + s * x)
    elif chart == 3 or chart == 4:  # chart at infinity projected on Y
        x = u[0]
        z = u[1]
        w = u[2]
        sg = 1.0 if chart == 3 else -1.0
        out[0] = sg * (-x - N * x * w + q * x * x + x * x * w - x * z * w)
        out[1] = sg * (-p * z - (N + s) * z * w + q * x * z + x * z * w - z * z * w)
        out[2] = sg * (-w - (N - 2.0) * w * w + q * x * w + x * w * w - z * w * w)
    elif chart == 5:  # invariant plane X = 0, state (Y, Z)
        Y = u[0]
        Z = u[1]
        out[0] = -(N - 2.0) * Y - Z - Y * Y
        out[1] = Z * (s + 2.0 + (p - 1.0) * Y)
    elif chart == 6:  # invariant plane Z = 0, state (X, Y)
        X = u[0]
        Y = u[1]
        out[0] = 2.0 * X
        out[1] = X - (N - 2.0) * Y - Y * Y + q * X * Y
    elif chart == 7:  # plane x = 0 of the X-chart in (y, w = x z)
        y = u[0]
        w = u[1]
        out[0] = -y * y + q * y - w
        out[1] = (p - 1.0) * y * w
    elif chart == 8:  # g'' + A g' - B/(p-1) g + g^p - e^{2s} g'/2 = 0
        g = u[0]
        gp = u[1]
        out[0] = gp
        out[1] = -prm[6] * gp + prm[7] / (p - 1.0) * g - _signed_pow(g, p) + 0.5 * math.exp(2.0 * t) * gp
    elif chart == 9:  # y'' + A y' + B y - e^{2s} y'/2 = 0
        y = u[0]
        yp = u[1]
        out[0] = yp
        out[1] = -prm[6] * yp - prm[7] * y + 0.5 * math.exp(2.0 * t) * yp
    else:
        return 2
    return 0


def _as_state(chart: ChartId, state) -> np.ndarray:
    u = np.asarray(state, dtype=np.float64).reshape(-1)
    if u.size != CHART_DIM[ChartId(chart)]:
        raise DomainError(f"chart {ChartId(chart).name} expects a state of size {CHART_DIM[ChartId(chart)]}, got {u.size}")
    return u


def eval_field(
    chart: ChartId,
    state,
    params: RegimeParams,
    t: float = 0.0,
    xi_min: float = DEFAULT_XI_MIN,
) -> np.ndarray:
    """Right-hand side of ``chart`` at ``state``.

    ``t`` is the independent variable where the system is non-autonomous:
    ξ for ``PROFILE_ODE`` and s = ln ξ for ``G_EQUATION``/``LINEARIZED``.
    """
    chart = ChartId(chart)
    u = _as_state(chart, state)
    if chart == ChartId.PROFILE_ODE:
        if t <= 0.0:
            raise SingularityError("profile equation is singular at xi <= 0")
        if params.sigma < 0.0 and t < xi_min:
            raise SingularityError(f"profile equation with sigma < 0 refuses xi < xi_min = {xi_min:g}")
    out = np.empty_like(u)
    field_rhs(int(chart), float(t), u, param_vector(params, xi_min), out)
    return out


# ---------------------------------------------------------------------------
# points and transforms


@dataclass(frozen=True)
class PhasePoint:
    X: float
    Y: float
    Z: float

    @property
    def in_positive_region(self) -> bool:
        return self.X > 0.0 and self.Z > 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=np.float64)


@dataclass(frozen=True)
class ProfileState:
    xi: float
    f: float
    fp: float


def to_phase(state: ProfileState, params: RegimeParams) -> PhasePoint:
    """(ξ, f, f′) → (X, Y, Z)."""
    if not state.xi > 0.0:
        raise DomainError("to_phase needs xi > 0")
    if not state.f > 0.0:
        raise DomainError("to_phase needs f > 0 (Y is undefined at a zero of f)")
    s2 = params.sigma + 2.0
    X = s2 * state.xi**2 / (2.0 * (params.p - 1.0))
    Y = state.xi * state.fp / state.f
    Z = state.xi**s2 * state.f ** (params.p - 1.0)
    return PhasePoint(X, Y, Z)


def from_phase(pt: PhasePoint, params: RegimeParams) -> tuple[float, float]:
    """(X, Z) → (ξ, f); the inverse of :func:`to_phase` on the positive region."""
    if not pt.X > 0.0 or not pt.Z > 0.0:
        raise DomainError("from_phase needs X > 0 and Z > 0")
    s2, pm1 = params.sigma + 2.0, params.p - 1.0
    r = 2.0 * pm1 * pt.X / s2
    return math.sqrt(r), r ** (-s2 / (2.0 * pm1)) * pt.Z ** (1.0 / pm1)


def chart_x(pt: PhasePoint) -> tuple[float, float, float]:
    """(x, y, z) = (1/X, Y/X, Z/X)."""
    if not pt.X > 0.0:
        raise DomainError("chart_x needs X > 0")
    return 1.0 / pt.X, pt.Y / pt.X, pt.Z / pt.X


def chart_y(pt: PhasePoint) -> tuple[float, float, float]:
    """(x̃, z̃, w̃) = (X/Y, Z/Y, 1/Y)."""
    if pt.Y == 0.0:
        raise DomainError("chart_y needs Y != 0")
    return pt.X / pt.Y, pt.Z / pt.Y, 1.0 / pt.Y


def to_offset(state, params: RegimeParams) -> np.ndarray:
    """Full phase state(s) → (X, Y − Y_stat, Z − Z0)."""
    u = np.array(state, dtype=np.float64)
    prm = param_vector(params)
    u[..., 1] -= prm[I_YS]
    u[..., 2] -= prm[I_Z0]
    return u


def from_offset(state, params: RegimeParams) -> np.ndarray:
    """(X, Y − Y_stat, Z − Z0) → full phase state(s)."""
    u = np.array(state, dtype=np.float64)
    prm = param_vector(params)
    u[..., 1] += prm[I_YS]
    u[..., 2] += prm[I_Z0]
    return u


def phase_of_states(chart: ChartId, states: np.ndarray, params: RegimeParams) -> np.ndarray:
    """(X, Y, Z) rows for states of any phase-type chart (planes embed with a zero)."""
    chart = ChartId(chart)
    u = np.atleast_2d(np.asarray(states, dtype=np.float64))
    n = u.shape[0]
    if chart == ChartId.FULL_PHASE:
        return u.copy()
    if chart == ChartId.STAT_OFFSET:
        return from_offset(u, params)
    if chart == ChartId.PLANE_X0:
        return np.column_stack([np.zeros(n), u[:, 0], u[:, 1]])
    if chart == ChartId.PLANE_Z0:
        return np.column_stack([u[:, 0], u[:, 1], np.zeros(n)])
    if chart == ChartId.INF_X:
        with np.errstate(divide="ignore", invalid="ignore"):
            X = 1.0 / u[:, 0]
            return np.column_stack([X, u[:, 1] * X, u[:, 2] * X])
    raise DomainError(f"chart {chart.name} has no phase-space embedding")


def dulac_divergence(Y: float, Z: float, params: RegimeParams) -> float:
    """Divergence of Z^a·F on the plane X = 0, where F is the planar field.

    With a = (3−p)/(p−1) the Y-dependence cancels and the divergence is
    ((N−2)/(p−1))(p_S − p) Z^a, negative for every p > p_S.
    """
    if not Z > 0.0:
        raise DomainError("dulac_divergence needs Z > 0")
    N, p = params.N, params.p
    a = (3.0 - p) / (p - 1.0)
    return (N - 2.0) / (p - 1.0) * (float(p_sobolev(N, params.sigma)) - p) * Z**a
