"""Critical points, eigenstructure, the centre manifold at Q1 and orbit seeds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dynsys import ChartId, ProfileState, eval_field, param_vector, to_phase
from .errors import DomainError
from .exponents import RegimeParams, profile_constants

__all__ = [
    "PointId",
    "CriticalPointReport",
    "SeedPoint",
    "GammaSpecial",
    "report",
    "analytic_jacobian",
    "numeric_jacobian",
    "center_manifold_y",
    "seed_center_Q1",
    "seed_unstable_P0",
    "seed_plane_z0_unstable_P0",
    "seed_plane_x0_unstable_P0",
    "seed_plane_x0_stable_P1",
    "gamma_special",
    "c_from_f0",
    "f0_from_c",
    "origin_curvature",
]

ZERO_TOL = 1e-10


class PointId(Enum):
    P0 = "P0"
    P1 = "P1"
    P2 = "P2"
    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    Q4 = "Q4"
    Q5 = "Q5"
    QGAMMA = "Qgamma"


@dataclass(frozen=True)
class CriticalPointReport:
    id: PointId
    chart: ChartId
    location: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    analytic_eigenvalues: tuple
    stable_dim: int
    unstable_dim: int
    center_dim: int
    complex_pair: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class SeedPoint:
    """Starting point of an invariant-manifold orbit.

    ``state`` is in ``chart``; ``offset_state`` carries the same point in the
    (X, Y − Y_stat, Z − Z0) chart, computed without cancellation when the
    point lies close to the stationary line.
    """

    chart: ChartId
    state: np.ndarray
    family_parameter: float
    offset: float
    t0: float
    offset_state: np.ndarray | None = None
    profile_state: ProfileState | None = None
    pre_exit: bool = False

    def __post_init__(self) -> None:
        if not self.offset > 0.0:
            raise DomainError("seed offset must be positive")
        if not np.all(np.isfinite(self.state)):
            raise DomainError("seed state must be finite")


def _location(point: PointId, params: RegimeParams, gamma: float | None) -> tuple[ChartId, np.ndarray]:
    N = params.N
    q = (params.p - 1.0) / (params.sigma + 2.0)
    if point is PointId.P0:
        return ChartId.FULL_PHASE, np.zeros(3)
    if point is PointId.P1:
        return ChartId.FULL_PHASE, np.array([0.0, -(N - 2.0), 0.0])
    if point is PointId.P2:
        return ChartId.FULL_PHASE, np.array([0.0, params.y_stat, profile_constants(params).Z0])
    if point is PointId.Q1:
        return ChartId.INF_X, np.zeros(3)
    if point is PointId.Q5:
        return ChartId.INF_X, np.array([0.0, q, 0.0])
    if point is PointId.QGAMMA:
        if gamma is None or not 0.0 < gamma < 1.0:
            raise DomainError("Qgamma needs gamma in (0, 1)")
        return ChartId.INF_X, np.array([0.0, 0.0, math.sqrt(1.0 - gamma * gamma) / gamma])
    if point is PointId.Q2:
        return ChartId.INF_Y_MINUS, np.zeros(3)
    if point is PointId.Q3:
        return ChartId.INF_Y_PLUS, np.zeros(3)
    raise DomainError("Q4 (the Z-direction at infinity) has no chart in this package")


def analytic_jacobian(point: PointId, params: RegimeParams, gamma: float | None = None) -> np.ndarray:
    """Hand-derived linearization of the field at a critical point, in its natural chart."""
    N, s, p = float(params.N), params.sigma, params.p
    q = (p - 1.0) / (s + 2.0)
    if point is PointId.P0:
        return np.array([[2.0, 0.0, 0.0], [1.0, -(N - 2.0), -1.0], [0.0, 0.0, s + 2.0]])
    if point is PointId.P1:
        return np.array(
            [[2.0, 0.0, 0.0], [1.0 - q * (N - 2.0), N - 2.0, -1.0], [0.0, 0.0, N + s - p * (N - 2.0)]]
        )
    if point is PointId.P2:
        z0 = profile_constants(params).Z0
        return np.array(
            [[2.0, 0.0, 0.0], [0.0, -(N - 2.0) - 2.0 * params.y_stat, -1.0], [0.0, (p - 1.0) * z0, 0.0]]
        )
    if point is PointId.Q1:
        return np.array([[0.0, 0.0, 0.0], [1.0, q, 0.0], [0.0, 0.0, 0.0]])
    if point is PointId.Q5:
        return np.array([[0.0, 0.0, 0.0], [1.0 - N * q, -q, 0.0], [0.0, 0.0, (p - 1.0) * q]])
    if point is PointId.QGAMMA:
        kappa = _location(point, params, gamma)[1][2]
        return np.array([[0.0, 0.0, 0.0], [1.0 - kappa, q, 0.0], [s * kappa, (p - 1.0) * kappa, 0.0]])
    if point is PointId.Q2:
        return np.diag([1.0, p, 1.0])
    if point is PointId.Q3:
        return np.diag([-1.0, -p, -1.0])
    raise DomainError("Q4 (the Z-direction at infinity) has no chart in this package")


def _analytic_eigenvalues(point: PointId, params: RegimeParams) -> tuple:
    N, s, p = float(params.N), params.sigma, params.p
    q = (p - 1.0) / (s + 2.0)
    if point is PointId.P0:
        return (2.0, -(N - 2.0), s + 2.0)
    if point is PointId.P1:
        return (2.0, N - 2.0, N + s - p * (N - 2.0))
    if point is PointId.P2:
        c = profile_constants(params)
        disc = complex(c.A * c.A - 4.0 * c.B) ** 0.5
        l2, l3 = (-c.A - disc) / 2.0, (-c.A + disc) / 2.0
        if abs(l2.imag) == 0.0:
            l2, l3 = l2.real, l3.real
        return (2.0, l2, l3)
    if point is PointId.Q1:
        return (0.0, q, 0.0)
    if point is PointId.Q5:
        return (0.0, -q, (p - 1.0) * q)
    if point is PointId.QGAMMA:
        return (0.0, q, 0.0)
    if point is PointId.Q2:
        return (1.0, p, 1.0)
    if point is PointId.Q3:
        return (-1.0, -p, -1.0)
    raise DomainError("no analytic eigenvalues for Q4")


def numeric_jacobian(chart: ChartId, state: np.ndarray, params: RegimeParams, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of :func:`eval_field`."""
    state = np.asarray(state, dtype=np.float64)
    n = state.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (eval_field(chart, state + e, params) - eval_field(chart, state - e, params)) / (2.0 * h)
    return J


def report(point_id: PointId | str, params: RegimeParams, gamma: float | None = None) -> CriticalPointReport:
    """Location, Jacobian and eigen-decomposition of a critical point.

    Stable/unstable/centre dimensions are counted from the real parts with a
    zero tolerance of 1e-10.  The numeric eigenvalues of the hand-written
    Jacobian are checked against the closed-form ones.
    """
    point = PointId(point_id) if not isinstance(point_id, PointId) else point_id
    chart, loc = _location(point, params, gamma)
    J = analytic_jacobian(point, params, gamma)
    vals, vecs = np.linalg.eig(J)
    analytic = _analytic_eigenvalues(point, params)
    remaining = list(vals)
    for lam in analytic:
        # a repeated eigenvalue of a defective matrix is only resolved to about sqrt(eps)
        repeated = sum(abs(mu - lam) <= 1e-6 * max(1.0, abs(lam)) for mu in analytic) > 1
        tol = (1e-6 if repeated else 1e-8) * max(1.0, abs(lam))
        k = int(np.argmin([abs(v - lam) for v in remaining]))
        if abs(remaining[k] - lam) > tol:
            raise DomainError(f"eigenvalue mismatch at {point.value}: {remaining[k]} vs {lam}")
        remaining.pop(k)
    complex_pair = any(abs(complex(lam).imag) > 0.0 for lam in analytic)
    if not complex_pair:
        vals = vals.real
        vecs = vecs.real
    re = np.real(vals)
    notes: list[str] = []
    if complex_pair:
        notes.append("complex eigenvalue pair: parameters below p_JL")
    return CriticalPointReport(
        id=point,
        chart=chart,
        location=loc,
        jacobian=J,
        eigenvalues=vals,
        eigenvectors=vecs,
        analytic_eigenvalues=analytic,
        stable_dim=int(np.sum(re < -ZERO_TOL)),
        unstable_dim=int(np.sum(re > ZERO_TOL)),
        center_dim=int(np.sum(np.abs(re) <= ZERO_TOL)),
        complex_pair=complex_pair,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# centre manifold and seeds


def center_manifold_y(x: float, z: float, params: RegimeParams) -> float:
    """Second-order centre manifold of Q1 in the X-chart: y as a function of (x, z)."""
    s2, pm1 = params.sigma + 2.0, params.p - 1.0
    N = params.N
    c2 = s2 * s2 * (N + params.sigma - params.p * (N - 2.0)) / pm1**3
    return -s2 / pm1 * x + c2 * x * x + s2 / pm1 * x * z


def _eta_of_x(X: float, params: RegimeParams) -> float:
    return 0.5 * math.log(X / params.alpha)


def seed_center_Q1(k: float, X0: float = 1e6, params: RegimeParams | None = None) -> SeedPoint:
    """Point (X0, Y0, k) on the centre manifold of Q1 with limit Z → k."""
    if params is None:
        raise DomainError("seed_center_Q1 needs regime parameters")
    if not k > 0.0:
        raise DomainError("k must be positive")
    if X0 < 1e3:
        warnings.warn("X0 < 1e3: centre-manifold expansion loses accuracy", RuntimeWarning, stacklevel=2)
    x, z = 1.0 / X0, k / X0
    Y0 = center_manifold_y(x, z, params) * X0
    prm = param_vector(params)
    s2, pm1 = params.sigma + 2.0, params.p - 1.0
    # same expansion written around the stationary line: Y0 - Y_stat = (σ+2)(k - Z0)/((p-1) X0)
    u0 = s2 * (k - prm[4]) / (pm1 * X0)
    return SeedPoint(
        chart=ChartId.FULL_PHASE,
        state=np.array([X0, Y0, k]),
        family_parameter=float(k),
        offset=x,
        t0=_eta_of_x(X0, params),
        offset_state=np.array([X0, u0, k - prm[4]]),
    )


def c_from_f0(f0: float, params: RegimeParams) -> float:
    """C = lim Z/X^((σ+2)/2) at P0 for a profile with f(0) = f0."""
    s2 = params.sigma + 2.0
    return f0 ** (params.p - 1.0) * (1.0 / params.alpha) ** (s2 / 2.0)


def f0_from_c(C: float, params: RegimeParams) -> float:
    s2 = params.sigma + 2.0
    return (C * params.alpha ** (s2 / 2.0)) ** (1.0 / (params.p - 1.0))


def origin_curvature(f0: float, params: RegimeParams) -> float:
    """f″(0) = (σ+2) f(0) / (2N(p−1)) for σ > 0."""
    return (params.sigma + 2.0) * f0 / (2.0 * params.N * (params.p - 1.0))


def seed_unstable_P0(c_or_f0: float, eps: float | None = None, params: RegimeParams | None = None) -> SeedPoint:
    """Seed on the two-dimensional unstable manifold of P0.

    σ > 0: the family parameter is C = lim Z/X^((σ+2)/2); the seed has X = eps
    (default 1e-8), Z = C·X^((σ+2)/2), Y = X/N − Z/(N+σ).  If Z would exceed
    eps, X is lowered so that max(X, Z) = eps.

    σ < 0: the family parameter is f(0); ξ0 solves ξ0^(σ+2) = eps (default
    1e-8), lowered by f(0)^(1−p) when f(0) > 1 so that Z stays below eps.  The
    profile there is the small-ξ series with both leading corrections,
    f = [K + (p−1)ξ^(σ+2)/((N+σ)(σ+2))]^(−1/(p−1)) + α f(0) ξ²/(2N), K = f(0)^(1−p).
    """
    if params is None:
        raise DomainError("seed_unstable_P0 needs regime parameters")
    if not c_or_f0 > 0.0:
        raise DomainError("family parameter must be positive")
    eps = 1e-8 if eps is None else eps
    if not 0.0 < eps <= 1e-2:
        raise DomainError("eps must lie in (0, 1e-2]")
    N, s, p = params.N, params.sigma, params.p
    s2 = s + 2.0
    prm = param_vector(params)
    if s > 0.0:
        C = float(c_or_f0)
        X = eps
        if C * X ** (s2 / 2.0) > eps:
            X = (eps / C) ** (2.0 / s2)
        Z = C * X ** (s2 / 2.0)
        Y = X / N - Z / (N + s)
        return SeedPoint(
            chart=ChartId.FULL_PHASE,
            state=np.array([X, Y, Z]),
            family_parameter=C,
            offset=max(X, abs(Y), Z),
            t0=_eta_of_x(X, params),
            offset_state=np.array([X, Y - prm[3], Z - prm[4]]),
        )
    if s == 0.0:
        raise DomainError("sigma = 0 is not covered by the P0 seeds of either sign")
    f0 = float(c_or_f0)
    K = f0 ** (1.0 - p)
    r = eps * min(1.0, K)  # r = xi0^(sigma+2)
    xi0 = r ** (1.0 / s2)
    if not xi0 > 0.0:
        raise DomainError("seed radius underflows: f(0) too large for this sigma")
    base = K + (p - 1.0) * r / ((N + s) * s2)
    lin = params.alpha * f0 / N
    f = base ** (-1.0 / (p - 1.0)) + 0.5 * lin * xi0 * xi0
    fp = -(xi0 ** (s + 1.0)) * base ** (-p / (p - 1.0)) / (N + s) + lin * xi0
    pt = to_phase(ProfileState(xi0, f, fp), params)
    return SeedPoint(
        chart=ChartId.FULL_PHASE,
        state=pt.as_array(),
        family_parameter=f0,
        offset=max(pt.X, abs(pt.Y), pt.Z),
        t0=math.log(xi0),
        offset_state=np.array([pt.X, pt.Y - prm[3], pt.Z - prm[4]]),
        profile_state=ProfileState(xi0, f, fp),
        pre_exit=pt.Y >= 0.0,
    )


def seed_plane_z0_unstable_P0(eps: float = 1e-8, params: RegimeParams | None = None) -> SeedPoint:
    """Seed of l0, the unstable orbit of P0 inside {Z = 0}: (X, Y) = eps·(N, 1)/N."""
    if params is None:
        raise DomainError("needs regime parameters")
    return SeedPoint(ChartId.PLANE_Z0, np.array([eps, eps / params.N]), 0.0, eps, _eta_of_x(eps, params))


def seed_plane_x0_unstable_P0(eps: float = 1e-8, params: RegimeParams | None = None) -> SeedPoint:
    """Seed on the unstable orbit of P0 inside {X = 0}, along (−1, N+σ)."""
    if params is None:
        raise DomainError("needs regime parameters")
    v = np.array([-1.0, params.N + params.sigma])
    v /= np.max(np.abs(v))
    return SeedPoint(ChartId.PLANE_X0, eps * v, 0.0, eps, 0.0)


def seed_plane_x0_stable_P1(eps: float = 1e-8, params: RegimeParams | None = None) -> SeedPoint:
    """Seed on the stable orbit of P1 inside {X = 0}, along (1, (p+1)(N−2)−(N+σ))."""
    if params is None:
        raise DomainError("needs regime parameters")
    N, s, p = params.N, params.sigma, params.p
    v = np.array([1.0, (p + 1.0) * (N - 2.0) - (N + s)])
    v /= np.max(np.abs(v))
    return SeedPoint(ChartId.PLANE_X0, np.array([-(N - 2.0), 0.0]) + eps * v, 0.0, eps, 0.0)


@dataclass(frozen=True)
class GammaSpecial:
    gamma0: float
    kappa0: float
    tail_exponent: float
    tail_amplitude: float


def gamma_special(params: RegimeParams) -> GammaSpecial:
    """The distinguished point Q_γ0 and the tail law ξ^(σ/(p−1)) f → (1/(p−1))^(1/(p−1))."""
    a = params.alpha * (params.p - 1.0)
    g0 = a / math.sqrt(1.0 + a * a)
    return GammaSpecial(
        gamma0=g0,
        kappa0=math.sqrt(1.0 - g0 * g0) / g0,
        tail_exponent=params.sigma / (params.p - 1.0),
        tail_amplitude=(1.0 / (params.p - 1.0)) ** (1.0 / (params.p - 1.0)),
    )
