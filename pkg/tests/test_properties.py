"""Property tests for the structural invariants of the exponents, fields and seeds."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hardyhenon.dynsys import ChartId, PhasePoint, ProfileState, chart_x, eval_field, from_phase, to_phase
from hardyhenon.errors import DomainError
from hardyhenon.exponents import (
    RegimeParams,
    is_finite,
    p_joseph_lundgren,
    p_joseph_lundgren_forms,
    p_lepin,
    p_sobolev,
    profile_constants,
    zero_count_from_gap,
)
from hardyhenon.integrator import Controls, EventKind, EventSpec, integrate
from hardyhenon.local_analysis import center_manifold_y, report, seed_center_Q1, seed_unstable_P0
from hardyhenon.profiles import direct_shoot_ssode

SETTINGS = settings(max_examples=60, deadline=None)
SLOW = settings(max_examples=12, deadline=None)


@st.composite
def jl_pairs(draw):
    N = draw(st.integers(3, 200))
    s = draw(st.floats(-1.95, 20.0))
    assume(N > 10 + 4 * s + 1e-6)
    return N, s


@st.composite
def supercritical(draw, sigma_min=-1.9, sigma_max=6.0):
    """(N, σ, p) with p above p_JL(σ) when it is finite, and above p_S otherwise."""
    N = draw(st.integers(3, 60))
    s = draw(st.floats(sigma_min, sigma_max))
    pjl = p_joseph_lundgren(N, s)
    base = float(pjl) if is_finite(pjl) else float(p_sobolev(N, s))
    p = base + draw(st.floats(0.05, 30.0))
    return RegimeParams(N, s, p)


@SETTINGS
@given(jl_pairs())
def test_joseph_lundgren_forms_agree(pair):
    f1, f2 = p_joseph_lundgren_forms(*pair)
    assert abs(f1 - f2) <= 1e-10 * abs(f2)


@SETTINGS
@given(jl_pairs())
def test_discriminant_vanishes_at_joseph_lundgren(pair):
    N, s = pair
    c = profile_constants(RegimeParams(N, s, p_joseph_lundgren(N, s)))
    assert abs(c.A**2 - 4 * c.B) <= 1e-6 * c.A**2


@SETTINGS
@given(st.integers(3, 400), st.floats(0.01, 1.99))
def test_ordering_positive_sigma(N, s):
    pl = p_lepin(N, s)
    assume(is_finite(pl))
    assert p_sobolev(N, s) < p_joseph_lundgren(N, s) < pl


@SETTINGS
@given(st.integers(3, 400), st.floats(-1.99, -0.01))
def test_ordering_negative_sigma(N, s):
    pl = p_lepin(N, s)
    assume(is_finite(pl))
    assert p_sobolev(N, s) < p_joseph_lundgren(N, s) < pl


@SETTINGS
@given(st.integers(3, 400), st.floats(2.0, 30.0))
def test_lepin_below_sobolev(N, s):
    assert p_lepin(N, s) < p_sobolev(N, s)


@SETTINGS
@given(supercritical())
def test_z0_is_power_of_c(P):
    c = profile_constants(P)
    assume(math.isfinite(c.C_sigma))
    assert c.Z0 == pytest.approx(c.C_sigma ** (P.p - 1.0), rel=1e-12)


@SETTINGS
@given(st.floats(0.0, 100.0), st.floats(0.0, 100.0), st.integers(1, 40))
def test_zero_count_monotone_in_gap(g1, g2, _):
    lo, hi = sorted((g1, g2))
    assert zero_count_from_gap(lo) <= zero_count_from_gap(hi)


@SETTINGS
@given(supercritical(), st.floats(-50, 50), st.floats(0, 50), st.floats(0, 50))
def test_invariant_planes_exact(P, Y, Z, X):
    assert eval_field(ChartId.FULL_PHASE, [0.0, Y, Z], P)[0] == 0.0
    assert eval_field(ChartId.FULL_PHASE, [X, Y, 0.0], P)[2] == 0.0
    F = eval_field(ChartId.FULL_PHASE, [0.0, Y, Z], P)
    assert np.array_equal(eval_field(ChartId.PLANE_X0, [Y, Z], P), F[1:])
    F = eval_field(ChartId.FULL_PHASE, [X, Y, 0.0], P)
    assert np.array_equal(eval_field(ChartId.PLANE_Z0, [X, Y], P), F[:2])


@SETTINGS
@given(supercritical(), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_phase_round_trip(P, xi, f, fp):
    xi2, f2 = from_phase(to_phase(ProfileState(xi, f, fp), P), P)
    assert xi2 == pytest.approx(xi, rel=1e-12) and f2 == pytest.approx(f, rel=1e-12)


@SETTINGS
@given(supercritical(), st.floats(0.5, 50.0), st.floats(-20.0, 20.0), st.floats(0.01, 50.0))
def test_x_chart_compatible_with_full_field(P, X, Y, Z):
    x, y, z = chart_x(PhasePoint(X, Y, Z))
    F = eval_field(ChartId.FULL_PHASE, [X, Y, Z], P)
    push = np.array([-F[0] / X**2, (F[1] * X - Y * F[0]) / X**2, (F[2] * X - Z * F[0]) / X**2])
    G = X * eval_field(ChartId.INF_X, [x, y, z], P)
    scale = np.max(np.abs(push)) + 1e-300
    assert np.max(np.abs(G - push)) <= 1e-10 * scale


@SETTINGS
@given(supercritical(), st.floats(0.0, 1.0), st.floats(-3.0, 3.0))
def test_w_plane_restriction(P, y, w):
    # on x = 0 the X-chart reduces to the (y, w = x z) system
    Fx = eval_field(ChartId.INF_X, [0.0, y, 1.0], P)
    W = eval_field(ChartId.W_PLANE, [y, 0.0], P)
    assert W[0] == pytest.approx(Fx[1], abs=1e-14)


@SETTINGS
@given(supercritical(sigma_min=-1.9, sigma_max=6.0))
def test_p2_eigen_identities(P):
    assume(P.supercritical_jl)
    c = profile_constants(P)
    lam = sorted(np.real(report("P2", P).eigenvalues))[:2]
    assert lam[0] + lam[1] == pytest.approx(-c.A, rel=1e-10)
    assert lam[0] * lam[1] == pytest.approx(c.B, rel=1e-9)


@SETTINGS
@given(supercritical(), st.floats(1e-6, 0.1))
def test_stationary_family_lies_on_center_manifold(P, x):
    Z0 = profile_constants(P).Z0
    assert center_manifold_y(x, Z0 * x, P) == pytest.approx(P.y_stat * x, rel=1e-12)


@SLOW
@given(supercritical(sigma_min=0.2, sigma_max=6.0), st.floats(0.8, 1.5))
def test_transform_consistency(P, f0):
    # a directly integrated profile, mapped to (X, Y, Z), satisfies the phase field
    pr = direct_shoot_ssode(f0, P, (0.1, 5.0))
    m = pr.f > 0
    xi, f, fp, fpp = pr.xi[m], pr.f[m], pr.fp[m], pr.fpp[m]
    Y = xi * fp / f
    dY = Y + xi**2 * fpp / f - Y**2
    X = P.alpha * xi**2
    Z = xi ** (P.sigma + 2.0) * f ** (P.p - 1.0)
    for i in range(0, xi.size, max(1, xi.size // 20)):
        F = eval_field(ChartId.FULL_PHASE, [X[i], Y[i], Z[i]], P)
        assert abs(F[1] - dY[i]) <= 1e-6 * max(1.0, abs(F[1]))


@SLOW
@given(supercritical(sigma_min=0.2, sigma_max=6.0), st.floats(-3.0, 1.0))
def test_seed_fidelity(P, logC):
    C = 10.0**logC
    s = seed_unstable_P0(C, None, P)
    X0 = s.state[0]
    tr = integrate(ChartId.FULL_PHASE, s, 1, (), Controls(atol=1e-300), P, t_end=s.t0 + 1.0, terminals=())
    X, _, Z = tr.phase()[-1]
    assert Z / X ** ((P.sigma + 2.0) / 2.0) == pytest.approx(C, rel=1e-2)
    assert X > X0


@SLOW
@given(st.sampled_from([RegimeParams(20, 1.5, 10.0), RegimeParams(36, 6.0, 15.0), RegimeParams(40, 1.5, 10.0)]),
       st.floats(0.9, 0.999))
def test_backward_center_orbit_stays_near_z0(P, frac):
    Z0 = profile_constants(P).Z0
    k = frac * Z0
    s = seed_center_Q1(k, 1e4, P)
    tr = integrate(ChartId.STAT_OFFSET, s.offset_state, -1, [EventSpec(EventKind.CROSS_Z0)],
                   Controls(atol=1e-300), P, t0=s.t0)
    ev = tr.events_of(EventKind.CROSS_Z0)
    stop = ev[0].t if ev else tr.t[-1]
    Z = tr.phase()[:, 2][tr.t >= stop]
    d = 0.05 * Z0
    assert np.all((Z >= min(k, Z0) - d) & (Z <= max(k, Z0) + d))


@SLOW
@given(supercritical(sigma_min=-1.9, sigma_max=-0.1), st.floats(-2.0, 2.0))
def test_no_tangency_on_unstable_orbits(P, logf0):
    try:
        s = seed_unstable_P0(10.0**logf0, None, P)
    except DomainError:
        assume(False)
    tr = integrate(ChartId.FULL_PHASE, s, 1, (), Controls(atol=1e-300), P, t_end=s.t0 + 15.0)
    xyz = tr.phase()
    away = np.max(np.abs(xyz), axis=1) > 1e-6  # the orbit proper, outside the ball around P0
    Y, dY = xyz[:, 1], tr.derivs[:, 1]
    d2Y = np.gradient(dY, tr.t) if tr.t.size > 2 else np.zeros_like(dY)
    bad_zero = (np.abs(Y) < 1e-8) & (np.abs(dY) < 1e-8) & (d2Y <= 0.0)
    bad_stat = (np.abs(Y - P.y_stat) < 1e-8) & (np.abs(dY) < 1e-8)
    assert not np.any((bad_zero | bad_stat) & away)
