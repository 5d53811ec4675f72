import numpy as np
import pytest

from hardyhenon.dynsys import ChartId, eval_field
from hardyhenon.errors import DomainError
from hardyhenon.exponents import RegimeParams, p_joseph_lundgren, profile_constants
from hardyhenon.integrator import Controls, integrate
from hardyhenon.local_analysis import (
    PointId,
    analytic_jacobian,
    center_manifold_y,
    gamma_special,
    numeric_jacobian,
    report,
    seed_center_Q1,
    seed_unstable_P0,
)


def test_p0_eigenstructure(henon20):
    r = report("P0", henon20)
    assert sorted(r.eigenvalues) == pytest.approx(sorted([2.0, -18.0, 3.5]))
    J = r.jacobian
    for lam, v in ((2.0, [20.0, 1.0, 0.0]), (3.5, [0.0, 1.0, -21.5])):
        assert J @ np.array(v) == pytest.approx(lam * np.array(v))
    assert (r.stable_dim, r.unstable_dim) == (1, 2)


def test_p1_and_p2(henon20):
    r = report("P1", henon20)
    N, s, p = henon20.N, henon20.sigma, henon20.p
    assert sorted(r.eigenvalues) == pytest.approx(sorted([2.0, N - 2.0, N + s - p * (N - 2.0)]))
    c = profile_constants(henon20)
    r = report("P2", henon20)
    lam = sorted(r.eigenvalues)[:2]
    assert sum(lam) == pytest.approx(-c.A, rel=1e-10)
    assert lam[0] * lam[1] == pytest.approx(c.B, rel=1e-10)
    assert lam[0] < 0 and lam[1] < 0


def test_p2_double_at_joseph_lundgren():
    P = RegimeParams(20, 1.5, p_joseph_lundgren(20, 1.5))
    r = report("P2", P)
    neg = sorted(np.real(r.eigenvalues))[:2]
    assert neg[0] == pytest.approx(neg[1], rel=1e-5)


def test_q1_and_q5(henon20):
    q = (henon20.p - 1.0) / (henon20.sigma + 2.0)
    assert sorted(report("Q1", henon20).eigenvalues) == pytest.approx(sorted([0.0, q, 0.0]), abs=1e-12)
    assert sorted(report(PointId.Q5, henon20).eigenvalues) == pytest.approx(sorted([0.0, -q, (henon20.p - 1.0) ** 2 / 3.5]))
    assert report("Q1", henon20).center_dim == 2


@pytest.mark.parametrize("point", ["P0", "P1", "P2"])
def test_jacobian_matches_finite_differences(henon20, point):
    r = report(point, henon20)
    Jn = numeric_jacobian(r.chart, r.location, henon20)
    assert np.max(np.abs(Jn - analytic_jacobian(PointId(point), henon20))) <= 1e-6


def test_center_manifold_examples(henon20):
    assert center_manifold_y(0.0, 3.0, henon20) == 0.0
    Z0, ys = profile_constants(henon20).Z0, henon20.y_stat
    for x in (1e-3, 1e-2, 0.1):
        assert center_manifold_y(x, Z0 * x, henon20) == pytest.approx(ys * x, rel=1e-12)
    linear = -(3.5 / 9.0) * 0.01
    quadratic = 3.5**2 * (21.5 - 180.0) / 9.0**3 * 1e-4
    assert center_manifold_y(0.01, 0.0, henon20) == pytest.approx(linear + quadratic, rel=1e-14)
    assert center_manifold_y(0.01, 0.0, henon20) == pytest.approx(-0.0041552, abs=1e-7)


def test_seed_center_examples(henon20):
    Z0, ys = profile_constants(henon20).Z0, henon20.y_stat
    s = seed_center_Q1(Z0, 1e6, henon20)
    assert s.state[1] == pytest.approx(ys, rel=1e-12)
    s = seed_center_Q1(Z0 / 2, 1e6, henon20)
    assert s.state[1] == pytest.approx(-0.388890, abs=1e-6)
    assert s.offset_state[1] == pytest.approx(-1.33e-6, rel=1e-2)
    s = seed_center_Q1(Z0 * (1 - 1e-6), 1e6, henon20)
    assert s.state[1] < ys and s.offset_state[1] < 0
    with pytest.warns(RuntimeWarning):
        seed_center_Q1(1.0, 10.0, henon20)
    with pytest.raises(DomainError):
        seed_center_Q1(-1.0, 1e6, henon20)


def test_seed_p0_positive_sigma(henon20):
    s = seed_unstable_P0(1e-6, None, henon20)
    X, Y, Z = s.state
    assert X == pytest.approx(1e-8)
    assert Y == pytest.approx(X / henon20.N, rel=1e-6)
    with pytest.raises(DomainError):
        seed_unstable_P0(1.0, 0.5, henon20)


def test_seed_p0_negative_sigma(hardy8):
    s = seed_unstable_P0(1.0, None, hardy8)
    ps = s.profile_state
    xi0, p = ps.xi, hardy8.p
    series = (1.0 + (p - 1.0) * xi0**1.4 / (7.4 * 1.4)) ** (-1.0 / (p - 1.0))
    assert ps.f == pytest.approx(series, rel=1e-10)
    assert ps.fp < 0.0


def test_seed_fidelity_recovers_C(henon20):
    C = 0.37
    s = seed_unstable_P0(C, None, henon20)
    tr = integrate(ChartId.FULL_PHASE, s, 1, (), Controls(atol=1e-300), henon20, t_end=s.t0 + 2.0)
    X, _, Z = tr.phase()[-1]
    assert Z / X ** 1.75 == pytest.approx(C, rel=1e-2)


def test_gamma_special(henon20):
    g = gamma_special(henon20)
    a = 1.75
    assert g.gamma0 == pytest.approx(a / np.sqrt(1 + a * a))
    assert 0.0 < g.gamma0 < 1.0
    g0 = gamma_special(RegimeParams(10, 0.0, 3.0))
    assert g0.tail_exponent == 0.0 and g0.tail_amplitude == pytest.approx(0.5**0.5)


def test_center_manifold_is_nearly_invariant(henon20):
    # y(x, z) from the expansion must satisfy the invariance equation to third order
    for x, z in ((1e-3, 2e-3), (1e-3, 5e-3)):
        X = 1 / x
        Y = center_manifold_y(x, z, henon20) * X
        F = eval_field(ChartId.FULL_PHASE, [X, Y, z * X], henon20)
        h = 1e-7
        dydx = (center_manifold_y(x + h, z, henon20) - center_manifold_y(x - h, z, henon20)) / (2 * h)
        dydz = (center_manifold_y(x, z + h, henon20) - center_manifold_y(x, z - h, henon20)) / (2 * h)
        Fx = eval_field(ChartId.INF_X, [x, Y * x, z], henon20)
        assert abs(Fx[1] - dydx * Fx[0] - dydz * Fx[2]) < 50 * x**3
