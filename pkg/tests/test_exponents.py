import math

import numpy as np
import pytest

from hardyhenon.errors import DiscriminantNegative, DomainError
from hardyhenon.exponents import (
    UNBOUNDED,
    RegimeParams,
    conjectured_nonexistence,
    is_finite,
    lepin_gap,
    p_joseph_lundgren,
    p_joseph_lundgren_forms,
    p_lepin,
    p_sobolev,
    predicted_multiplicity,
    profile_constants,
    zero_count_from_gap,
)


def test_sobolev_examples():
    assert p_sobolev(3, 0.0) == 5.0
    assert p_sobolev(20, 1.5) == pytest.approx(25.0 / 18.0, rel=1e-15)
    assert p_sobolev(2, 1.0) is UNBOUNDED
    with pytest.raises(DomainError):
        p_sobolev(5, -2.0)


def test_joseph_lundgren_examples():
    assert p_joseph_lundgren(20, 1.5) == pytest.approx(3.55, abs=0.01)
    assert p_joseph_lundgren(40, 1.5) == pytest.approx(1.39, abs=0.01)
    assert p_joseph_lundgren(10, -0.6) == pytest.approx(2.68, abs=0.01)
    assert p_joseph_lundgren(12, 1.0) is UNBOUNDED
    assert p_joseph_lundgren(36, 6.0) == pytest.approx(12.92, abs=0.01)


def test_joseph_lundgren_low_dimension_value():
    # Both closed forms give 11.4198..., which the one-decimal figure 11.4 rounds.
    f1, f2 = p_joseph_lundgren_forms(8, -0.6)
    assert f1 == pytest.approx(f2, rel=1e-13)
    assert round(f2, 1) == 11.4


def test_joseph_lundgren_homogeneous_reduction():
    for N in range(11, 40):
        expected = 1.0 + 4.0 / (N - 4.0 - 2.0 * math.sqrt(N - 1.0))
        assert p_joseph_lundgren(N, 0.0) == pytest.approx(expected, rel=1e-12)


def test_lepin_examples():
    assert p_lepin(40, 1.5) == pytest.approx(6.25, abs=1e-12)
    assert p_lepin(10, -0.6) == pytest.approx(5.55, abs=0.01)
    assert p_lepin(16, 0.0) == pytest.approx(2.0, rel=1e-15)
    assert p_lepin(20, 1.5) is UNBOUNDED
    assert p_lepin(8, -0.6) is UNBOUNDED
    with pytest.raises(DomainError):
        p_lepin(10, -2.5)


def test_lepin_higher_level_needs_large_sigma():
    with pytest.raises(DomainError):
        p_lepin(30, 1.0, j=2)
    assert is_finite(p_lepin(30, 5.0, j=2))


def test_lepin_level_one_matches_rational_form():
    for N in (12, 20, 35):
        for s in (2.0, 2.5, 4.0, 7.0):
            expected = (s - 2.0) * (N + s - 4.0) / (s * (N - 2.0) - 2.0 * (N - 10.0))
            assert p_lepin(N, s) == pytest.approx(expected, rel=1e-13)


def test_lepin_below_sobolev_for_large_sigma():
    for N in (5, 12, 30):
        for s in (2.5, 3.0, 6.0):
            assert p_lepin(N, s) < p_sobolev(N, s)


def test_unbounded_comparisons():
    assert UNBOUNDED > 1e300
    assert not UNBOUNDED < 5.0
    assert UNBOUNDED == math.inf
    assert float(UNBOUNDED) == math.inf
    assert str(UNBOUNDED) == "inf"


def test_profile_constants_example(henon20):
    c = profile_constants(henon20)
    assert c.alpha == pytest.approx(0.194444, abs=1e-6)
    assert c.Z0 == pytest.approx(6.84877, abs=1e-5)
    # C is pinned by Z0 = C^(p-1) applied to the hand-evaluated Z0
    assert c.C_sigma == pytest.approx(6.84877 ** (1.0 / 9.0), abs=1e-5)
    assert c.A == pytest.approx(17.22222, abs=1e-5)
    assert c.B == pytest.approx(61.63889, abs=1e-5)
    assert c.Z0 == pytest.approx(c.C_sigma ** (henon20.p - 1.0), rel=1e-12)


def test_profile_constants_homogeneous():
    c = profile_constants(RegimeParams(11, 0.0, 2.0))
    assert c.A == pytest.approx(5.0)
    assert c.B == pytest.approx(14.0)


def test_profile_constants_domain():
    with pytest.raises(DomainError):
        profile_constants(RegimeParams(3, 0.0, 2.0))


def test_regime_params_validation():
    for bad in [(2, 0.0, 3.0), (5, -2.0, 3.0), (5, 0.0, 1.0), (5.5, 0.0, 3.0), (5, 0.0, float("nan"))]:
        with pytest.raises(DomainError):
            RegimeParams(*bad)


def test_lepin_gap_examples(henon20, henon40):
    a = lepin_gap(henon20)
    assert a.lepin_gap == pytest.approx(10.148, abs=1e-3)
    assert a.zero_count == 3 and a.existence
    b = lepin_gap(henon40)
    assert b.lepin_gap == pytest.approx(7.915, abs=1e-3)
    assert b.zero_count == 2 and not b.existence


def test_lepin_gap_at_joseph_lundgren_equals_A():
    P = RegimeParams(20, 1.5, p_joseph_lundgren(20, 1.5))
    assert lepin_gap(P).lepin_gap == pytest.approx(profile_constants(P).A, rel=1e-6)


def test_lepin_gap_below_joseph_lundgren():
    with pytest.raises(DiscriminantNegative):
        lepin_gap(RegimeParams(20, 1.5, 3.0))


def test_zero_count_brackets():
    assert zero_count_from_gap(3.0) == 1
    assert zero_count_from_gap(7.9) == 2
    assert zero_count_from_gap(8.0) == 2
    assert zero_count_from_gap(8.1) == 3
    assert zero_count_from_gap(12.0) == 3
    assert zero_count_from_gap(12.5) == 4


def test_predicted_multiplicity_examples(henon20, henon40):
    assert predicted_multiplicity(RegimeParams(36, 6.0, 15.0)) == 2
    assert predicted_multiplicity(henon20) == 1
    assert predicted_multiplicity(henon40) == 0
    assert conjectured_nonexistence(henon40)
    assert not conjectured_nonexistence(henon20)


def test_form_equality_grid():
    worst = 0.0
    for N in range(12, 61):
        for s in np.arange(-1.5, 4.0 + 1e-9, 0.25):
            if N > 10 + 4 * s:
                f1, f2 = p_joseph_lundgren_forms(N, float(s))
                worst = max(worst, abs(f1 - f2) / f2)
    assert worst <= 1e-10
