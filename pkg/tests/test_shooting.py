import csv

import numpy as np
import pytest

from hardyhenon.errors import BracketInvalid
from hardyhenon.exponents import profile_constants
from hardyhenon.integrator import EventKind, Terminal
from hardyhenon.shooting import (
    ShootingConfig,
    backward_label,
    bisect_forward,
    classify_backward,
    classify_forward,
    cylinder_slack,
    find_brackets,
    find_k_star,
    multiplicity_search,
    write_sweep_csv,
)
from hardyhenon.verification import (
    HENON20,
    HARDY8,
    _sweep_backward,
    _sweep_forward,
    henon20_candidate,
)


def test_backward_label_rule():
    assert backward_label(2, Terminal.ESCAPE_Q2) == "U"
    assert backward_label(2, Terminal.HIT_P0) == "V"
    assert backward_label(3, Terminal.ESCAPE_Q2) == "W"
    assert backward_label(4, Terminal.ESCAPE_Q2, level=2) == "U"
    assert backward_label(4, Terminal.ESCAPE_Q2, level=1) == "W"
    assert backward_label(1, Terminal.ESCAPE_Q2) == "V"


def test_backward_limits(henon20):
    Z0 = profile_constants(henon20).Z0
    assert classify_backward(1e-3 * Z0, henon20).set_label == "U"
    assert classify_backward((1 - 1e-3) * Z0, henon20).set_label == "W"


def test_henon20_sets_are_ordered():
    out = sorted(_sweep_backward(HENON20), key=lambda o: o.family_parameter)
    ks_u = [o.family_parameter for o in out if o.set_label == "U"]
    ks_w = [o.family_parameter for o in out if o.set_label == "W"]
    assert ks_u and ks_w
    assert min(ks_w) > max(k for k in ks_u if k < min(ks_w))
    # U is a neighbourhood of 0 and W a neighbourhood of Z0
    assert out[0].set_label == "U" and out[-1].set_label == "W"


def test_bracket_invalid(henon20):
    Z0 = profile_constants(henon20).Z0
    with pytest.raises(BracketInvalid):
        find_k_star((0.01 * Z0, 0.02 * Z0), henon20)
    with pytest.raises(BracketInvalid):
        bisect_forward((1e-3, 2e-3), HARDY8)


def test_candidate_width_and_verification():
    c = henon20_candidate()
    Z0 = profile_constants(HENON20).Z0
    assert c.bracket_width <= ShootingConfig().bisect_rtol * Z0 * 2
    assert c.verified and c.origin is Terminal.HIT_P0 and c.crossings == 2
    assert c.labels == ("U", "W")


def test_k_star_stable_under_tighter_tolerance():
    c = henon20_candidate()
    cfg = ShootingConfig().tightened(100.0)
    grid_bracket = find_brackets(list(_sweep_backward(HENON20)))[0]
    tight = find_k_star(grid_bracket, HENON20, cfg)
    assert abs(tight.family_parameter / c.family_parameter - 1.0) < 1e-6


def test_multiplicity_edge_cases(henon20):
    assert multiplicity_search(0, henon20) == []
    cands = multiplicity_search(2, henon20, outcomes=list(_sweep_backward(HENON20)))
    assert len(cands) == 1 and cands[0].crossings == 2


def test_crossing_events_and_parity(henon20):
    Z0, ys = profile_constants(henon20).Z0, henon20.y_stat
    for k in np.linspace(0.05, 0.95, 7) * Z0:
        o = classify_backward(float(k), henon20, store=True)
        tr = o.trajectory
        ev = tr.events_of(EventKind.CROSS_Z0)
        assert len(ev) == o.crossings_Z0 or o.many
        if o.set_label in ("U", "W") and o.origin in (Terminal.ESCAPE_Q2, Terminal.HIT_P0):
            first_side = np.sign(tr.states[0, 2])
            last_side = np.sign(tr.states[-1, 2])
            if first_side == last_side:
                assert len(ev) % 2 == 0
        for e in ev:
            # no tangency with the stationary line for k != Z0
            assert not (abs(e.state[2]) <= 1e-12 and abs(e.state[1]) <= 1e-8)


def test_label_stability_under_tighter_tolerance(henon20):
    cfg = ShootingConfig(grid=32)
    tight = cfg.tightened(10.0)
    Z0 = profile_constants(henon20).Z0
    ks = np.linspace(cfg.k_lo_frac * Z0, cfg.k_hi_frac * Z0, cfg.grid)
    a = [classify_backward(float(k), henon20, cfg).set_label for k in ks]
    b = [classify_backward(float(k), henon20, tight).set_label for k in ks]
    boundaries = [i for i in range(len(a) - 1) if a[i] != a[i + 1]]
    for i, (la, lb) in enumerate(zip(a, b)):
        if la != lb:
            assert any(abs(i - j) <= 2 for j in boundaries)


def test_forward_small_f0_is_c():
    assert classify_forward(1e-3, HARDY8).set_label == "C"


def test_forward_sweep_has_both_labels():
    labels = {o.set_label for o in _sweep_forward(HARDY8)}
    assert {"A", "C"} <= labels


def test_cylinder_barrier_on_forward_orbits():
    for f0 in np.geomspace(1e-2, 1e2, 9):
        o = classify_forward(float(f0), HARDY8, store=True)
        assert cylinder_slack(o.trajectory, HARDY8) >= -1e-8


def test_sweep_csv(tmp_path, henon20):
    out = [classify_backward(0.5, henon20), classify_backward(6.0, henon20)]
    path = tmp_path / "s.csv"
    write_sweep_csv(out, path)
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["family_parameter", "set_label", "crossings_Z0", "terminal", "eta_span_used"]
    assert float(rows[0]["family_parameter"]) == 0.5
