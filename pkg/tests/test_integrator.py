import math

import numpy as np
import pytest

from hardyhenon.dynsys import ChartId, to_offset
from hardyhenon.exponents import profile_constants
from hardyhenon.integrator import (
    Controls,
    EventKind,
    EventSpec,
    Terminal,
    count_sign_changes,
    detect_terminal,
    integrate,
)
from hardyhenon.local_analysis import seed_center_Q1, seed_plane_z0_unstable_P0, seed_unstable_P0

Z0_EVENTS = [EventSpec(EventKind.CROSS_Z0)]


def test_stationary_line_forward(henon20):
    # The line is exact in the offset chart; in (X, Y, Z) the rounding of Y_stat is
    # amplified by the q X Y term at the rate of the repelling direction of Q1.
    tr = integrate(ChartId.STAT_OFFSET, np.array([1.0, 0.0, 0.0]), 1, (), Controls(atol=1e-300), henon20,
                   t0=0.0, t_end=10.0, terminals=())
    dev = tr.states[:, 1:]
    assert np.max(np.abs(dev)) <= 1e-8
    assert np.all(np.diff(tr.t) > 0)
    assert tr.t[-1] == pytest.approx(10.0)


def test_stationary_line_reaches_q1(henon20):
    tr = integrate(ChartId.STAT_OFFSET, np.array([1.0, 0.0, 0.0]), 1, (), Controls(atol=1e-300), henon20, t0=0.0)
    assert tr.terminal is Terminal.HIT_Q1
    assert np.all(tr.states[:, 1:] == 0.0)
    assert detect_terminal(tr, henon20) is Terminal.HIT_Q1


def test_plane_x0_stays_in_plane(henon20):
    tr = integrate(ChartId.FULL_PHASE, np.array([0.0, -1.0, 3.0]), 1, (), Controls(), henon20, t0=0.0, t_end=20.0)
    assert np.all(tr.states[:, 0] == 0.0)


def test_backward_center_orbit_crosses_twice(henon20):
    k = profile_constants(henon20).Z0 * 0.999
    s = seed_center_Q1(k, 1e6, henon20)
    tr = integrate(ChartId.STAT_OFFSET, s.offset_state, -1, Z0_EVENTS, Controls(atol=1e-300), henon20, t0=s.t0)
    assert len(tr.events_of(EventKind.CROSS_Z0)) >= 2


def test_event_located_on_closed_form_crossing(henon20):
    # X' = 2X from X = 1 at eta = 0: X = e^2 exactly at eta = 1
    spec = EventSpec(EventKind.CUSTOM, func=lambda t, u: u[0] - math.e**2, name="X_e2")
    tr = integrate(ChartId.PLANE_Z0, np.array([1.0, 0.0]), 1, [spec], Controls(rtol=1e-12, atol=1e-14), henon20,
                   t0=0.0, t_end=2.0)
    (ev,) = tr.events_of("X_e2")
    assert ev.t == pytest.approx(1.0, abs=1e-12)


def test_grazing_event_counted_once(henon20):
    spec = EventSpec(EventKind.CUSTOM, func=lambda t, u: 1e-11 * ((t - 1.0) ** 2 - 0.01), name="graze")
    tr = integrate(ChartId.PLANE_Z0, np.array([1.0, 0.0]), 1, [spec], Controls(rtol=1e-12, atol=1e-14), henon20,
                   t0=0.0, t_end=2.0)
    ev = tr.events_of("graze")
    assert len(ev) == 1 and ev[0].direction == 0
    wide = EventSpec(EventKind.CUSTOM, func=lambda t, u: (t - 1.0) ** 2 - 0.01, name="cross")
    tr = integrate(ChartId.PLANE_Z0, np.array([1.0, 0.0]), 1, [wide], Controls(rtol=1e-12, atol=1e-14), henon20,
                   t0=0.0, t_end=2.0)
    assert len(tr.events_of("cross")) == 2


def test_event_direction_filter(henon20):
    up = EventSpec(EventKind.CUSTOM, "up", func=lambda t, u: (t - 1.0) ** 2 - 0.01, name="c")
    tr = integrate(ChartId.PLANE_Z0, np.array([1.0, 0.0]), 1, [up], Controls(), henon20, t0=0.0, t_end=2.0)
    (ev,) = tr.events_of("c")
    assert ev.t == pytest.approx(1.1, abs=1e-9)
    with pytest.raises(ValueError):
        EventSpec(EventKind.CROSS_Z0, "sideways")


def test_events_satisfy_their_equation(henon20):
    k = profile_constants(henon20).Z0 * 0.6
    s = seed_center_Q1(k, 1e4, henon20)
    specs = [EventSpec(EventKind.CROSS_Z0), EventSpec(EventKind.CROSS_Y_STAT)]
    tr = integrate(ChartId.STAT_OFFSET, s.offset_state, -1, specs, Controls(atol=1e-300), henon20, t0=s.t0)
    Z0 = profile_constants(henon20).Z0
    for e in tr.events_of(EventKind.CROSS_Z0):
        assert abs(e.state[2]) <= 1e-10 * Z0
    # Z' = Z (sigma + 2 + (p - 1) Y) changes sign exactly where Y = Y_stat
    for e in tr.events_of(EventKind.CROSS_Y_STAT):
        assert abs(e.state[1]) <= 1e-10
    assert len(tr.events_of(EventKind.CROSS_Z0)) == count_sign_changes(tr.states[:, 2])
    times = [e.t for e in tr.events]
    assert times == sorted(times, reverse=True) or times == sorted(times)


def test_direction_symmetry(henon20):
    u0 = np.array([0.5, -0.2, 3.0])
    c = Controls(rtol=1e-12, atol=1e-14)
    fw = integrate(ChartId.FULL_PHASE, u0, 1, (), c, henon20, t0=0.0, t_end=1.0)
    bw = integrate(ChartId.FULL_PHASE, fw.final_state(), -1, (), c, henon20, t0=1.0, t_end=0.0)
    assert np.allclose(bw.final_state(), u0, rtol=1e-7, atol=1e-9)


def test_terminal_l0_escapes_to_q5(henon20):
    tr = integrate(ChartId.PLANE_Z0, seed_plane_z0_unstable_P0(1e-8, henon20), 1, (), Controls(), henon20)
    assert tr.terminal is Terminal.ESCAPE_Q5


def _stays_in_strip_after(tr, params, span=5.0) -> bool:
    u = to_offset(tr.phase()[-1][None, :], params)[0]
    ext = integrate(ChartId.STAT_OFFSET, u, 1, (), Controls(atol=1e-300), params,
                    t0=tr.t[-1], t_end=tr.t[-1] + span, terminals=())
    Y = ext.phase()[:, 1]
    return bool(ext.t[-1] >= tr.t[-1] + span - 1e-9 and np.all((Y >= params.y_stat) & (Y < 0.0)))


def test_strip_terminal_sound_on_stationary_line(henon20):
    tr = integrate(ChartId.STAT_OFFSET, np.array([1.0, 0.0, 0.0]), 1, (), Controls(atol=1e-300), henon20, t0=0.0)
    assert tr.terminal is Terminal.HIT_Q1
    assert _stays_in_strip_after(tr, henon20)


def test_strip_terminal_sound_on_accepted_orbit(hardy8):
    # The orbit accepted by the strip criterion, continued forward for 5 more units of eta.
    from hardyhenon.verification import hardy8_candidate

    c = hardy8_candidate()
    assert c.trajectory.terminal is Terminal.HIT_Q1
    assert _stays_in_strip_after(c.trajectory, hardy8)


def test_convergence_order(henon20):
    # error against a tight reference versus step count gives the empirical order
    u0 = np.array([0.5, -0.2, 3.0])
    run = lambda c: integrate(ChartId.FULL_PHASE, u0, 1, (), c, henon20, t0=0.0, t_end=0.5, terminals=())
    ref = run(Controls(rtol=1e-13, atol=1e-15)).final_state()
    errs, steps = [], []
    for rtol in (1e-6, 1e-9):
        tr = run(Controls(rtol=rtol, atol=rtol * 1e-2))
        errs.append(np.max(np.abs(tr.final_state() - ref) / np.abs(ref)))
        steps.append(tr.meta["nsteps"])
    order = math.log(errs[0] / errs[1]) / math.log(steps[1] / steps[0])
    assert order >= 4.0
    assert errs[1] < 1e-8


def test_csv_output(tmp_path, henon20):
    tr = integrate(ChartId.FULL_PHASE, np.array([0.5, -0.2, 3.0]), 1, Z0_EVENTS, Controls(), henon20, t0=0.0, t_end=1.0)
    tr.to_csv(tmp_path / "t.csv", tmp_path / "e.csv")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head == "eta,X,Y,Z"
    assert (tmp_path / "e.csv").read_text().splitlines()[0].startswith("eta,kind")
