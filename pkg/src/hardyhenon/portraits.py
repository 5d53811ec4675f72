"""Phase portraits of the invariant planes {X = 0} and {Z = 0}.

Each portrait is a list of curves.  The distinguished connections carry the
terminal they are expected to reach; auxiliary curves fill in the picture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import ChartId
from .errors import DomainError
from .exponents import RegimeParams, profile_constants
from .integrator import Controls, Terminal, Trajectory, integrate
from .local_analysis import seed_plane_x0_stable_P1, seed_plane_x0_unstable_P0, seed_plane_z0_unstable_P0

__all__ = ["PortraitCurve", "plane_portrait", "seed_plane_z0_center_Q1", "xy_projection"]


@dataclass(frozen=True)
class PortraitCurve:
    name: str
    trajectory: Trajectory
    expected: Terminal | None = None

    @property
    def ok(self) -> bool:
        return self.expected is None or self.trajectory.terminal is self.expected


def seed_plane_z0_center_Q1(params: RegimeParams, X0: float = 1e4) -> np.ndarray:
    """Point of the orbit entering Q1 inside {Z = 0}: Y = Y_stat + Y_stat(N−2+Y_stat)/(q X0)."""
    ys = params.y_stat
    q = (params.p - 1.0) / (params.sigma + 2.0)
    return np.array([X0, ys + ys * (params.N - 2.0 + ys) / (q * X0)])


def plane_portrait(plane: str, params: RegimeParams, controls: Controls | None = None, fan: int = 8) -> list[PortraitCurve]:
    """Curves of the portrait in the plane "X0" (coordinates Y, Z) or "Z0" (X, Y)."""
    controls = controls or Controls()
    curves: list[PortraitCurve] = []
    if plane == "X0":
        chart = ChartId.PLANE_X0
        tr = integrate(chart, seed_plane_x0_unstable_P0(1e-8, params), 1, (), controls, params)
        curves.append(PortraitCurve("P0->P2", tr, Terminal.HIT_P2))
        tr = integrate(chart, seed_plane_x0_stable_P1(1e-8, params), -1, (), controls, params)
        curves.append(PortraitCurve("Q2->P1", tr, Terminal.ESCAPE_Q2))
        Z0 = profile_constants(params).Z0
        for i, y in enumerate(np.linspace(-(params.N - 2.0), 2.0, fan)):
            for direction in (1, -1):
                tr = integrate(chart, np.array([y, 1.5 * Z0]), direction, (), controls, params)
                curves.append(PortraitCurve(f"aux{i}{'f' if direction > 0 else 'b'}", tr))
    elif plane == "Z0":
        chart = ChartId.PLANE_Z0
        tr = integrate(chart, seed_plane_z0_unstable_P0(1e-8, params), 1, (), controls, params)
        curves.append(PortraitCurve("P0->Q5", tr, Terminal.ESCAPE_Q5))
        tr = integrate(chart, seed_plane_z0_center_Q1(params), -1, (), controls, params)
        curves.append(PortraitCurve("P1->Q1", tr, Terminal.HIT_P1))
        for i, y in enumerate(np.linspace(-(params.N - 2.0), 2.0, fan)):
            for direction in (1, -1):
                tr = integrate(chart, np.array([1.0, y]), direction, (), controls, params)
                curves.append(PortraitCurve(f"aux{i}{'f' if direction > 0 else 'b'}", tr))
    else:
        raise DomainError(f"unknown plane {plane!r}; expected X0 or Z0")
    return curves


def xy_projection(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) of a three-dimensional phase trajectory."""
    xyz = traj.phase()
    return xyz[:, 0], xyz[:, 1]
