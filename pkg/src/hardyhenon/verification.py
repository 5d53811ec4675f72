"""Acceptance checks, shared by ``hardyhenon verify`` and the test suite.

Each check returns a :class:`CriterionResult` with a one-line verdict.  The
expensive candidates (the connections at (20, 1.5, 10) and (8, −0.6, 20)) are
computed once and cached.
"""

from __future__ import annotations

import contextlib
import io
import tempfile
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exponents import (
    UNBOUNDED,
    RegimeParams,
    p_joseph_lundgren,
    p_lepin,
    p_sobolev,
    profile_constants,
)
from .integrator import Terminal
from .portraits import plane_portrait
from .profiles import direct_shoot_ssode, linear_zero_count, ssode_residual, stationary_profile
from .shooting import (
    ShootingConfig,
    bisect_forward,
    find_brackets,
    find_forward_brackets,
    find_k_star,
    multiplicity_search,
    sweep_backward,
    sweep_forward,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criteria"]

HENON20 = RegimeParams(20, 1.5, 10.0)
HENON40 = RegimeParams(40, 1.5, 10.0)
HARDY8 = RegimeParams(8, -0.6, 20.0)
HARDY10 = RegimeParams(10, -0.6, 20.0)
HENON36 = RegimeParams(36, 6.0, 15.0)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f} s)"


@lru_cache(maxsize=None)
def _sweep_backward(params: RegimeParams, workers: int = 1):
    return tuple(sweep_backward(params, ShootingConfig(workers=workers)))


@lru_cache(maxsize=None)
def _sweep_forward(params: RegimeParams, workers: int = 1):
    return tuple(sweep_forward(params, ShootingConfig(workers=workers)))


@lru_cache(maxsize=None)
def henon20_candidate(workers: int = 1):
    br = find_brackets(list(_sweep_backward(HENON20, workers)))
    return find_k_star(br[0], HENON20) if br else None


@lru_cache(maxsize=None)
def hardy8_candidate(workers: int = 1):
    br = find_forward_brackets(list(_sweep_forward(HARDY8, workers)))
    return bisect_forward(br[0], HARDY8) if br else None


def c1_exponents(workers: int = 1) -> tuple[bool, str]:
    checks = [
        ("p_JL(20,1.5)", p_joseph_lundgren(20, 1.5), 3.55),
        ("p_JL(40,1.5)", p_joseph_lundgren(40, 1.5), 1.39),
        ("p_JL(8,-0.6)", p_joseph_lundgren(8, -0.6), 11.4),
        ("p_JL(10,-0.6)", p_joseph_lundgren(10, -0.6), 2.68),
        ("p_L(40,1.5)", p_lepin(40, 1.5), 6.25),
        ("pbar_L(10,-0.6)", p_lepin(10, -0.6), 5.55),
    ]
    bad = [f"{n}={v}" for n, v, ref in checks if not (isinstance(v, float) and abs(v - ref) <= 0.01)]
    if p_lepin(20, 1.5) is not UNBOUNDED:
        bad.append("p_L(20,1.5) finite")
    if p_lepin(8, -0.6) is not UNBOUNDED:
        bad.append("pbar_L(8,-0.6) finite")
    vals = ", ".join(f"{n}={v:.4f}" for n, v, _ in checks)
    return not bad, (vals + "; p_L(20,1.5)=inf, pbar_L(8,-0.6)=inf") if not bad else "mismatch: " + ", ".join(bad)


def c2_discriminant(workers: int = 1) -> tuple[bool, str]:
    worst, n = 0.0, 0
    for N in range(12, 61):
        for s in np.arange(-1.5, 4.0 + 1e-9, 0.25):
            if not N > 10 + 4 * s:
                continue
            p = p_joseph_lundgren(N, float(s))
            c = profile_constants(RegimeParams(N, float(s), p))
            worst = max(worst, abs(c.A**2 - 4.0 * c.B) / c.A**2)
            n += 1
    return worst <= 1e-6, f"max |A^2-4B|/A^2 = {worst:.2e} over {n} grid points"


def c3_stationary(workers: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(20240601)
    worst = 0.0
    xi = np.linspace(0.1, 10.0, 400)
    for _ in range(10):
        N = int(rng.integers(3, 41))
        s = float(rng.uniform(-1.9, 6.0))
        ps = p_sobolev(N, s)
        p = float(ps + rng.uniform(0.1, 20.0))
        P = RegimeParams(N, s, p)
        worst = max(worst, float(np.max(ssode_residual(stationary_profile(P, xi), P))))
    return worst <= 1e-10, f"max scaled residual {worst:.2e} over 10 random parameter sets"


def c4_zero_count(workers: int = 1) -> tuple[bool, str]:
    a = linear_zero_count(HENON20)
    b = linear_zero_count(HENON40)
    return (a, b) == (3, 2), f"zeros {a} at (20,1.5,10), {b} at (40,1.5,10)"


def c5_existence(workers: int = 1) -> tuple[bool, str]:
    c = henon20_candidate(workers)
    if c is None:
        return False, "no U/W bracket found"
    X, Y, _ = c.trajectory.ascending().phase()[0]
    C = profile_constants(HENON20).C_sigma
    ok = c.origin is Terminal.HIT_P0 and c.crossings == 2 and abs(Y) < 1e-4 and c.tail_K < C
    return ok, (
        f"k1={c.family_parameter:.12g}, origin {c.origin.label}, crossings {c.crossings}, "
        f"|Y| at smallest xi {abs(Y):.1e}, K={c.tail_K:.6f} < C={C:.6f}"
    )


def c6_henon40(workers: int = 1) -> tuple[bool, str]:
    from .cli import run

    out = _sweep_backward(HENON40, workers)
    labels = {o.set_label for o in out}
    counts = {o.crossings_Z0 for o in out}
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(io.StringIO()):
        code = run(["shoot", "--N", "40", "--sigma", "1.5", "--p", "10", "--mode", "backward", "--out", tmp,
                    "--workers", str(workers)])
    ok = "W" not in labels and code == 3 and len(counts) == 1
    return ok, f"labels {sorted(labels)}, crossing counts {sorted(counts)}, shoot exit code {code}"


def c7_hardy8(workers: int = 1) -> tuple[bool, str]:
    labels = {o.set_label for o in _sweep_forward(HARDY8, workers)}
    c = hardy8_candidate(workers)
    if c is None:
        return False, f"labels {sorted(labels)}, no A/C bracket"
    C = profile_constants(HARDY8).C_sigma
    slack = c.trajectory.meta["cylinder_slack"]
    ok = {"A", "C"} <= labels and c.profile.monotone_decreasing and c.tail_K > C and slack >= -1e-8
    return ok, (
        f"labels {sorted(labels)}, f0*={c.family_parameter:.12g}, decreasing={c.profile.monotone_decreasing}, "
        f"K={c.tail_K:.6f} > C={C:.6f}, cylinder slack {slack:.2e}"
    )


def c8_hardy10(workers: int = 1) -> tuple[bool, str]:
    out = list(_sweep_forward(HARDY10, workers))
    labels = {o.set_label for o in out}
    br = find_forward_brackets(out)
    return len(labels) == 1 and not br, f"{len(out)} samples, labels {sorted(labels)}, brackets {len(br)}"


def c9_multiplicity(workers: int = 1) -> tuple[bool, str]:
    cands = multiplicity_search(2, HENON36, ShootingConfig(workers=workers))
    ks = [c.family_parameter for c in cands]
    cr = [c.crossings for c in cands]
    ok = len(cands) >= 2 and ks[0] < ks[1] and cr[:2] == [2, 4] and all(c.verified for c in cands[:2])
    return ok, f"candidates k={['%.10g' % k for k in ks]}, crossings {cr}"


def _oracle_gap(c, params) -> float:
    pr = c.profile
    d = direct_shoot_ssode(c.f0, params, (None, 3.0))
    m = (pr.xi >= 0.1) & (pr.xi <= 3.0)
    fd = np.interp(pr.xi[m], d.xi, d.f)
    return float(np.max(np.abs(fd - pr.f[m]) / pr.f[m]))


def c10_oracle(workers: int = 1) -> tuple[bool, str]:
    a, b = henon20_candidate(workers), hardy8_candidate(workers)
    if a is None or b is None:
        return False, "candidate missing"
    ga, gb = _oracle_gap(a, HENON20), _oracle_gap(b, HARDY8)
    return max(ga, gb) <= 1e-4, f"max relative gap on [0.1, 3]: {ga:.1e} (20,1.5,10), {gb:.1e} (8,-0.6,20)"


def c11_portraits(workers: int = 1) -> tuple[bool, str]:
    parts, ok = [], True
    for plane in ("X0", "Z0"):
        for c in plane_portrait(plane, HENON20, fan=0):
            if c.expected is not None:
                ok &= c.ok
                parts.append(f"{c.name}:{c.trajectory.terminal.label}")
    return ok, ", ".join(parts)


CRITERIA = {
    1: ("exponent reproduction", c1_exponents),
    2: ("discriminant root at p_JL", c2_discriminant),
    3: ("stationary residual", c3_stationary),
    4: ("zero-count oracle", c4_zero_count),
    5: ("existence at (20,1.5,10)", c5_existence),
    6: ("non-existence signature at (40,1.5,10)", c6_henon40),
    7: ("sigma<0 existence at (8,-0.6,20)", c7_hardy8),
    8: ("sigma<0 single label at (10,-0.6,20)", c8_hardy10),
    9: ("multiplicity at (36,6,15)", c9_multiplicity),
    10: ("oracle equivalence", c10_oracle),
    11: ("invariant-plane portraits", c11_portraits),
}


def run_criterion(number: int, workers: int = 1) -> CriterionResult:
    name, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        passed, detail = fn(workers)
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        passed, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)


def run_criteria(only=None, workers: int = 1) -> list[CriterionResult]:
    return [run_criterion(n, workers) for n in sorted(CRITERIA) if only is None or n in only]

