"""Command-line entry point: exponents, sweep, shoot, portrait, profile, verify.

Exit codes: 0 success, 1 failed checks, 2 invalid parameters, 3 no candidate
found by ``shoot``.  Artifacts go to ``--out`` (overridden by the HENON_OUT
environment variable) together with a JSON manifest of the run.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError
from .exponents import RegimeParams, is_finite, profile_constants, theory_summary
from .integrator import Controls, Thresholds
from .portraits import plane_portrait
from .profiles import direct_shoot_ssode, stationary_profile
from .shooting import (
    ShootingConfig,
    bisect_forward,
    find_brackets,
    find_forward_brackets,
    find_k_star,
    multiplicity_search,
    sweep_backward,
    sweep_forward,
    write_manifest,
    write_sweep_csv,
)
from .svg import line_plot

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_NO_CANDIDATE = 3


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v) if is_finite(v) else "inf"


def _json_exp(v):
    return v if isinstance(v, (int, float)) else "inf"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=20, help="space dimension")
    common.add_argument("--sigma", type=float, default=1.5, help="weight exponent")
    common.add_argument("--p", type=float, default=10.0, help="reaction exponent")
    common.add_argument("--out", default="henon_out", help="output directory (HENON_OUT overrides)")
    common.add_argument("--rtol", type=float, default=1e-10)
    common.add_argument("--atol", type=float, default=1e-300)
    common.add_argument("--span", type=float, default=200.0, help="maximum eta-span per orbit")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed-x0", type=float, default=1e4, help="X of the centre-manifold seeds at Q1")
    common.add_argument("--strip-x", type=float, default=1e3, help="X beyond which the strip criterion applies")
    common.add_argument("--grid", type=int, default=256)
    common.add_argument("--mode", choices=["backward", "forward"], default=None)

    ap = argparse.ArgumentParser(prog="hardyhenon", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("exponents", parents=[common], help="critical exponents and derived constants")
    sp = sub.add_parser("sweep", parents=[common], help="classify an orbit family over a grid")
    sp = sub.add_parser("shoot", parents=[common], help="locate connecting orbits and export profiles")
    sp.add_argument("--max-k", type=int, default=1, help="number of backward candidates to look for")
    sp = sub.add_parser("portrait", parents=[common], help="invariant-plane portraits")
    sp.add_argument("--plane", choices=["X0", "Z0"], required=True)
    sp = sub.add_parser("profile", parents=[common], help="profile from origin data or the stationary profile")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--f0", type=float, help="f(0) for a direct shot of the profile equation")
    g.add_argument("--stationary", action="store_true")
    sp.add_argument("--xi-max", type=float, default=10.0)
    sp = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    sp.add_argument("--only", default="", help="comma-separated criterion numbers")
    return ap


def _config(ns) -> ShootingConfig:
    return ShootingConfig(
        seed_x0=ns.seed_x0,
        controls=Controls(rtol=ns.rtol, atol=ns.atol, max_span=ns.span),
        thresholds=Thresholds(x_strip=ns.strip_x),
        grid=ns.grid,
        workers=ns.workers,
    )


def _outdir(ns) -> Path:
    out = Path(os.environ.get("HENON_OUT") or ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(ns, params, cfg, outputs, outcome, t0) -> dict:
    return {
        "command": ns.command,
        "version": __version__,
        "params": params.as_dict(),
        "mode": ns.mode,
        "config": cfg.as_dict(),
        "outputs": sorted(str(o) for o in outputs),
        "wall_time_s": time.perf_counter() - t0,
        "outcome": outcome,
    }


def _mode(ns, params) -> str:
    return ns.mode or ("backward" if params.sigma > 0.0 else "forward")


def cmd_exponents(ns, params: RegimeParams) -> int:
    th = theory_summary(params)
    rows = [("p_S", th.p_S), ("p_JL", th.p_JL), ("p_L" if params.sigma >= 0 else "pbar_L", th.p_L_or_pbarL)]
    try:
        c = profile_constants(params)
        rows += [("alpha", c.alpha), ("C(sigma)", c.C_sigma), ("Z0", c.Z0), ("A", c.A), ("B", c.B)]
    except DomainError as exc:
        rows.append(("constants", f"undefined ({exc})"))
    rows += [
        ("gap", th.lepin_gap),
        ("predicted zeros", th.zero_count),
        ("existence (gap > 8)", th.existence),
        ("multiplicity", th.multiplicity_lower_bound),
        ("conjectured non-existence", th.conjectured_nonexistence),
    ]
    print(f"N={params.N} sigma={params.sigma:g} p={params.p:g}")
    for k, v in rows:
        print(f"  {k:<26} {_fmt(v)}")
    for n in th.notes:
        print(f"  note: {n}")
    return EXIT_OK


def _sweep(params, cfg, mode):
    return sweep_backward(params, cfg) if mode == "backward" else sweep_forward(params, cfg)


def cmd_sweep(ns, params: RegimeParams, t0: float) -> int:
    cfg = _config(ns)
    mode = _mode(ns, params)
    out = _outdir(ns)
    outcomes = _sweep(params, cfg, mode)
    path = out / f"sweep_{mode}.csv"
    write_sweep_csv(outcomes, path)
    counts: dict[str, int] = {}
    for o in outcomes:
        counts[o.set_label] = counts.get(o.set_label, 0) + 1
    print(f"{mode} sweep over {len(outcomes)} samples: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    write_manifest(out / "manifest.json", _manifest(ns, params, cfg, [path], {"labels": counts}, t0))
    return EXIT_OK


def cmd_shoot(ns, params: RegimeParams, t0: float) -> int:
    cfg = _config(ns)
    mode = _mode(ns, params)
    out = _outdir(ns)
    outcomes = _sweep(params, cfg, mode)
    sweep_path = out / f"sweep_{mode}.csv"
    write_sweep_csv(outcomes, sweep_path)
    outputs = [sweep_path]
    if mode == "backward":
        if ns.max_k > 1:
            cands = multiplicity_search(ns.max_k, params, cfg)
        else:
            br = find_brackets(outcomes)
            cands = [find_k_star(br[0], params, cfg)] if br else []
        missing = f"no W bracket at grid {cfg.grid}"
    else:
        br = find_forward_brackets(outcomes)
        cands = [bisect_forward(br[0], params, cfg)] if br else []
        missing = f"no A/C bracket at grid {cfg.grid}"
    if not cands:
        print(missing)
        write_manifest(out / "manifest.json", _manifest(ns, params, cfg, outputs, {"candidates": [], "message": missing}, t0))
        return EXIT_NO_CANDIDATE
    for i, c in enumerate(cands, start=1):
        prof_path = out / f"profile_{i}.csv"
        traj_path = out / f"trajectory_{i}.csv"
        ev_path = out / f"events_{i}.csv"
        c.profile.to_csv(prof_path)
        c.trajectory.to_csv(traj_path, ev_path)
        svg_path = out / f"profile_{i}.svg"
        C = profile_constants(params).C_sigma
        pr = c.profile
        line_plot(
            [(np.log(pr.xi), pr.g, "g = xi^(2alpha) f"), (np.log(pr.xi), np.full(pr.xi.size, C), "C(sigma)")],
            svg_path, title=f"candidate {i}", xlabel="ln xi", ylabel="g",
        )
        outputs += [prof_path, traj_path, ev_path, svg_path]
        name = "k" if mode == "backward" else "f0"
        print(
            f"candidate {i}: {name}={c.family_parameter:.15g} crossings={c.crossings} origin={c.origin.label} "
            f"f0={c.f0:.10g} K={c.tail_K:.10g} C(sigma)={C:.10g} verified={c.verified}"
        )
    write_manifest(out / "manifest.json", _manifest(ns, params, cfg, outputs, {"candidates": [c.summary() for c in cands]}, t0))
    return EXIT_OK


def cmd_portrait(ns, params: RegimeParams, t0: float) -> int:
    cfg = _config(ns)
    out = _outdir(ns)
    controls = Controls(rtol=ns.rtol, atol=max(ns.atol, 1e-12), max_span=ns.span)
    curves = plane_portrait(ns.plane, params, controls)
    outputs, series, status = [], [], {}
    for c in curves:
        path = out / f"portrait_{ns.plane}_{c.name.replace('->', '_to_')}.csv"
        c.trajectory.to_csv(path)
        outputs.append(path)
        st = c.trajectory.states
        series.append((st[:, 0], st[:, 1], c.name))
        if c.expected is not None:
            status[c.name] = {"terminal": c.trajectory.terminal.label, "expected": c.expected.label, "ok": c.ok}
            print(f"{c.name}: {c.trajectory.terminal.label} ({'ok' if c.ok else 'expected ' + c.expected.label})")
    labels = ("Y", "Z") if ns.plane == "X0" else ("X", "Y")
    if ns.plane == "X0":
        xlim = (-(params.N - 2.0) - 2.0, 4.0)
        ylim = (0.0, 3.0 * profile_constants(params).Z0)
    else:
        xlim, ylim = (0.0, 30.0), (-(params.N - 2.0) - 2.0, 30.0)
    svg_path = out / f"portrait_{ns.plane}.svg"
    line_plot(series, svg_path, title=f"plane {ns.plane}", xlabel=labels[0], ylabel=labels[1], xlim=xlim, ylim=ylim)
    outputs.append(svg_path)
    write_manifest(out / "manifest.json", _manifest(ns, params, cfg, outputs, status, t0))
    return EXIT_OK if all(c.ok for c in curves) else EXIT_FAILED


def cmd_profile(ns, params: RegimeParams, t0: float) -> int:
    cfg = _config(ns)
    out = _outdir(ns)
    if ns.stationary:
        prof = stationary_profile(params, np.geomspace(1e-2, ns.xi_max, 400))
        path = out / "profile_stationary.csv"
        outcome = {"source": "stationary"}
    else:
        prof = direct_shoot_ssode(ns.f0, params, (None, ns.xi_max))
        path = out / "profile_direct.csv"
        outcome = {"source": "direct", "terminal": prof.terminal, **{k: v for k, v in prof.meta.items()}}
        print(f"f0={ns.f0:g}: {prof.terminal}" + (f" at xi0={prof.meta['xi0']:.10g}" if "xi0" in prof.meta else ""))
    prof.to_csv(path)
    write_manifest(out / "manifest.json", _manifest(ns, params, cfg, [path], outcome, t0))
    return EXIT_OK


def cmd_verify(ns) -> int:
    from .verification import run_criteria

    only = {int(x) for x in ns.only.split(",") if x.strip()} or None
    results = run_criteria(only, workers=ns.workers)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def run(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    t0 = time.perf_counter()
    if ns.command == "verify":
        return cmd_verify(ns)
    try:
        params = RegimeParams(ns.N, ns.sigma, ns.p)
        if ns.rtol <= 0 or ns.atol <= 0 or ns.span <= 0 or ns.grid < 2 or ns.workers < 1 or ns.seed_x0 <= 0:
            raise DomainError("tolerances, span, seed X0 and worker count must be positive; grid >= 2")
        if ns.command == "exponents":
            return cmd_exponents(ns, params)
        if ns.command in ("sweep", "shoot"):
            mode = _mode(ns, params)
            if mode == "backward" and params.sigma <= 0.0:
                raise DomainError("backward shooting needs sigma > 0")
            if mode == "forward" and not params.sigma < 0.0:
                raise DomainError("forward shooting needs sigma < 0")
            profile_constants(params)
            return cmd_sweep(ns, params, t0) if ns.command == "sweep" else cmd_shoot(ns, params, t0)
        if ns.command == "portrait":
            return cmd_portrait(ns, params, t0)
        if ns.command == "profile":
            if ns.f0 is not None and not ns.f0 > 0.0:
                raise DomainError("f0 must be positive")
            return cmd_profile(ns, params, t0)
    except DomainError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
