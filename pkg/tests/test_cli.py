import json
import subprocess
import sys

import pytest

from hardyhenon.cli import run


def _argv_from_manifest(m: dict, out) -> list[str]:
    cfg = m["config"]
    argv = [
        m["command"], "--N", str(m["params"]["N"]), "--sigma", repr(m["params"]["sigma"]), "--p", repr(m["params"]["p"]),
        "--rtol", repr(cfg["controls"]["rtol"]), "--atol", repr(cfg["controls"]["atol"]),
        "--span", repr(cfg["controls"]["max_span"]), "--seed-x0", repr(cfg["seed_x0"]),
        "--strip-x", repr(cfg["thresholds"]["x_strip"]), "--grid", str(cfg["grid"]), "--out", str(out),
    ]
    if m["mode"]:
        argv += ["--mode", m["mode"]]
    return argv


def test_exponents_output(capsys):
    assert run(["exponents", "--N", "40", "--sigma", "1.5", "--p", "10"]) == 0
    out = capsys.readouterr().out
    assert "p_JL" in out and "1.39" in out
    assert "6.25" in out
    assert "multiplicity" in out


def test_invalid_parameters_exit_2(tmp_path, capsys):
    assert run(["exponents", "--N", "2", "--sigma", "1.5", "--p", "10"]) == 2
    assert run(["sweep", "--N", "20", "--sigma", "-3", "--p", "10", "--out", str(tmp_path)]) == 2
    assert run(["shoot", "--N", "20", "--sigma", "1.5", "--p", "10", "--mode", "forward", "--out", str(tmp_path)]) == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run(["exponents", "--bogus"])
    assert exc.value.code == 2


def test_shoot_henon20(tmp_path, capsys):
    code = run(["shoot", "--N", "20", "--sigma", "1.5", "--p", "10", "--mode", "backward", "--out", str(tmp_path)])
    assert code == 0
    assert "candidate 1" in capsys.readouterr().out
    assert (tmp_path / "profile_1.csv").exists() and (tmp_path / "profile_1.svg").exists()
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["outcome"]["candidates"][0]["crossings"] == 2


def test_shoot_henon40_no_candidate(tmp_path, capsys):
    code = run(["shoot", "--N", "40", "--sigma", "1.5", "--p", "10", "--mode", "backward", "--out", str(tmp_path)])
    assert code == 3
    assert "no W bracket at grid 256" in capsys.readouterr().out


def test_manifest_reruns_bit_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["sweep", "--N", "20", "--sigma", "1.5", "--p", "10", "--grid", "24", "--out", str(a)]) == 0
    m = json.loads((a / "manifest.json").read_text())
    assert run(_argv_from_manifest(m, b)) == 0
    assert (a / "sweep_backward.csv").read_bytes() == (b / "sweep_backward.csv").read_bytes()
    mb = json.loads((b / "manifest.json").read_text())
    assert mb["outcome"] == m["outcome"] and mb["config"] == m["config"]


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("HENON_OUT", str(tmp_path / "env"))
    assert run(["profile", "--stationary", "--N", "20", "--sigma", "1.5", "--p", "10", "--out", str(tmp_path / "x")]) == 0
    assert (tmp_path / "env" / "profile_stationary.csv").exists()


def test_profile_direct_and_portrait(tmp_path):
    assert run(["profile", "--f0", "0.8", "--N", "20", "--sigma", "1.5", "--p", "10", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "profile_direct.csv").exists()
    assert run(["portrait", "--plane", "X0", "--N", "20", "--sigma", "1.5", "--p", "10", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "portrait_X0.svg").read_text().startswith("<svg")


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "hardyhenon", "exponents", "--N", "20", "--sigma", "1.5", "--p", "10"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0 and "p_S" in r.stdout
