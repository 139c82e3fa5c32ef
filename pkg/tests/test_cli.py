"""Config parsing, command exit codes, and artifact consistency."""

import csv
import json
import math

import pytest

from cavityw.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    main,
    parse_config,
)
from cavityw.errors import ConfigurationError

TWO_PI = 2 * math.pi

FAST_RUN = {"run": {"tolerance": 1e-6, "samples": 40}}


def write_cfg(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def test_defaults_resolve_to_working_point():
    cfg = parse_config(None)
    params = cfg.device()
    assert params.n == 3
    assert params.g["c1"] / (TWO_PI * 1e6) == pytest.approx(55.6, abs=0.05)
    assert params.crosstalk("c1", "c2") == pytest.approx(0.01 * params.g_max)
    dec = cfg.decoherence_params()
    assert dec.kappa["c1"] == pytest.approx(1.0 / 5e-6)
    assert cfg.basis().dimension == 14


def test_g1_overrides_b(tmp_path):
    path = write_cfg(tmp_path, {"system": {"g1_mhz": 100.0}})
    params = parse_config(path).device()
    assert params.g["c1"] == pytest.approx(TWO_PI * 100e6, rel=1e-12)


def test_unknown_keys_name_their_path(tmp_path):
    path = write_cfg(tmp_path, {"system": {"bee": 9}})
    with pytest.raises(ConfigurationError, match=r"system\.bee"):
        parse_config(path)
    path = write_cfg(tmp_path, {"chaos": {}})
    with pytest.raises(ConfigurationError, match="chaos"):
        parse_config(path)


def test_validation_messages(tmp_path):
    cases = [
        ({"decoherence": {"kappa_us": -5.0}}, r"decoherence\.kappa_us"),
        ({"system": {"b": 0.5}}, r"system\.b"),
        ({"system": {"r": -1.0}}, r"system\.r"),
        ({"run": {"tolerance": 0.5}}, r"run\.tolerance"),
        ({"run": {"samples": 1}}, r"run\.samples"),
        ({"system": {"n": 3, "delta_ghz": [-0.5]}}, r"system\.delta_ghz"),
    ]
    for payload, pattern in cases:
        with pytest.raises(ConfigurationError, match=pattern):
            parse_config(write_cfg(tmp_path, payload))


def test_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError, match="JSON"):
        parse_config(str(p))
    with pytest.raises(ConfigurationError, match="not found"):
        parse_config(str(tmp_path / "missing.json"))


def test_config_hash_tracks_content(tmp_path):
    a = parse_config(write_cfg(tmp_path, {"system": {"b": 9.0}}))
    b = parse_config(write_cfg(tmp_path, {"system": {"b": 10.0}}))
    assert a.config_hash() != b.config_hash()
    assert a.config_hash() == parse_config(None).config_hash()


def test_check_command(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["check", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads((out / "conditions.json").read_text())
    assert all(entry["passed"] for entry in report)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "check"
    assert manifest["artifacts"] == ["conditions.json"]
    assert "PASS" in capsys.readouterr().out


def test_check_flags_breakage(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, {"system": {"r": 1.1}})
    assert main(["check", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = {e["condition"]: e for e in json.loads((out / "conditions.json").read_text())}
    assert not report["detuning-matching"]["passed"]
    assert report["detuning-matching"]["measured"] == pytest.approx(0.1, rel=1e-9)


def test_transfer_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, FAST_RUN)
    assert main(["transfer", "--config", cfg, "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["final_fidelity"] == pytest.approx(0.981, abs=0.01)
    assert manifest["t_transfer_us"] == pytest.approx(0.081, rel=1e-6)
    assert manifest["integrator"]["steps"] > 0
    with (out / "trace.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["t_us", "F", "F2"]
    assert len(rows) == 1 + manifest["resolved_config"]["run"]["samples"]
    assert float(rows[-1][1]) == pytest.approx(manifest["final_fidelity"], rel=1e-9)
    assert "t_transfer" in capsys.readouterr().out


def test_transfer_broken_uses_matched_horizon(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, {**FAST_RUN, "system": {"r": 1.1}})
    assert main(["transfer", "--config", cfg, "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    # horizon comes from the unbroken device, fidelity suffers
    assert manifest["t_transfer_us"] == pytest.approx(0.081, rel=1e-6)
    assert manifest["final_fidelity"] < 0.981


def test_sweep_b_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(
        tmp_path,
        {
            "run": {
                "grid_start": 8.0, "grid_stop": 9.0, "grid_step": 1.0,
                "crosstalk_multiples": [0.0, 0.01],
                "tolerance": 1e-6, "samples": 40,
            }
        },
    )
    assert main(["sweep-b", "--config", cfg, "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["artifacts"] == ["sweep_b_ct0.csv", "sweep_b_ct0.01.csv", "sweep_b.svg"]
    for name in manifest["artifacts"]:
        assert (out / name).exists()
    with (out / "sweep_b_ct0.01.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "b" and rows[0][1] == "F"
    assert [float(r[0]) for r in rows[1:]] == [8.0, 9.0]
    assert all(0.9 < float(r[1]) <= 1.0 for r in rows[1:])
    svg = (out / "sweep_b.svg").read_text()
    assert svg.lstrip().startswith("<?xml")


def test_sweep_r_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(
        tmp_path,
        {
            "run": {
                "grid_start": 0.95, "grid_stop": 1.05, "grid_step": 0.05,
                "tolerance": 1e-6, "samples": 40,
            }
        },
    )
    assert main(["sweep-r", "--config", cfg, "--out", str(out)]) == EXIT_OK
    with (out / "sweep_r.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "r"
    by_r = {float(r[0]): r for r in rows[1:]}
    assert set(by_r) == {0.95, 1.0, 1.05}
    assert by_r[1.0][-2] == "1" and by_r[0.95][-2] == "0"  # conditions_ok column
    assert float(by_r[1.0][1]) > float(by_r[0.95][1])


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"system": {"b": -2}})
    assert main(["check", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    cfg = write_cfg(tmp_path, {"run": {"grid_start": 5.0, "grid_stop": 4.0, "grid_step": 1.0}})
    assert main(["sweep-b", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_cli_tol_and_workers_override(tmp_path):
    out = tmp_path / "out"
    cfg = write_cfg(tmp_path, FAST_RUN)
    code = main(["transfer", "--config", cfg, "--out", str(out), "--tol", "1e-5"])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["run"]["tolerance"] == 1e-5
    assert main(["check", "--config", cfg, "--out", str(out), "--workers", "0"]) == EXIT_CONFIG
