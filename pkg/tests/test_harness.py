import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from osgevrey import ConfigError, SchemaVersionError, aggregate, run_scenario, summarize
from osgevrey.cli import main
from osgevrey.harness import read_reports, validate_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, data, name="scn.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_profile_check_scenario(tmp_path):
    status, outcome = run_scenario(CONFIGS / "profile_exp.yaml", tmp_path)
    assert status == 0
    assert outcome.summary["minimal_M"] == pytest.approx(2.0, rel=1e-2)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True and summary["result"]["minimal_M"] == outcome.summary["minimal_M"]


def test_sweep_reports_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, {"kind": "resolvent-sweep", "numerics": {"N": 48},
                            "params": {"ids": ["musmall", "GMMray-first"], "count": 3,
                                       "ns": [20, 40]}})
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "reports.jsonl").read_bytes()
    assert a and a == (tmp_path / "b" / "reports.jsonl").read_bytes()


def test_aggregate_single_file_equals_summary(tmp_path):
    cfg = _write(tmp_path, {"kind": "resolvent-sweep", "numerics": {"N": 48},
                            "params": {"ids": ["musmall"], "count": 3, "ns": [20]}})
    run_scenario(cfg, tmp_path)
    path = tmp_path / "reports.jsonl"
    merged = aggregate([path])
    assert merged["ids"] == summarize(read_reports(path))
    assert aggregate([]) == {}


def test_aggregate_trend_across_resolutions(tmp_path):
    cfg = _write(tmp_path, {"kind": "resolvent-sweep", "numerics": {"N": 48},
                            "params": {"ids": ["musmall"], "count": 3, "ns": [20]}})
    run_scenario(cfg, tmp_path / "lo")
    run_scenario(cfg, tmp_path / "hi", resolution_scale=2.0)
    out = aggregate([tmp_path / "lo" / "reports.jsonl", tmp_path / "hi" / "reports.jsonl"])
    (row,) = out["trend"]
    assert set(row["resolutions"]) == {"48", "96"}
    assert row["drift_percent"] < 10.0


def test_schema_mismatch_rejected(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text(json.dumps({"inequality_id": "x", "lhs": 1.0, "rhs_shape": 1.0,
                             "schema_version": 99}) + "\n")
    with pytest.raises(SchemaVersionError):
        read_reports(p)
    with pytest.raises(SchemaVersionError):
        validate_config({"schema_version": 2, "kind": "airy-check"})


@pytest.mark.parametrize("data, fragment", [
    ({"profile": "exp"}, "kind"),
    ({"kind": "airy-check", "params": {"count": 10, "colour": 1}}, "params"),
    ({"kind": "os-solve", "params": {"nu": -1.0}}, "params.nu"),
    ({"kind": "os-solve", "numerics": {"N": 4}}, "numerics.N"),
    ({"kind": "os-solve", "params": {"lam": "abc"}}, "params.lam"),
    ({"kind": "warp"}, "kind"),
])
def test_config_errors_name_the_field(data, fragment):
    with pytest.raises(ConfigError) as info:
        validate_config(data)
    assert fragment in str(info.value)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["check-profile", "--config", str(CONFIGS / "profile_exp.yaml"),
                 "--out", str(tmp_path)]) == 0
    assert main(["airy", "--config", str(CONFIGS / "profile_exp.yaml")]) == 2
    missing = _write(tmp_path, {"profile": "exp"}, "missing.yaml")
    assert main(["check-profile", "--config", str(missing)]) == 2
    broken = tmp_path / "broken.yaml"
    broken.write_text("kind: [profile-check\n")
    assert main(["check-profile", "--config", str(broken)]) == 2
    assert "broken.yaml:" in capsys.readouterr().err


def test_failed_acceptance_exit_status(tmp_path):
    cfg = _write(tmp_path, {"kind": "profile-check", "profile": "tanh"})
    assert main(["check-profile", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "osgevrey", "aggregate"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and json.loads(res.stdout) == {}


@pytest.mark.parametrize("config", ["solve.yaml", "corrector.yaml", "airy.yaml"])
def test_shipped_configs_pass(config, tmp_path):
    status, _ = run_scenario(CONFIGS / config, tmp_path)
    assert status == 0
