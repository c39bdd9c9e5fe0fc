import json

import pytest

from razorbus.cli import main
from razorbus.config import ExperimentConfig, config_from_dict, config_to_dict, load_config
from razorbus.errors import ConfigError


def test_defaults_fill_everything():
    cfg = config_from_dict({})
    assert cfg == ExperimentConfig()
    assert cfg.deadlines.main_deadline == 600e-12 and cfg.controller.window_len == 10_000


def test_roundtrip_through_dict():
    cfg = config_from_dict({"seed": 3, "geometry": {"pitch_um": 0.9}, "corners": ["slow,100,ir"]})
    doc = config_to_dict(cfg)
    back = config_from_dict(json.loads(json.dumps(doc)))
    assert config_to_dict(back) == doc
    assert back.deadlines == cfg.deadlines and back.table_path is None


def test_every_unknown_key_is_listed():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"sed": 1, "geometry": {"pich_um": 1}, "controller": {"window": 5},
                          "deadlines": {"skew": 1}})
    text = str(info.value)
    for key in ("sed", "geometry.pich_um", "controller.window", "deadlines.skew"):
        assert key in text
    assert len(info.value.problems) == 4


def test_bad_values_reported():
    with pytest.raises(ConfigError, match="error_targets"):
        config_from_dict({"error_targets": [0.03]})
    with pytest.raises(ConfigError, match="corners"):
        config_from_dict({"corners": ["slow,50,ir"]})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "none.json"))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["tables", "--out", str(out)]) == 0
    return out


def test_calibrate_prints_budget_delay(tmp_path, capsys):
    assert main(["calibrate", "--config", "default", "--out", str(tmp_path)]) == 0
    line = [l for l in capsys.readouterr().out.splitlines() if "worst-corner" in l][0]
    ps = float(line.split(":")[-1].split()[0])
    assert 599.4 <= ps <= 600.0


def test_run_without_table_is_actionable(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), "--trace", "gen:quiet:n=10"]) == 1
    assert "razorbus tables" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trace_lenght": 5}))
    assert main(["calibrate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "trace_lenght" in capsys.readouterr().err


def test_calibration_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"geometry": {"resistivity": 2e-6}}))
    assert main(["calibrate", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_run_writes_reports(workdir, capsys):
    argv = ["run", "--out", str(workdir), "--corner", "typical,100,no-ir",
            "--trace", "gen:two-phase:a=per-bit-toggle,a_p=0.1,b=uniform-random,len_a=30000,n=100000"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "energy gain" in out and "errors" in out
    assert (workdir / "timeline.csv").read_text().startswith("# razorbus:timeline v1\n")
    summary = json.loads((workdir / "summary.json").read_text())
    assert summary["run"]["cycles"] >= 100_000


def test_lowered_floor_returns_fatal_code(workdir, capsys):
    argv = ["run", "--out", str(workdir), "--corner", "slow,100,ir", "--floor-offset-mv", "40",
            "--trace", "gen:two-phase:a=quiet,b=adversarial,len_a=400000,len_b=100000,n=600000"]
    assert main(argv) == 2
    assert "FATAL" in capsys.readouterr().err


def test_check_reports_hold_result(workdir, capsys):
    code = main(["check", "--out", str(workdir), "--max-lines", "2"])
    out = capsys.readouterr().out
    assert out.startswith("hold check")
    assert code == (0 if "PASS" in out.splitlines()[0] else 1)


@pytest.mark.parametrize("argv", [
    ["sweep", "--trace", "bench:pb02-light", "--length", "20000", "--corner", "all"],
    ["oracle", "--trace", "bench:pb06-bursty", "--length", "40000"],
    ["run", "--suite", "--length", "20000"],
    ["geometry", "--ratio-mult", "1.95", "--length", "20000"],
])
def test_commands_are_deterministic(workdir, tmp_path, argv):
    snapshots = []
    for _ in range(2):
        assert main(argv + ["--out", str(workdir), "--table", str(workdir / "table.json")]) == 0
        snapshots.append({p.name: p.read_bytes() for p in sorted(workdir.iterdir())
                          if p.suffix in (".csv", ".json")})
    assert snapshots[0] == snapshots[1]
