import csv
import json

import pytest

from sdlab import cli


def run(tmp_path, *args):
    code = cli.main([*args, "--out", str(tmp_path)])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    return code, manifest


def test_thm1_example(tmp_path):
    code, man = run(tmp_path, "run", "thm1", "--levels", "3", "--indices", "4,16,64", "--weights", "1,0.25,0.1111")
    assert code == 0 and man["status"] == 0
    rows = list(csv.reader((tmp_path / "trace_shannon_thm1.csv").open()))
    assert len(rows) - 1 >= 3
    assert all(v["holds"] for v in man["verdicts"])
    assert man["config"]["indices"] == [4, 16, 64]


def test_thm3_zero_perturbation(tmp_path):
    code, _ = run(tmp_path, "run", "thm3", "--perturbation", "zero")
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "trace_sinecrossing_thm3.csv").open()))
    assert all(float(r["grid_max"]) == 0.0 for r in rows)


def test_thm4_condition_ii_exit_2(tmp_path, capsys):
    code, man = run(tmp_path, "run", "thm4", "--indices", "12,145")
    assert code == 2
    assert "condition ii)" in capsys.readouterr().err
    assert "condition ii)" in man["error"]


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("# desk run\nindices = 4,16\ngrid-step = 0.125\nweights = 1, 0.5\n")
    code, man = run(tmp_path, "run", "thm1", "--config", str(conf), "--grid-step", "0.25")
    assert code == 0
    assert man["config"]["grid_step"] == 0.25
    assert man["config"]["weights"] == [1.0, 0.5]


def test_bad_config_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert cli.main(["run", "thm1", "--config", str(conf), "--out", str(tmp_path)]) == 2


def test_nonpositive_parameter(tmp_path):
    assert cli.main(["run", "thm1", "--grid-step", "0", "--out", str(tmp_path)]) == 2


def test_unknown_perturbation(tmp_path):
    assert cli.main(["run", "thm3", "--perturbation", "gauss:3", "--out", str(tmp_path)]) == 2


def test_empty_battery_selection(tmp_path):
    code, man = run(tmp_path, "verify-all", "--only", "")
    assert code == 2 and man["status"] == 2


def test_fault_injection(tmp_path, capsys):
    code, man = run(tmp_path, "verify", "thm4", "harmonic", "--inject-fault", "corrupt-coefficients")
    assert code == 1
    verdicts = {v["name"]: v["holds"] for v in man["verdicts"]}
    assert verdicts["harmonic_log_scan"]
    assert not verdicts["thm4_decomposition[m=1]"]
    assert "thm4_decomposition" in capsys.readouterr().err


def test_construct_and_norm(tmp_path):
    assert cli.main(["construct", "thm4", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "thm4_f1.csv").read_text().startswith("k,c_k\n")
    assert cli.main(["norm", "--indices", "1,5", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "norms.csv").read_text().splitlines()
    assert lines[0] == "signal,value,error" and len(lines) == 3


def test_construct_thm2_reports_partial_schedule(tmp_path):
    code, man = run(tmp_path, "construct", "thm2")
    assert code == 0
    assert man["info"]["complete"] is False
    assert len(man["info"]["schedule"]) == 2


def test_trace_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["trace", "thm4", "--grid-step", "0.25", "--out", str(d)]) == 0
    assert (a / "trace_thm4.csv").read_bytes() == (b / "trace_thm4.csv").read_bytes()
    assert b"\r" not in (a / "trace_thm4.csv").read_bytes()


def test_oracle_precision(tmp_path):
    code, man = run(tmp_path, "run", "thm1", "--indices", "4,16", "--precision", "oracle")
    assert code == 0
    assert any(v["name"] == "thm1_probe_oracle" for v in man["verdicts"])


def test_argparse_rejects_unknown_experiment(tmp_path):
    with pytest.raises(SystemExit) as e:
        cli.main(["run", "thm9"])
    assert e.value.code == 2
