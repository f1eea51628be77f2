import json

import pytest

from chunksched.cli import main

MINIMAL = """\
network: {kind: line, length: 2}
code: {k: 16, q: 4}
policy: {kind: rp}
run: {realizations: 2, trials: 2, seed: 3}
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "min.yaml"
    p.write_text(MINIMAL)
    return p


def test_simulate_writes_one_row(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", str(cfg_file), "--out", str(out)]) == 0
    lines = (out / "simulate.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[2].startswith("-,config,rp,")
    assert (out / "manifest.json").exists() and (out / "simulate.json").exists()


def test_simulate_override(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", str(cfg_file), "--policy", "mdf", "--m", "4", "--delta", "4",
                 "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["policy"]["kind"] == "mdf"


def test_bad_divisor_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("network: {length: 2}\ncode: {k: 16, q: 3}\n")
    assert main(["simulate", str(p), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "code.q" in err and "code.k" in err


def test_runtime_error_exit_code(tmp_path):
    p = tmp_path / "dead.yaml"
    p.write_text("network: {length: 1, loss: {pe: 1.0}}\ncode: {k: 4, q: 1}\nrun: {max_slots: 10}\n")
    assert main(["simulate", str(p), "--out", str(tmp_path)]) == 2


def test_unknown_table_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--table", "XI"])
    assert exc.value.code == 1


def test_seed_env_and_flag(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setenv("CHUNKSCHED_SEED", "99")
    main(["simulate", str(cfg_file), "--out", str(tmp_path / "a")])
    main(["simulate", str(cfg_file), "--out", str(tmp_path / "b"), "--seed", "5"])
    seed_a = json.loads((tmp_path / "a" / "manifest.json").read_text())["master_seed"]
    seed_b = json.loads((tmp_path / "b" / "manifest.json").read_text())["master_seed"]
    assert (seed_a, seed_b) == (99, 5)


def test_replay_is_byte_identical(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", str(cfg_file), "--out", str(a), "--trace"])
    assert main(["replay", str(a / "manifest.json"), "--out", str(b), "--jobs", "2"]) == 0
    for name in ("simulate.csv", "simulate.json", "trace.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_delay_pmf_output(capsys):
    assert main(["delay-pmf", "lognormal", "0.5", "0.5", "--rows", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1] == "1,0.15866"
    main(["delay-pmf", "unit"])
    out = capsys.readouterr().out.splitlines()
    assert out[1] == "1,1.00000" and out[2].startswith("#")
    main(["delay-pmf", "lognormal", "1", "1", "--rows", "1"])
    assert "continuous mean=4.4817" in capsys.readouterr().out


def test_delay_pmf_bad_params():
    assert main(["delay-pmf", "lognormal", "1"]) == 1
    assert main(["delay-pmf", "lognormal", "1", "-1"]) == 1


def test_metric_check_report(tmp_path):
    args = ["metric-check", "--states", "5", "--samples", "2000", "--seed", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "metric_check.csv").read_bytes() == (tmp_path / "b" / "metric_check.csv").read_bytes()
    assert main(["metric-check", "--samples", "10", "--out", str(tmp_path)]) == 1


def test_verify_optimality_command(tmp_path):
    out = tmp_path / "v"
    assert main(["verify-optimality", "--m", "3", "--delta", "3", "--n0", "4", "--fixtures", "3",
                 "--seed", "1", "--out", str(out)]) == 0
    lines = (out / "optimality.csv").read_text().splitlines()
    assert lines[0].startswith("# verify-optimality") and len(lines) == 3
