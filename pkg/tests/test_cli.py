import json
import socket
import subprocess
import sys
import time
import urllib.request
import xml.etree.ElementTree as ET

import pytest

from alviz import cli


def run_flags(tmp_path, **extra):
    flags = {
        "--synthetic": "piecewise_constant",
        "--n": "300",
        "--d": "3",
        "--noise": "0.1",
        "--batch-size": "15",
        "--batches": "4",
        "--seed": "11",
        "--out": str(tmp_path / "run.json"),
    }
    flags.update(extra)
    out = []
    for key, value in flags.items():
        out.extend([key, value])
    return ["run"] + out


def test_run_writes_artifact_and_summary(tmp_path, capsys):
    rc = cli.main(run_flags(tmp_path))
    captured = capsys.readouterr()
    assert rc == 0
    assert (tmp_path / "run.json").exists()
    assert "final mse" in captured.out
    assert "artifact:" in captured.out
    raw = json.loads((tmp_path / "run.json").read_text())
    assert raw["config"]["batch_size"] == 15
    assert raw["config"]["num_batches"] == 4


def test_run_twice_is_byte_identical(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert cli.main(run_flags(tmp_path, **{"--out": str(a)})) == 0
    assert cli.main(run_flags(tmp_path, **{"--out": str(b)})) == 0
    assert a.read_bytes() == b.read_bytes()


def test_exit_codes_for_usage_errors(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["run", "--bogus-flag", "1"]) == 1
    assert cli.main(["run", "--synthetic", "plane"]) == 1  # no --out
    assert cli.main(["run", "--out", str(tmp_path / "x.json")]) == 1  # no data source
    err = capsys.readouterr().err
    assert "error:" in err


def test_exit_code_io_for_missing_data(tmp_path):
    rc = cli.main(
        ["run", "--data", str(tmp_path / "ghost.csv"), "--target", "y",
         "--out", str(tmp_path / "x.json")]
    )
    assert rc == 2


def test_run_from_csv(tmp_path):
    csv_path = tmp_path / "tiny.csv"
    rows = ["y,a,b"]
    rng_vals = [(i * 37 % 11, i % 7, (i * 13) % 5) for i in range(60)]
    rows += [f"{y},{a},{b}" for y, a, b in rng_vals]
    csv_path.write_text("\n".join(rows) + "\n")
    rc = cli.main(
        ["run", "--data", str(csv_path), "--target", "y", "--test-frac", "0.25",
         "--batch-size", "5", "--batches", "3", "--seed", "2",
         "--out", str(tmp_path / "csv_run.json")]
    )
    assert rc == 0
    raw = json.loads((tmp_path / "csv_run.json").read_text())
    assert raw["config"]["source_id"] == "tiny.csv"


def test_fraction_flag_accepts_ratio(tmp_path):
    rc = cli.main(run_flags(tmp_path, **{"--test-frac": "75/300"}))
    assert rc == 0
    raw = json.loads((tmp_path / "run.json").read_text())
    assert raw["config"]["test_fraction"] == 0.25


@pytest.mark.parametrize("bad", ["abc", "0", "1", "2/1", "-0.5", "1/0"])
def test_fraction_flag_rejects_bad_values(tmp_path, bad):
    assert cli.main(run_flags(tmp_path, **{"--test-frac": bad})) == 1


def test_parse_fraction_values():
    assert cli.parse_fraction("0.2128") == 0.2128
    assert cli.parse_fraction("9730/45730") == 9730 / 45730
    with pytest.raises(cli.CliError):
        cli.parse_fraction("3/3")


def test_toml_config_and_flag_precedence(tmp_path):
    config = tmp_path / "exp.toml"
    config.write_text(
        "\n".join(
            [
                "[run]",
                'synthetic = "piecewise_constant"',
                "n = 200",
                "d = 2",
                "noise = 0.1",
                "batch-size = 10",
                "batches = 2",
                "seed = 3",
                'strategies = ["al", "rn"]',
            ]
        )
    )
    out = tmp_path / "from_toml.json"
    rc = cli.main(["run", "--config", str(config), "--batches", "3", "--out", str(out)])
    assert rc == 0
    raw = json.loads(out.read_text())
    assert raw["config"]["batch_size"] == 10  # from TOML
    assert raw["config"]["num_batches"] == 3  # flag wins
    assert raw["strategies"] == ["al", "rn"]


def test_toml_unknown_key_rejected(tmp_path):
    config = tmp_path / "bad.toml"
    config.write_text("[run]\nbatch-siz = 10\n")
    assert cli.main(["run", "--config", str(config), "--out", "x.json"]) == 1
    config.write_text("batch-size = [not toml")
    assert cli.main(["run", "--config", str(config), "--out", "x.json"]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "ghost.toml"), "--out", "x"]) == 2


def test_plot_outputs(artifact_file, tmp_path, capsys):
    out_dir = tmp_path / "svg"
    rc = cli.main(
        ["plot", "--run", str(artifact_file), "--out-dir", str(out_dir),
         "--anchor", "0,0", "--k", "8"]
    )
    assert rc == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert "mse.svg" in names and "scatter.svg" in names
    heatmaps = [n for n in names if n.startswith("change_")]
    assert len(heatmaps) == 9  # 3 strategies x 3 kinds
    for name in names:
        ET.parse(out_dir / name) if name.endswith(".svg") else None


def test_plot_selection_flag_validation(artifact_file, tmp_path):
    base = ["plot", "--run", str(artifact_file), "--out-dir", str(tmp_path)]
    assert cli.main(base) == 1  # neither anchor nor rect
    assert cli.main(base + ["--anchor", "0,0", "--rect", "0,1,0,1"]) == 1
    assert cli.main(base + ["--anchor", "0,0,0"]) == 1
    assert cli.main(base + ["--anchor", "0,0", "--k", "99999"]) == 1
    assert cli.main(base + ["--rect", "1,0,0,1"]) == 1


def test_plot_empty_selection_warns_but_succeeds(artifact_file, tmp_path, capsys):
    rc = cli.main(
        ["plot", "--run", str(artifact_file), "--out-dir", str(tmp_path / "empty"),
         "--rect", "1000,1001,1000,1001"]
    )
    captured = capsys.readouterr()
    assert rc == 0
    assert "empty selection" in captured.err
    ET.parse(tmp_path / "empty" / "change_al_vs_original.svg")


def test_plot_missing_artifact(tmp_path):
    rc = cli.main(
        ["plot", "--run", str(tmp_path / "ghost.json"), "--out-dir", str(tmp_path),
         "--anchor", "0,0"]
    )
    assert rc == 2


def test_hist_outputs(artifact_file, tmp_path):
    out_dir = tmp_path / "hist"
    rc = cli.main(
        ["hist", "--run", str(artifact_file), "--out-dir", str(out_dir),
         "--prefix", "40", "--bins", "12"]
    )
    assert rc == 0
    ET.parse(out_dir / "hist.svg")
    lines = (out_dir / "hist.csv").read_text().strip().splitlines()
    assert lines[0] == "bin_lo,bin_hi,al,uc,rn,all_data"
    assert len(lines) == 13  # header + one row per bin
    counts = [sum(int(c) for c in line.split(",")[2:5]) for line in lines[1:]]
    assert sum(counts) == 3 * 40


def test_hist_prefix_zero_and_bad_bins(artifact_file, tmp_path):
    rc = cli.main(
        ["hist", "--run", str(artifact_file), "--out-dir", str(tmp_path), "--prefix", "0"]
    )
    assert rc == 0
    rc = cli.main(
        ["hist", "--run", str(artifact_file), "--out-dir", str(tmp_path), "--bins", "0"]
    )
    assert rc == 1


def test_serve_port_in_use(artifact_file):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        rc = cli.main(["serve", "--run", str(artifact_file), "--port", str(port)])
    finally:
        blocker.close()
    assert rc == 3


def test_serve_missing_artifact(tmp_path):
    rc = cli.main(["serve", "--run", str(tmp_path / "ghost.json")])
    assert rc == 2
    assert cli.main(["serve"]) == 1


def test_serve_subprocess_answers_http(artifact_file):
    proc = subprocess.Popen(
        [sys.executable, "-m", "alviz.cli", "serve", "--run", str(artifact_file),
         "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        assert "serving" in line and "http://" in line
        port = int(line.rsplit(":", 1)[1])
        body = None
        for _ in range(50):
            try:
                with urllib.request.urlopen(
                    f"http://127.0.0.1:{port}/api/runs", timeout=2
                ) as resp:
                    body = json.loads(resp.read())
                break
            except OSError:
                time.sleep(0.1)
        assert body is not None, "server never answered"
        assert body[0]["strategies"] == ["al", "uc", "rn"]
    finally:
        proc.terminate()
        proc.wait(timeout=10)
