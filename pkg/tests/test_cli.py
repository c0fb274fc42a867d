import json
from pathlib import Path

from probepath.cli import main
from probepath.experiment import CSV_HEADER, SEED_ENV

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_plan_writes_samples(tmp_path):
    out = tmp_path / "path.csv"
    assert main(["plan", "--scenario", str(SCENARIOS / "paper_fig5.json"), "--out", str(out),
                 "--samples", "25"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,z" and len(lines) == 26
    assert [float(v) for v in lines[1].split(",")] == [0.4, 0.0, 0.0]


def test_plan_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"source": [1, 0, 0], "target": [10, 0, 0]}))
    assert main(["plan", "--scenario", str(path)]) == 1


def test_run_prints_result(capsys, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert main(["run", "--scenario", str(SCENARIOS / "paper_fig5.json"), "--condition", "with",
                 "--seed", "3"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert set(result) == {"success", "moving_time", "failure_reason"}


def test_bench_csv(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    out = tmp_path / "bench.csv"
    assert main(["bench", "--suite", str(SCENARIOS / "paper_fig5.json"), "--reps", "2",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 5


def test_bench_table(capsys, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert main(["bench", "--suite", str(SCENARIOS / "paper_fig5.json"), "--reps", "1",
                 "--format", "table"]) == 0
    assert "With Planning" in capsys.readouterr().out


def test_bad_file_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    assert main(["run", "--scenario", str(path), "--condition", "without"]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_reps(capsys):
    assert main(["bench", "--suite", str(SCENARIOS), "--reps", "0"]) == 2
