import csv
import json

import pytest

from voteflow.cli import main
from voteflow.graph import load_graph


def test_generate_writes_valid_graph(tmp_path, capsys):
    out = tmp_path / "g.json"
    trace = tmp_path / "g.trace"
    code = main(
        [
            "generate",
            "--t", "50",
            "--d", "0.5",
            "--k", "2",
            "--gamma", "1.0",
            "--seed", "3",
            "--out", str(out),
            "--trace-out", str(trace),
        ]
    )
    assert code == 0
    g = load_graph(out)
    assert g.n_agents == 50
    lines = trace.read_text().strip().splitlines()
    assert len(lines) == 50
    assert lines[0] == "V"


def test_resolve_prints_summary_json(tmp_path, capsys):
    out = tmp_path / "g.json"
    main(["generate", "--t", "40", "--k", "2", "--seed", "1", "--out", str(out)])
    capsys.readouterr()
    for mechanism in ("optimal", "approx", "greedy", "random", "splittable", "shortest"):
        code = main(["resolve", "--graph", str(out), "--mechanism", mechanism])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["mechanism"] in (mechanism, "greedy")
        assert payload["utilized_votes"] == 40
        assert payload["max_weight"] >= 1
        assert payload["wall_time"] >= 0


def test_resolve_emits_assignment(tmp_path, capsys):
    out = tmp_path / "g.json"
    main(["generate", "--t", "30", "--k", "2", "--seed", "2", "--out", str(out)])
    target = tmp_path / "assignment.json"
    code = main(
        ["resolve", "--graph", str(out), "--mechanism", "optimal",
         "--emit-assignment", str(target)]
    )
    assert code == 0
    doc = json.loads(target.read_text())
    assert len(doc["choice"]) == 30
    g = load_graph(out)
    for i, c in enumerate(doc["choice"]):
        if g.is_voter[i]:
            assert c is None
        else:
            assert 0 <= c < len(g.nominations[i])


def test_resolve_missing_graph_fails(tmp_path, capsys):
    code = main(["resolve", "--graph", str(tmp_path / "nope.json"), "--mechanism", "greedy"])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_oracle_prints_csv(capsys):
    code = main(["oracle", "--d", "0.5", "--k-max", "3", "--t-list", "1,2"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "quantity,index,value"
    rows = [line.split(",") for line in lines[1:]]
    alpha = {int(r[1]): float(r[2]) for r in rows if r[0] == "alpha"}
    expected = {int(r[1]): float(r[2]) for r in rows if r[0] == "expected_first_voter_weight"}
    assert alpha[1] == 1.0
    assert alpha[2] == pytest.approx(3**0.5 - 1)
    assert expected[1] == 1.0
    assert expected[2] == pytest.approx(1.5)


def test_compare_command_writes_csv(tmp_path):
    out = tmp_path / "cmp.csv"
    code = main(
        [
            "compare",
            "--t", "40",
            "--runs", "2",
            "--sample-every", "20",
            "--seed", "1",
            "--mechanisms", "single,greedy",
            "--out", str(out),
        ]
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "mechanism"
    assert len(rows) == 1 + 2 * 2 * 2


def test_invalid_plan_returns_nonzero(tmp_path, capsys):
    code = main(
        ["compare", "--t", "40", "--runs", "0", "--sample-every", "20",
         "--out", str(tmp_path / "x.csv")]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_histogram_and_bench_commands(tmp_path):
    hist = tmp_path / "hist.csv"
    code = main(
        ["histogram", "--t", "30", "--runs", "2", "--sample-every", "30",
         "--mechanisms", "optimal,greedy", "--out", str(hist)]
    )
    assert code == 0
    bench = tmp_path / "bench.csv"
    code = main(
        ["bench", "--t", "30", "--runs", "1", "--sample-every", "15",
         "--mechanisms", "greedy", "--out", str(bench)]
    )
    assert code == 0
    for path, expected_rows in ((hist, 2 * 2), (bench, 2)):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + expected_rows


def test_sweep_commands(tmp_path):
    out = tmp_path / "k.csv"
    code = main(
        ["sweep-k", "--t", "30", "--runs", "1", "--sample-every", "30",
         "--k-list", "1,2", "--out", str(out)]
    )
    assert code == 0
    out2 = tmp_path / "p.csv"
    code = main(
        ["sweep-p", "--t", "30", "--runs", "1", "--sample-every", "30",
         "--p-list", "0.0,1.0", "--out", str(out2)]
    )
    assert code == 0
    for path in (out, out2):
        with open(path, newline="") as fh:
            assert len(list(csv.reader(fh))) == 3
