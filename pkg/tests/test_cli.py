import csv
import json

import pytest

from varent import cli


def read_rows(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    return [ln for ln in lines if ln.startswith("#")], list(csv.reader(body))


def test_grid_parsing():
    assert cli.parse_grid("0:1:0.1") == [round(0.1 * i, 12) for i in range(11)]
    assert cli.parse_grid("0.2:0.2:0.1") == [0.2]
    for bad in ("0:1", "1:0:0.1", "0:1:0.3", "a:b:c"):
        with pytest.raises(cli.ConfigError):
            cli.parse_grid(bad)


def test_detect_writes_trajectory_and_verdict(tmp_path):
    out = tmp_path / "run.csv"
    js = tmp_path / "run.json"
    code = cli.main(["detect", "--state", "bell", "--map", "reduction", "--ansatz", "fig2", "--shots", "8192",
                     "--lr", "0.5", "--seed", "7", "--out", str(out), "--json", str(js)])
    assert code == 0
    comments, rows = read_rows(out)
    assert rows[0] == ["iteration", "loss"]
    assert comments[0].startswith("# varent ")
    assert any(c.startswith("# config: ") and '"seed": 7' in c for c in comments)
    assert any(c == "# gamma: 2.0" for c in comments)
    assert comments[-1] == "# verdict: Entangled"
    doc = json.loads(js.read_text())
    assert doc["summary"]["verdict"] == "Entangled"
    assert len(doc["rows"]) == len(rows) - 1


def test_outputs_are_byte_identical(tmp_path):
    args = ["detect", "--state", "isotropic", "--p", "0.7", "--map", "ppt", "--mode", "probabilistic",
            "--max-iters", "15", "--seed", "3", "--no-early-stop"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    comments, rows = read_rows(a)
    assert "# M: 4258" in comments
    assert len(rows) == 16


def test_quantify_grid_independent_of_threads(tmp_path, monkeypatch):
    args = ["quantify", "--state", "isotropic", "--n", "1", "--p-grid", "0:1:0.5", "--max-iters", "40", "--seed", "1"]
    one, four = tmp_path / "1.csv", tmp_path / "4.csv"
    assert cli.main(args + ["--out", str(one)]) == 0
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    assert cli.main(args + ["--out", str(four)]) == 0
    assert one.read_bytes() == four.read_bytes()
    _, rows = read_rows(one)
    assert rows[0] == ["p", "E_N_estimated", "E_N_exact", "L1", "beta"]
    assert [r[0] for r in rows[1:]] == ["0.0", "0.5", "1.0"]
    assert float(rows[3][2]) == pytest.approx(1.0)


def test_oracle_and_scan(tmp_path):
    out = tmp_path / "curves.csv"
    assert cli.main(["oracle", "--family", "isotropic", "--n", "2", "--map", "ppt,reduction,enhanced",
                     "--grid", "101", "--out", str(out)]) == 0
    _, rows = read_rows(out)
    assert len(rows) == 102
    last = [float(x) for x in rows[-1]]
    assert last[1:4] == pytest.approx([-0.25, -0.75, -0.5], abs=1e-12)
    scan = tmp_path / "scan.csv"
    assert cli.main(["scan", "--family", "breuer", "--out", str(scan)]) == 0
    _, rows = read_rows(scan)
    assert float(rows[1][1]) == pytest.approx(0.5, abs=1e-6)


def test_budget(tmp_path, capsys):
    assert cli.main(["budget", "--map", "reduction", "--n", "2"]) == 0
    out = capsys.readouterr().out
    assert "# gamma: 4.5" in out
    assert out.strip().splitlines()[-1] == "reduction,2,4.5,0.1,0.05,21554"


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "bell", "ansatz": "fig2", "seed": 4, "max-iters": 3, "no_early_stop": True}))
    out = tmp_path / "o.csv"
    assert cli.main(["detect", "--config", str(cfg), "--seed", "9", "--out", str(out)]) == 0
    comments, rows = read_rows(out)
    assert "# seed: 9" in comments
    assert len(rows) == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["detect", "--map", "nonsense"],
        ["detect", "--shots", "-1"],
        ["detect", "--state", "file"],
        ["detect", "--mode", "direct", "--map", "ppt"],
        ["detect", "--state", "isotropic", "--p", "1.5"],
        ["detect", "--state", "bell", "--map", "choi"],
        ["budget", "--map", "enhanced", "--n", "1"],
        ["budget", "--epsilon", "5"],
        ["quantify", "--p-grid", "0:1:0.3"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["detect", "--config", str(cfg)]) == 2


def test_runtime_error_exit_1(monkeypatch, tmp_path):
    def boom(*a, **k):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr(cli.detect, "ved_deterministic", boom)
    assert cli.main(["detect", "--out", str(tmp_path / "x.csv")]) == 1


def test_state_file(tmp_path):
    from varent import states

    path = tmp_path / "rho.json"
    states.save_state(states.isotropic(1, 0.9), path)
    out = tmp_path / "o.csv"
    assert cli.main(["detect", "--state", "file", "--state-file", str(path), "--map", "ppt", "--out", str(out)]) == 0
    assert read_rows(out)[0][-1] == "# verdict: Entangled"
