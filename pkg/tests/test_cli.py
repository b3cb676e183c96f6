import csv
import json

import pytest
import yaml

from rngaudit.cli import main
from rngaudit.stats import STATS_COLUMNS

from conftest import SCRIPT


@pytest.fixture
def plan(tmp_path):
    (tmp_path / "script.yaml").write_text(yaml.safe_dump(SCRIPT), encoding="utf-8")
    path = tmp_path / "plan.yaml"
    path.write_text(yaml.safe_dump({
        "run_id": "cli", "seed": 9, "calls_per_cell": 60, "languages": ["EN", "ES"],
        "ranges": [5, 10], "temperatures": [0.5, 1.0],
        "providers": [{"name": "m", "kind": "mock", "mock_script": "script.yaml"}],
    }), encoding="utf-8")
    return path


@pytest.fixture
def store(tmp_path, plan):
    s = tmp_path / "store"
    assert main(["run", "--config", str(plan), "--store", str(s)]) == 0
    return s


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_and_resume(tmp_path, plan, store, capsys):
    assert len(list(store.glob("*.csv"))) == 8
    assert main(["resume", "--config", str(plan), "--store", str(store)]) == 0
    assert "0 new calls" in capsys.readouterr().out


def test_analyze_and_table(tmp_path, store, capsys):
    out = tmp_path / "stats.csv"
    assert main(["analyze", "--store", str(store), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert list(rows[0]) == STATS_COLUMNS and len(rows) == 8
    # several ranges need an explicit choice
    assert main(["report", "table", "--stats", str(out), "--metric", "ri", "--out", str(tmp_path / "t.csv")]) == 1
    md = tmp_path / "t.md"
    assert main(["report", "table", "--stats", str(out), "--range", "5", "--out", str(md)]) == 0
    assert md.read_text().startswith("| provider | EN | ES | row_avg |")
    assert main(["report", "table", "--stats", str(out), "--range", "10", "--metric", "p",
                 "--out", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").read_text().startswith("provider,EN,ES,row_avg")
    assert main(["report", "table", "--stats", str(out), "--range", "5", "--metric", "bogus",
                 "--out", str(md)]) == 1


def test_heatmap(tmp_path, store):
    svg = tmp_path / "h.svg"
    args = ["report", "heatmap", "--store", str(store), "--provider", "m", "--language", "EN", "--range", "5"]
    assert main(args + ["--out", str(svg)]) == 0
    assert svg.read_text().count('class="cell"') == 10
    mat = tmp_path / "h.csv"
    assert main(args + ["--norm", "rowmax", "--out", str(mat)]) == 0
    assert read_csv(mat)[0]["temperature"] == "0.5"
    bad = ["report", "heatmap", "--store", str(store), "--provider", "zz", "--language", "EN", "--range", "5"]
    assert main(bad + ["--out", str(mat)]) == 1


def test_violin(tmp_path, store):
    out = tmp_path / "v.csv"
    assert main(["report", "violin", "--store", str(store), "--group-by", "range", "--out", str(out)]) == 0
    assert [r["group"] for r in read_csv(out)] == ["1-10", "1-5"]


def test_baseline(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["baseline", "--range", "5", "--samples", "100", "--runs", "10", "--seed", "1",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 10 and all(r["temperature"] == "1.0" for r in rows)
    assert "p-value" in capsys.readouterr().out


def test_cot(tmp_path, store, capsys):
    out = tmp_path / "c.csv"
    assert main(["cot", "--store", str(store), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows and list(rows[0]) == ["cell_key", "call_index", "labels", "reasoning_language",
                                      "n_proposed", "final_stated", "mismatch"]
    assert all(r["labels"] == "Instinct" and r["final_stated"] == "3" for r in rows)
    pat = tmp_path / "p.csv"
    pat.write_text("label,language_code,pattern\nCentralValue,EN,\\bokay\\b\n", encoding="utf-8")
    assert main(["cot", "--store", str(store), "--patterns", str(pat), "--out", str(out)]) == 0
    assert all(r["labels"] == "CentralValue" for r in read_csv(out))


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["analyze", "--store", "x"])
    assert e.value.code == 1
    assert main(["run", "--config", str(tmp_path / "missing.yaml"), "--store", str(tmp_path / "s")]) == 1


def test_storage_failure(tmp_path, plan, store):
    assert main(["analyze", "--store", str(tmp_path / "nowhere"), "--out", str(tmp_path / "x.csv")]) == 3
    assert main(["resume", "--config", str(plan), "--store", str(tmp_path / "fresh")]) == 3
    manifest = json.loads((store / "run.json").read_text())
    manifest["plan"]["calls_per_cell"] = 1
    (store / "run.json").write_text(json.dumps(manifest))
    assert main(["resume", "--config", str(plan), "--store", str(store)]) == 3


def test_provider_failure(tmp_path):
    (tmp_path / "script.yaml").write_text(yaml.safe_dump(
        {"entries": [{"weights": {"1": 1}, "reject_status": 401}]}), encoding="utf-8")
    plan = tmp_path / "plan.yaml"
    plan.write_text(yaml.safe_dump({
        "run_id": "x", "calls_per_cell": 2, "languages": ["EN"], "ranges": [5], "temperatures": [1.0],
        "providers": [{"name": "m", "kind": "mock", "mock_script": "script.yaml"}],
    }), encoding="utf-8")
    assert main(["run", "--config", str(plan), "--store", str(tmp_path / "s")]) == 2


def test_missing_api_key(tmp_path, monkeypatch):
    monkeypatch.delenv("RNGAUDIT_KEY_NOPE", raising=False)
    plan = tmp_path / "plan.yaml"
    plan.write_text(yaml.safe_dump({
        "run_id": "x", "calls_per_cell": 1, "languages": ["EN"], "ranges": [5], "temperatures": [1.0],
        "providers": [{"name": "v", "kind": "openai-compatible", "base_url": "http://127.0.0.1:9",
                       "api_key_ref": "nope"}],
    }), encoding="utf-8")
    assert main(["run", "--config", str(plan), "--store", str(tmp_path / "s")]) == 1
