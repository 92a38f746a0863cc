import json
import subprocess
import sys

import pytest

from metaminer.cli import main
from metaminer.metafeatures import DIM

ROSTER = {"AM", "HM", "IM"}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    d = tmp_path_factory.mktemp("pipe")
    logs = d / "logs"
    assert main(["generate", "--out", str(logs), "--n-logs", "8", "--seed", "5"]) == 0
    assert main(["extract", str(logs), "--out", str(d / "features.csv"), "--jobs", "1"]) == 0
    assert main(["build-metadb", str(logs), "--roster", "am,hm,im", "--out", str(d / "db.csv"),
                 "--no-timing", "--jobs", "1"]) == 0
    assert main(["train", "--db", str(d / "db.csv"), "--out", str(d / "model.json"), "--seed", "1",
                 "--trees", "20"]) == 0
    assert main(["evaluate-model", "--db", str(d / "db.csv"), "--out", str(d / "report.json"),
                 "--csv", str(d / "report.csv"), "--repetitions", "3", "--seed", "2", "--trees", "20"]) == 0
    return d


def test_pipeline_outputs(pipeline):
    names = {p.name for p in pipeline.iterdir()}
    assert {"features.csv", "db.csv", "db.csv.json", "db.quality.csv", "db.ranks.png", "model.json",
            "model.importance.csv", "model.importance.png", "report.json", "report.csv",
            "report.performance.png"} <= names
    assert len(list((pipeline / "logs").glob("*.truth.json"))) == 8
    assert (pipeline / "logs" / "corpus.json").exists()
    header = (pipeline / "features.csv").read_text().splitlines()[0].split(",")
    assert len(header) == DIM + 1
    report = json.loads((pipeline / "report.json").read_text())
    assert report["repetitions"] == 3 and set(report["methods"]) == {"meta_model", "majority", "random"}
    qrows = (pipeline / "db.quality.csv").read_text().splitlines()
    assert len(qrows) == 1 + 8 * 3 and qrows[1].endswith(",")  # time column left blank


def test_extract_is_byte_stable(pipeline, tmp_path):
    main(["extract", str(pipeline / "logs"), "--out", str(tmp_path / "again.csv"), "--jobs", "2"])
    assert (tmp_path / "again.csv").read_bytes() == (pipeline / "features.csv").read_bytes()


def test_recommend_prints_a_roster_algorithm(pipeline, capsys):
    log = sorted((pipeline / "logs").glob("*.csv"))[0]
    assert main(["recommend", "--log", str(log), "--model", str(pipeline / "model.json"), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["algorithm"] in ROSTER
    assert sum(payload["votes"].values()) == pytest.approx(1.0)


def test_recommend_run_writes_net(pipeline, tmp_path, capsys):
    log = sorted((pipeline / "logs").glob("*.csv"))[1]
    assert main(["recommend", "--log", str(log), "--model", str(pipeline / "model.json"), "--run",
                 "--pnml", str(tmp_path / "n.pnml")]) == 0
    assert "quality: f=" in capsys.readouterr().out
    assert (tmp_path / "n.pnml").read_text().startswith("<?xml")


def test_discover_and_evaluate(pipeline, tmp_path, capsys):
    log = sorted((pipeline / "logs").glob("*.csv"))[0]
    assert main(["discover", "--log", str(log), "-a", "imf", "--noise", "0.3", "--dot", str(tmp_path / "n.dot")]) == 0
    assert "algorithm: IMf" in capsys.readouterr().out
    assert (tmp_path / "n.dot").read_text().startswith("digraph")
    assert main(["evaluate", str(log), "--algorithms", "am,im", "--no-timing", "--out", str(tmp_path / "q.csv")]) == 0
    lines = (tmp_path / "q.csv").read_text().splitlines()
    assert lines[0] == "log_id,algorithm,f,p,g,s,t" and len(lines) == 3


def test_manifest_json(capsys):
    assert main(["manifest", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["dimension"] == DIM == len(payload["features"])


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["discover", "--log", "x.csv", "-a", "nope"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_data_error_exits_two(tmp_path, capsys):
    assert main(["extract", str(tmp_path / "missing.csv")]) == 2
    (tmp_path / "bad.csv").write_text("case,activity\n1,a\n")
    assert main(["extract", str(tmp_path / "bad.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "metaminer.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "0.1.0" in out.stdout
