import json
from pathlib import Path

import numpy as np
import pytest

from boardeval.cli import main

TRAIN_FLAGS = [
    "--regressor", "forest", "--trees", "8", "--depth", "6", "--iterations", "6",
    "--train-fraction", "0.5", "--seed", "4",
]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "season"
    rc = main([
        "simulate", "--out", str(out), "--matches", "2", "--seed", "7",
        "--half-length", "420", "--frame-rate", "15",
        "--windows-per-half", "2", "--drills-per-half", "1", "--stops", "PK:1,TI:1,FK:1",
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def model_path(dataset, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "forest.json"
    rc = main(["train", "--data", str(dataset), "--model", str(path), *TRAIN_FLAGS])
    assert rc == 0
    return path


class TestSimulate:
    def test_layout(self, dataset):
        assert (dataset / "manifest.json").exists()
        assert (dataset / "match_0002" / "half2.events.csv").exists()

    def test_deterministic_artifacts(self, dataset, tmp_path):
        out2 = tmp_path / "season2"
        rc = main([
            "simulate", "--out", str(out2), "--matches", "2", "--seed", "7",
            "--half-length", "420", "--frame-rate", "15",
            "--windows-per-half", "2", "--drills-per-half", "1", "--stops", "PK:1,TI:1,FK:1",
        ])
        assert rc == 0
        a = (dataset / "match_0001" / "half1.frames.csv").read_bytes()
        b = (out2 / "match_0001" / "half1.frames.csv").read_bytes()
        assert a == b


class TestExtract:
    def test_writes_event_and_episode_files(self, dataset):
        rc = main(["extract", "--data", str(dataset), "--match", "match_0001"])
        assert rc == 0
        sig = dataset / "match_0001" / "half1.sig_A.csv"
        ep = dataset / "match_0001" / "half1.episode_B.csv"
        assert sig.exists() and ep.exists()
        header = sig.read_text().splitlines()[0]
        assert header == "kind,event_type,t,x,y,team,own_score,opp_score,reward"
        assert ep.read_text().splitlines()[0] == "t,e,x,y,own,opp,h,reward,terminal"


class TestHighlights:
    def test_highlights_and_recall(self, dataset):
        rc = main(["highlights", "--data", str(dataset), "--match", "match_0001", "--dump-signals"])
        assert rc == 0
        mdir = dataset / "match_0001"
        hi = mdir / "half1.highlights.csv"
        assert hi.exists()
        assert hi.read_text().splitlines()[0] == "rank,peak_t,start,end,score"
        assert (mdir / "half1.highlights_speed.csv").exists()
        assert (mdir / "half1.signals.csv").exists()
        recall = (mdir / "recall.csv").read_text().splitlines()
        assert recall[0] == "k,recall,baseline_recall"
        last = recall[-1].split(",")
        assert float(last[1]) > float(last[2])  # method beats the baseline


class TestTrain:
    def test_model_and_report_exist(self, dataset, model_path):
        doc = json.loads(model_path.read_text())
        assert doc["kind"] == "forest"
        assert "schema_hash" in doc
        report = Path(str(model_path) + ".report.csv")
        lines = report.read_text().splitlines()
        assert lines[0] == "iter,max_delta_v,train_rmse,valid_rmse"
        assert len(lines) >= 2

    def test_training_deterministic(self, dataset, tmp_path):
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        for p in (p1, p2):
            rc = main(["train", "--data", str(dataset), "--model", str(p), *TRAIN_FLAGS])
            assert rc == 0
        assert p1.read_bytes() == p2.read_bytes()


class TestHeatmapAndValue:
    def test_heatmap_outputs(self, model_path, tmp_path):
        png = tmp_path / "h.png"
        rc = main([
            "heatmap", "--model", str(model_path), "--event", "FK", "--time", "200",
            "--score", "0:0", "--side", "home", "--nx", "26", "--ny", "17",
            "--out", str(png),
        ])
        assert rc == 0
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        payload = json.loads((tmp_path / "h.grid.json").read_text())
        assert len(payload["values"]) == 26 * 17
        assert payload["M"] == pytest.approx(max(abs(v) for v in payload["values"]))

    def test_value_output(self, model_path, capsys):
        rc = main([
            "value", "--model", str(model_path), "--event", "PK", "--time", "200",
            "--x", "94", "--y", "34",
        ])
        assert rc == 0
        out = json.loads(capsys.readouterr().out.strip())
        assert np.isfinite(out["value"])

    def test_value_matches_grid_cell(self, model_path, tmp_path, capsys):
        rc = main([
            "heatmap", "--model", str(model_path), "--event", "TI", "--time", "150",
            "--nx", "105", "--ny", "68", "--out", str(tmp_path / "g.png"),
        ])
        assert rc == 0
        capsys.readouterr()
        payload = json.loads((tmp_path / "g.grid.json").read_text())
        i, j = 30, 40
        rc = main([
            "value", "--model", str(model_path), "--event", "TI", "--time", "150",
            "--x", str((i + 0.5) * 105 / 105), "--y", str((j + 0.5) * 68 / 68),
        ])
        assert rc == 0
        val = json.loads(capsys.readouterr().out.strip())["value"]
        assert val == payload["values"][j * 105 + i]

    def test_bad_score_fails_cleanly(self, model_path, capsys):
        rc = main([
            "value", "--model", str(model_path), "--event", "PK", "--time", "10",
            "--x", "1", "--y", "1", "--score", "banana",
        ])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "score" in err["error"]


class TestReport:
    def test_report_aggregates(self, model_path, capsys):
        rc = main(["report", "--models", str(model_path.parent)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "forest" in out
        assert "validation RMSE" in out

    def test_missing_dir_fails(self, tmp_path, capsys):
        rc = main(["report", "--models", str(tmp_path)])
        assert rc == 1


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"simulate": {"matches": 1, "half-length": 420,
                                                "frame-rate": 15, "windows-per-half": 1,
                                                "drills-per-half": 1, "seed": 5,
                                                "stops": "PK:1,TI:1"}}))
        out = tmp_path / "season"
        rc = main(["--config", str(cfg), "simulate", "--out", str(out), "--seed", "9"])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["master_seed"] == 9  # flag wins
        assert manifest["n_matches"] == 1  # config value used
