"""End-to-end command tests, in process via main(argv)."""

import json

import numpy as np
import pytest

from elmloc.cli import main
from elmloc.dataset import DatasetDescriptor, register_dataset
from elmloc.synthetic import _write_csv

register_dataset(DatasetDescriptor(
    name="TST1", train_size=720, test_size=240, n_aps=40,
    L_default=60, c_default=1.0, db_type="MB-MF",
), overwrite=True)


@pytest.fixture(scope="module")
def data_root(tmp_path_factory, syn_small):
    root = tmp_path_factory.mktemp("cli_data")
    d = root / "TST1"
    d.mkdir()
    train, test = syn_small
    _write_csv(d / "train.csv", train)
    _write_csv(d / "test.csv", test)
    (d / "manifest.json").write_text(json.dumps({
        "ap_columns": [0, 39], "floor_col": 40, "building_col": 41,
        "sentinel": 100,
    }))
    return root


@pytest.fixture(scope="module")
def model_path(tmp_path_factory, data_root):
    out = tmp_path_factory.mktemp("cli_model") / "tst1.model.json"
    rc = main(["train", "--dataset", "TST1", "--data-root", str(data_root),
               "--quantize", "--out", str(out)])
    assert rc == 0
    return out


class TestIngest:
    def test_summary(self, data_root, capsys):
        assert main(["ingest", "--dataset", "TST1",
                     "--data-root", str(data_root)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["train_samples"] == 720
        assert summary["test_samples"] == 240
        assert summary["n_aps"] == 40
        assert summary["buildings"] == 3
        assert summary["floors"] == [0, 1, 2, 3]
        assert summary["classes"] == 12
        assert summary["matches_registry"] is True
        assert 0.1 < summary["detected_fraction"] < 0.5

    def test_size_mismatch_warns(self, data_root, tmp_path, capsys):
        register_dataset(DatasetDescriptor(
            name="TST2", train_size=9999, test_size=240, n_aps=40,
            L_default=60, c_default=1.0, db_type="MB-MF",
        ), overwrite=True)
        link = tmp_path / "TST2"
        link.symlink_to(data_root / "TST1")
        assert main(["ingest", "--dataset", "TST2",
                     "--data-root", str(tmp_path)]) == 0
        captured = capsys.readouterr()
        assert json.loads(captured.out)["matches_registry"] is False
        assert "registry expects" in captured.err

    def test_missing_files(self, tmp_path, capsys):
        assert main(["ingest", "--dataset", "UJI1",
                     "--data-root", str(tmp_path)]) == 2
        assert "missing file" in capsys.readouterr().err

    def test_unknown_dataset_without_files(self, tmp_path, capsys):
        assert main(["ingest", "--dataset", "NOPE",
                     "--data-root", str(tmp_path)]) == 2


class TestTrain:
    def test_model_written(self, model_path):
        assert model_path.exists()
        payload = json.loads(model_path.read_text())
        assert payload["format"] == "elmloc-model-v1"

    def test_echoes_resolved_config(self, data_root, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["train", "--dataset", "TST1", "--data-root", str(data_root),
                     "--L", "30", "--seed", "2", "--out", str(out)]) == 0
        lines = capsys.readouterr().out.splitlines()
        cfg = json.loads(next(l for l in lines if l.startswith("config: "))[8:])
        assert cfg["L"] == 30
        assert cfg["seed"] == 2
        assert cfg["c"] == 1.0  # registry default fills the gap
        assert any(l.startswith("config_digest: ") for l in lines)
        assert any("training floor hit" in l for l in lines)
        assert any("train time" in l for l in lines)

    def test_flags_override_config_file(self, data_root, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps({"L": 25, "c": 5.0, "seed": 7}))
        out = tmp_path / "m.json"
        assert main(["train", "--dataset", "TST1", "--data-root", str(data_root),
                     "--config", str(cfg_path), "--c", "1.5",
                     "--out", str(out)]) == 0
        lines = capsys.readouterr().out.splitlines()
        cfg = json.loads(next(l for l in lines if l.startswith("config: "))[8:])
        assert cfg["L"] == 25      # from file
        assert cfg["c"] == 1.5     # flag wins
        assert cfg["seed"] == 7    # from file

    def test_auto_sweep(self, data_root, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["train", "--dataset", "TST1", "--data-root", str(data_root),
                     "--L", "auto", "--L-max", "40", "--step", "20",
                     "--out", str(out)]) == 0
        captured = capsys.readouterr().out
        assert "sweep grid: {20, 40}" in captured
        assert "selected L = " in captured
        assert out.exists()


class TestPredict:
    def test_labeled_queries_report_hits(self, data_root, model_path,
                                         tmp_path, capsys):
        out = tmp_path / "pred.csv"
        rc = main(["predict", "--model", str(model_path),
                   "--queries", str(data_root / "TST1" / "test.csv"),
                   "--out", str(out)])
        assert rc == 0
        captured = capsys.readouterr().out
        assert "building hit:" in captured
        assert "floor hit:" in captured
        rows = out.read_text().splitlines()
        assert rows[0] == "building,floor"
        assert len(rows) == 241
        first = rows[1].split(",")
        assert len(first) == 2 and all(c.isdigit() for c in first)

    def test_quantized_path(self, data_root, model_path, tmp_path, capsys):
        out = tmp_path / "pred.csv"
        rc = main(["predict", "--model", str(model_path), "--quantized",
                   "--queries", str(data_root / "TST1" / "test.csv"),
                   "--out", str(out)])
        assert rc == 0
        assert "floor hit:" in capsys.readouterr().out

    def test_quantized_needs_quantized_model(self, data_root, tmp_path, capsys):
        plain = tmp_path / "plain.model.json"
        assert main(["train", "--dataset", "TST1", "--data-root", str(data_root),
                     "--L", "20", "--out", str(plain)]) == 0
        capsys.readouterr()
        rc = main(["predict", "--model", str(plain), "--quantized",
                   "--queries", str(data_root / "TST1" / "test.csv"),
                   "--out", str(tmp_path / "p.csv")])
        assert rc == 2
        assert "quantized" in capsys.readouterr().err

    def test_bare_matrix_queries(self, model_path, tmp_path, capsys):
        # no manifest next to the file: exactly the AP columns, 100 = silent
        p = tmp_path / "q.csv"
        header = ",".join(f"AP{j}" for j in range(40))
        row = ",".join(["100"] * 35 + ["-60", "-70", "100", "-80", "-55"])
        p.write_text(header + "\n" + row + "\n")
        rc = main(["predict", "--model", str(model_path), "--queries", str(p)])
        assert rc == 0
        out = tmp_path / "q.predictions.csv"
        assert out.exists()
        assert len(out.read_text().splitlines()) == 2
        assert "hit:" not in capsys.readouterr().out  # no truth available

    def test_wrong_width_matrix(self, model_path, tmp_path, capsys):
        p = tmp_path / "q.csv"
        p.write_text("a,b,c\n-50,-60,-70\n")
        assert main(["predict", "--model", str(model_path),
                     "--queries", str(p)]) == 2
        assert "40" in capsys.readouterr().err

    def test_empty_query_file(self, model_path, tmp_path, capsys):
        p = tmp_path / "q.csv"
        p.write_text(",".join(f"AP{j}" for j in range(40)) + "\n")
        out = tmp_path / "out.csv"
        rc = main(["predict", "--model", str(model_path),
                   "--queries", str(p), "--out", str(out)])
        assert rc == 0
        assert out.read_text() == "building,floor\n"
        assert "0 queries" in capsys.readouterr().out

    def test_missing_query_file(self, model_path, tmp_path, capsys):
        assert main(["predict", "--model", str(model_path),
                     "--queries", str(tmp_path / "nope.csv")]) == 2


class TestSweep:
    def test_prints_curve_and_selection(self, data_root, capsys):
        rc = main(["sweep", "--dataset", "TST1", "--data-root", str(data_root),
                   "--L-max", "30", "--step", "10"])
        assert rc == 0
        captured = capsys.readouterr().out
        assert "<- selected" in captured
        assert "selected L = " in captured
        # one line per grid point
        assert sum(1 for l in captured.splitlines() if l.strip().startswith(
            ("10 ", "20 ", "30 "))) == 3


class TestBenchmarkReport:
    def test_benchmark_writes_reports(self, data_root, tmp_path, capsys):
        out_dir = tmp_path / "reports"
        rc = main(["benchmark", "--datasets", "TST1",
                   "--approaches", "knn,elm_only", "--seeds", "0,1",
                   "--data-root", str(data_root), "--out-dir", str(out_dir)])
        assert rc == 0
        captured = capsys.readouterr().out
        assert "zeta_f" in captured
        assert (out_dir / "report.csv").exists()
        assert (out_dir / "report.json").exists()
        capsys.readouterr()
        assert main(["report", "--json", str(out_dir / "report.json")]) == 0
        rendered = capsys.readouterr().out
        assert "TST1" in rendered
        assert "config_digest:" in rendered

    def test_benchmark_all_failed(self, tmp_path, capsys):
        rc = main(["benchmark", "--datasets", "UJI1", "--seeds", "0",
                   "--data-root", str(tmp_path),
                   "--out-dir", str(tmp_path / "r")])
        assert rc == 2
        assert "failed" in capsys.readouterr().err.lower()


class TestErrorSurface:
    def test_error_json_flag(self, tmp_path, capsys):
        rc = main(["--error-json", "ingest", "--dataset", "NOPE",
                   "--data-root", str(tmp_path)])
        assert rc == 2
        captured = capsys.readouterr()
        obj = json.loads(captured.out.splitlines()[-1])
        assert "error" in obj and "type" in obj
        assert "error:" in captured.err

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["train"])  # --dataset is required
        assert exc.value.code == 2
