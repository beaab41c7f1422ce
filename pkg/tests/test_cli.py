import csv
import json

import numpy as np
import pytest

from lgg_radiomics.cli import main, read_manifest, ManifestParseError
from lgg_radiomics.phantoms import write_phantom_suite
from lgg_radiomics.pipeline import PipelineConfig, ConfigError
from lgg_radiomics.tabular import FeatureTable, read_table_csv, write_table_csv
from conftest import separable_set


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    """Phantom suite, its feature CSV and a trained model."""
    root = tmp_path_factory.mktemp("suite")
    manifest = write_phantom_suite(root / "data", n_positive=14, n_negative=10, seed=0)
    features = root / "features.csv"
    assert main(["extract", "--manifest", str(manifest), "--out", str(features)]) == 0
    model = root / "model.json"
    report = root / "report.json"
    assert main(["train", "--features", str(features), "--model-out", str(model),
                 "--report-out", str(report)]) == 0
    return {"root": root, "manifest": manifest, "features": features, "model": model, "report": report}


def write_manifest(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case_id", "image_path", "mask_path", "roi_label", "class_label"])
        w.writerows(rows)
    return path


def test_extract_three_cases(tmp_path, suite):
    data = suite["manifest"].parent
    rows = [[f"case{i:03d}", str(data / f"case{i:03d}_image.nrrd"), str(data / f"case{i:03d}_mask.nrrd"),
             1, 1] for i in range(3)]
    out = tmp_path / "f.csv"
    assert main(["extract", "--manifest", str(write_manifest(tmp_path / "m.csv", rows)),
                 "--out", str(out)]) == 0
    with open(out) as fh:
        table = list(csv.reader(fh))
    assert len(table) == 4 and all(len(r) == 122 for r in table)
    assert table[0][0] == "case_id" and table[0][-1] == "label"


def test_extract_missing_file_skipped(tmp_path, suite):
    data = suite["manifest"].parent
    rows = [["a", str(data / "case000_image.nrrd"), str(data / "case000_mask.nrrd"), 1, 1],
            ["b", str(tmp_path / "nope.nrrd"), str(data / "case000_mask.nrrd"), 1, 0]]
    out = tmp_path / "f.csv"
    assert main(["extract", "--manifest", str(write_manifest(tmp_path / "m.csv", rows)),
                 "--out", str(out)]) == 2
    assert read_table_csv(out).case_ids == ("a",)


def test_extract_empty_manifest(tmp_path):
    path = write_manifest(tmp_path / "m.csv", [])
    assert main(["extract", "--manifest", str(path), "--out", str(tmp_path / "f.csv")]) == 1


def test_manifest_missing_column(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("case_id,image_path,mask_path\na,x,y\n")
    with pytest.raises(ManifestParseError):
        read_manifest(path)


def test_extract_parallel_matches_serial(tmp_path, suite):
    out = tmp_path / "f.csv"
    assert main(["extract", "--manifest", str(suite["manifest"]), "--out", str(out), "--jobs", "2"]) == 0
    assert out.read_bytes() == suite["features"].read_bytes()


def test_train_outputs(suite):
    model = json.loads(suite["model"].read_text())
    assert len(model["pca"]["components"]) == 8
    assert len(model["feature_names"]) == 120
    report = json.loads(suite["report"].read_text())
    assert report["smote"]["class_counts_after"]["0"] == report["smote"]["class_counts_after"]["1"]
    assert len(report["history"]["loss"]) == 100
    assert len(report["pca"]["percent"]) == 8
    assert suite["report"].with_suffix(".txt").exists()


def test_train_missing_label_column(tmp_path, suite, capsys):
    bad = tmp_path / "bad.csv"
    lines = suite["features"].read_text().splitlines()
    bad.write_text("\n".join(",".join(line.split(",")[:-1]) for line in lines) + "\n")
    code = main(["train", "--features", str(bad), "--model-out", str(tmp_path / "m.json"),
                 "--report-out", str(tmp_path / "r.json")])
    assert code == 1
    assert "stage csv-parse" in capsys.readouterr().err


def test_train_bad_config(tmp_path, suite, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pca_kk": 3}))
    code = main(["train", "--features", str(suite["features"]), "--config", str(cfg),
                 "--model-out", str(tmp_path / "m.json"), "--report-out", str(tmp_path / "r.json")])
    assert code == 1 and "stage config" in capsys.readouterr().err


def test_config_round_trip():
    cfg = PipelineConfig.from_dict({"pca_k": 4, "split": {"seed": 9}, "train": {"epochs": 7}})
    assert cfg.pca_k == 4 and cfg.split_seed == 9 and cfg.train.epochs == 7
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"pca_k": 0})


def test_separable_features_reach_full_training_accuracy(tmp_path):
    X, y = separable_set(4, n=160)
    table = FeatureTable([f"s{i:03d}" for i in range(len(y))], [f"f{j}" for j in range(8)], X, y)
    features = tmp_path / "sep.csv"
    write_table_csv(table, features)
    report = tmp_path / "r.json"
    assert main(["train", "--features", str(features), "--model-out", str(tmp_path / "m.json"),
                 "--report-out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["final_training_accuracy"] == 1.0
    assert "100.0%" in report.with_suffix(".txt").read_text()


def test_evaluate_reproduces_training_metrics(tmp_path, suite):
    out = tmp_path / "e.json"
    assert main(["evaluate", "--model", str(suite["model"]), "--features", str(suite["features"]),
                 "--report-out", str(out)]) == 0
    trained = json.loads(suite["report"].read_text())["metrics"]["all"]
    evaluated = json.loads(out.read_text())["metrics"]
    assert evaluated == trained


def test_evaluate_reordered_columns(tmp_path, suite):
    table = read_table_csv(suite["features"])
    shuffled = table.select(list(reversed(table.names)))
    path = tmp_path / "rev.csv"
    write_table_csv(shuffled, path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["evaluate", "--model", str(suite["model"]), "--features", str(suite["features"]),
                 "--report-out", str(a)]) == 0
    assert main(["evaluate", "--model", str(suite["model"]), "--features", str(path),
                 "--report-out", str(b)]) == 0
    assert json.loads(a.read_text())["metrics"] == json.loads(b.read_text())["metrics"]


def test_evaluate_missing_column(tmp_path, suite, capsys):
    table = read_table_csv(suite["features"])
    path = tmp_path / "short.csv"
    write_table_csv(table.select(table.names[1:]), path)
    code = main(["evaluate", "--model", str(suite["model"]), "--features", str(path),
                 "--report-out", str(tmp_path / "e.json")])
    assert code == 1 and "stage schema" in capsys.readouterr().err


def test_evaluate_version_mismatch(tmp_path, suite, capsys):
    model = json.loads(suite["model"].read_text())
    model["format_version"] = "something-else/9"
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model))
    code = main(["evaluate", "--model", str(path), "--features", str(suite["features"]),
                 "--report-out", str(tmp_path / "e.json")])
    assert code == 1 and "stage model-load" in capsys.readouterr().err


def test_figures_rendered(tmp_path, suite):
    figs = tmp_path / "figs"
    assert main(["train", "--features", str(suite["features"]), "--model-out", str(tmp_path / "m.json"),
                 "--report-out", str(tmp_path / "r.json"), "--figures-dir", str(figs)]) == 0
    for name in ("pca_variance.png", "training_history.png", "confusion_test.png"):
        data = (figs / name).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
    rows = (figs / "training_history.csv").read_text().splitlines()
    assert rows[0].split(",")[0] == "epoch" and len(rows) == 101

    efigs = tmp_path / "efigs"
    assert main(["evaluate", "--model", str(tmp_path / "m.json"), "--features", str(suite["features"]),
                 "--report-out", str(tmp_path / "e.json"), "--figures-dir", str(efigs)]) == 0
    assert (efigs / "confusion.png").exists()


def test_phantoms_command(tmp_path):
    assert main(["phantoms", "--outdir", str(tmp_path), "--positive", "2", "--negative", "1"]) == 0
    rows = read_manifest(tmp_path / "manifest.csv")
    assert [r.class_label for r in rows] == [1, 1, 0]
    assert np.all([r.image_path.exists() for r in rows])
