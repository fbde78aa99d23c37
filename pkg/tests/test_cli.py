import json
from pathlib import Path

import pytest

from liqformer.cli import main
from liqformer.synthetic import generate_corpus, write_corpus


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory) -> Path:
    tmp = tmp_path_factory.mktemp("cli")
    corpus = generate_corpus(n_sites=14, seed=5, n_strong=5, n_weak=3)
    write_corpus(corpus, tmp)
    return tmp


@pytest.fixture(scope="module")
def prepared_dir(corpus_dir) -> Path:
    out = corpus_dir / "prep"
    code = main(
        [
            "prepare",
            "--data", str(corpus_dir / "sites.csv"),
            "--motions", str(corpus_dir / "motions"),
            "--out", str(out),
            "--seed", "1",
            "--val-fraction", "0.2",
            "--l-spec", "12",
        ]
    )
    assert code == 0
    return out


TRAIN_FLAGS = ["--epochs", "4", "--batch-size", "8", "--lr", "1e-3", "--h1", "8", "--h2", "8"]


@pytest.fixture(scope="module")
def trained_dir(prepared_dir) -> Path:
    out = prepared_dir / "run"
    code = main(
        ["train", "--data", str(prepared_dir / "prepared.json"), "--out", str(out), "--seed", "7"]
        + TRAIN_FLAGS
    )
    assert code == 0
    return out


class TestPrepare:
    def test_outputs(self, prepared_dir):
        doc = json.loads((prepared_dir / "prepared.json").read_text())
        assert len(doc["sites"]) == 28  # 14 originals + 14 twins
        assert doc["split"]["train"] and doc["split"]["val"]

    def test_full_fixture_augments_to_330(self, tmp_path, capsys):
        corpus = generate_corpus(n_sites=165, seed=0)
        write_corpus(corpus, tmp_path)
        code = main(
            [
                "prepare",
                "--data", str(tmp_path / "sites.csv"),
                "--motions", str(tmp_path / "motions"),
                "--out", str(tmp_path / "prep"),
                "--l-spec", "8",
            ]
        )
        assert code == 0
        assert "prepared 330 records (165 sites + 165 null-motion twins)" in capsys.readouterr().out


class TestTrain:
    def test_outputs(self, trained_dir):
        assert (trained_dir / "checkpoint.lqtf").exists()
        log = (trained_dir / "epochs.csv").read_text()
        assert log.startswith("epoch,train_loss,val_loss,val_accuracy,val_recall,checkpointed")
        assert len(log.strip().split("\n")) == 5
        summary = json.loads((trained_dir / "train_summary.json").read_text())
        assert 0.0 <= summary["val_accuracy"] <= 1.0

    def test_byte_identical_logs_for_same_seed(self, prepared_dir):
        outs = []
        for name in ("a", "b"):
            out = prepared_dir / f"det_{name}"
            code = main(
                ["train", "--data", str(prepared_dir / "prepared.json"), "--out", str(out), "--seed", "7"]
                + TRAIN_FLAGS
            )
            assert code == 0
            outs.append((out / "epochs.csv").read_bytes())
        assert outs[0] == outs[1]


class TestEval:
    def test_metrics_file(self, prepared_dir, trained_dir):
        out = prepared_dir / "eval"
        code = main(
            [
                "eval",
                "--data", str(prepared_dir / "prepared.json"),
                "--checkpoint", str(trained_dir / "checkpoint.lqtf"),
                "--out", str(out),
            ]
        )
        assert code == 0
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["partition"] == "val"
        assert doc["confusion"]["tp"] + doc["confusion"]["fp"] + doc["confusion"]["tn"] + doc["confusion"]["fn"] == doc["n"]


class TestCv:
    def test_fold_report(self, prepared_dir):
        out = prepared_dir / "cv"
        code = main(
            ["cv", "--data", str(prepared_dir / "prepared.json"), "--out", str(out), "--folds", "3",
             "--epochs", "2", "--batch-size", "8", "--h1", "8", "--h2", "8"]
        )
        assert code == 0
        doc = json.loads((out / "cv.json").read_text())
        assert len(doc["folds"]) == 3
        accs = [f["accuracy"] for f in doc["folds"]]
        assert doc["mean_accuracy"] == pytest.approx(sum(accs) / 3, abs=1e-12)


class TestExplainCmd:
    def test_attribution_files(self, prepared_dir, trained_dir):
        doc = json.loads((prepared_dir / "prepared.json").read_text())
        site_id = doc["split"]["val"][0]
        out = prepared_dir / "explain"
        code = main(
            [
                "explain",
                "--data", str(prepared_dir / "prepared.json"),
                "--checkpoint", str(trained_dir / "checkpoint.lqtf"),
                "--site-id", site_id,
                "--out", str(out),
                "--n-perms", "4",
            ]
        )
        assert code == 0
        attr = json.loads((out / "attribution.json").read_text())
        assert len(attr["groups"]) == 25
        waterfall = json.loads((out / "waterfall.json").read_text())
        assert waterfall["rows"][-1]["running_total"] == pytest.approx(attr["fx"], abs=1e-6)

    def test_unknown_site_is_validation_error(self, prepared_dir, trained_dir):
        code = main(
            [
                "explain",
                "--data", str(prepared_dir / "prepared.json"),
                "--checkpoint", str(trained_dir / "checkpoint.lqtf"),
                "--site-id", "nope",
                "--out", str(prepared_dir / "x"),
                "--n-perms", "2",
            ]
        )
        assert code == 1


class TestSensitivityCmd:
    def test_grid_file(self, corpus_dir, prepared_dir, trained_dir):
        doc = json.loads((prepared_dir / "prepared.json").read_text())
        site_id = next(s["site_id"] for s in doc["sites"] if not s.get("is_null_twin"))
        out = prepared_dir / "sens"
        code = main(
            [
                "sensitivity",
                "--data", str(prepared_dir / "prepared.json"),
                "--checkpoint", str(trained_dir / "checkpoint.lqtf"),
                "--motions", str(corpus_dir / "motions"),
                "--site-id", site_id,
                "--out", str(out),
                "--pga-factors", "0.0,0.5,1.0",
                "--spt-factors", "1.0,2.0",
            ]
        )
        assert code == 0
        grid = json.loads((out / "sensitivity.json").read_text())
        assert len(grid["p"]) == 3 and len(grid["p"][0]) == 2


class TestAblateCmd:
    def test_eight_rows(self, prepared_dir):
        out = prepared_dir / "ablate"
        code = main(
            ["ablate", "--data", str(prepared_dir / "prepared.json"), "--out", str(out),
             "--epochs", "1", "--batch-size", "8", "--h1", "8", "--h2", "8"]
        )
        assert code == 0
        rows = json.loads((out / "ablation.json").read_text())
        assert len(rows) == 8
        names = {r["name"] for r in rows}
        assert {"no_ground_motion", "no_site_feature", "proposed"} <= names
        csv_text = (out / "ablation.csv").read_text()
        assert len(csv_text.strip().split("\n")) == 9


class TestParamsCmd:
    def test_prints_count(self, capsys):
        assert main(["params"]) == 0
        printed = int(capsys.readouterr().out.strip())
        from liqformer.model import ModelConfig, count_params

        assert printed == count_params(ModelConfig())

    def test_stream_flag_keeps_count(self, capsys):
        main(["params"])
        base = int(capsys.readouterr().out.strip())
        main(["params", "--no-eq-stream"])
        assert int(capsys.readouterr().out.strip()) == base


class TestErrors:
    def test_unknown_flag_is_usage_error(self):
        assert main(["train", "--nope"]) == 1

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_missing_file_is_validation_error(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 1
