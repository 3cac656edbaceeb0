import csv
import json

import numpy as np
import pytest

from proemlc.cli import main
from proemlc.data import generate_synthetic, write_arff, write_csv
from proemlc.harness import RunConfig, aggregate, crossval, fold_indices, tune_hidden
from proemlc.hidden import hidden_map, init_hidden_layer
from proemlc.metrics import TABLE_FIELDS, apply_threshold
from proemlc.training import init_batch, sequential_update


@pytest.fixture
def synth_csv(tmp_path):
    path = tmp_path / "synth.csv"
    write_csv(generate_synthetic(200, 4, 3, 1.0, seed=1), path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_curve(path):
    with open(path) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    return rows[0], np.array(rows[1:], dtype=float)


class TestTrain:
    def test_report_schema(self, capsys, tmp_path, synth_csv):
        out = tmp_path / "o"
        code, stdout, _ = run(capsys, "train", "--data", synth_csv, "--trailing-labels", 3,
                              "--hidden", 12, "--out", out)
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert set(TABLE_FIELDS) <= set(report)
        assert report["config"]["hidden"] == 12
        assert (out / "model.npz").exists()
        assert json.loads(stdout)["H"] == report["H"]

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "train", "--data", tmp_path / "nope.csv", "--trailing-labels", 1,
                           "--out", tmp_path)
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "io"
        assert json.loads((tmp_path / "error.json").read_text())["error"]["kind"] == "io"

    def test_deterministic_metrics(self, capsys, tmp_path, synth_csv):
        docs = []
        for name in ("a", "b"):
            run(capsys, "train", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 15,
                "--seed", 4, "--out", tmp_path / name)
            docs.append(json.loads((tmp_path / name / "report.json").read_text()))
        for key in ("H", "Acc", "Pre", "Rec", "F1", "LC", "LD"):
            assert docs[0][key] == docs[1][key]

    def test_rerun_from_embedded_config(self, capsys, tmp_path, synth_csv):
        run(capsys, "train", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 9,
            "--seed", 2, "--ridge", 0.01, "--out", tmp_path / "a")
        run(capsys, "train", "--config", tmp_path / "a" / "report.json", "--out", tmp_path / "b")
        a = json.loads((tmp_path / "a" / "report.json").read_text())
        b = json.loads((tmp_path / "b" / "report.json").read_text())
        assert a["config"]["ridge"] == b["config"]["ridge"] == 0.01
        assert (a["H"], a["Acc"], a["F1"]) == (b["H"], b["Acc"], b["F1"])

    def test_singular_is_computation_error(self, capsys, tmp_path, synth_csv):
        code, _, err = run(capsys, "train", "--data", synth_csv, "--trailing-labels", 3,
                           "--hidden", 500, "--out", tmp_path)
        assert code == 1
        assert json.loads(err)["error"]["kind"] == "singular-matrix"

    def test_bad_config(self, capsys, tmp_path, synth_csv):
        code, _, err = run(capsys, "train", "--data", synth_csv, "--trailing-labels", 3, "--chunk", 0)
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "invalid-argument"


class TestStream:
    def test_outputs_and_provenance(self, capsys, tmp_path, synth_csv):
        out = tmp_path / "s"
        code, _, _ = run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 10,
                         "--pattern", "2+1", "--out", out)
        assert code == 0
        for name in ("report.json", "plan.json", "curve.csv", "model.npz"):
            assert (out / name).exists()
        assert json.loads((out / "report.json").read_text())["LIP"] == "2+1"
        assert json.loads((out / "plan.json").read_text())["config"]["pattern"] == "2+1"
        first = (out / "curve.csv").read_text().splitlines()[0]
        assert first.startswith("# config: ") and json.loads(first[10:])["pattern"] == "2+1"

    def test_degenerate_pattern_curve_is_plain_os_elm(self, capsys, tmp_path, synth_csv):
        out = tmp_path / "s"
        run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 10,
            "--pattern", "3", "--seed", 5, "--out", out)
        header, curve = read_curve(out / "curve.csv")
        assert header == ["samples_seen", "overall_hamming"]
        plan = json.loads((out / "plan.json").read_text())
        ds = generate_synthetic(200, 4, 3, 1.0, seed=1)
        from proemlc.harness import split_indices

        tr, te = split_indices(200, 0.2, 5)
        train, test = ds.subset(tr), ds.subset(te)
        layer = init_hidden_layer(4, 10, "sigmoid", 5)
        Y = train.targets.astype(float)
        state = init_batch(hidden_map(layer, train.features[plan["initial_block"]]), Y[plan["initial_block"]])
        H_test = hidden_map(layer, test.features)
        expected = [np.mean(apply_threshold(H_test @ state.beta) != test.targets)]
        for s in plan["phases"][0]["samples"]:
            state = sequential_update(state, hidden_map(layer, train.features[[s]]), Y[[s]])
            expected.append(np.mean(apply_threshold(H_test @ state.beta) != test.targets))
        assert np.array_equal(curve[:, 1], expected)

    @pytest.mark.parametrize("seed", range(5))
    def test_introduced_label_curve_drops(self, capsys, tmp_path, synth_csv, seed):
        out = tmp_path / "s"
        run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 10,
            "--pattern", "2+1", "--seed", seed, "--out", out)
        text = (out / "curve.csv").read_text()
        at = int(text.split("samples_seen=")[1].split()[0])
        header, curve = read_curve(out / "curve.csv")
        label = curve[:, 2]
        before = label[curve[:, 0] <= at][-1]
        after = label[curve[:, 0] > at]
        assert after[-1] < before
        assert after[len(after) // 2:].mean() < before

    def test_infeasible_pattern_rejected_before_training(self, capsys, tmp_path, synth_csv):
        out = tmp_path / "s"
        code, _, err = run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3,
                           "--pattern", "1+1", "--out", out)
        assert code == 2
        assert json.loads(err)["error"]["kind"] == "invalid-pattern"
        assert not (out / "report.json").exists()

    def test_track_option(self, capsys, tmp_path, synth_csv):
        out = tmp_path / "s"
        run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 8,
            "--pattern", "2+1", "--track", "0,1", "--chunk", 5, "--out", out)
        header, _ = read_curve(out / "curve.csv")
        assert header == ["samples_seen", "overall_hamming", "label_0", "label_1"]


class TestCrossval:
    def test_fold_partition(self):
        folds = fold_indices(100, 10, seed=3)
        assert [len(f) for f in folds] == [10] * 10
        assert sorted(np.concatenate(folds).tolist()) == list(range(100))

    def test_too_many_folds(self):
        with pytest.raises(Exception, match="exceeds"):
            fold_indices(5, 6, 0)

    def test_aggregate_is_arithmetic_mean(self, capsys, tmp_path, synth_csv):
        code, _, _ = run(capsys, "crossval", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 10,
                         "--pattern", "2+1", "--folds", 4, "--out", tmp_path)
        assert code == 0
        doc = json.loads((tmp_path / "crossval.json").read_text())
        assert len(doc["folds"]) == 4
        for key in ("H", "Acc", "Pre", "Rec", "F1"):
            values = [f[key] for f in doc["folds"]]
            assert doc["mean"][key] == pytest.approx(sum(values) / 4, abs=1e-15)
            assert doc["std"][key] == pytest.approx(np.std(values), abs=1e-15)
        assert doc["mean"]["LIP"] == "2+1"

    def test_library_matches_cli(self, tmp_path):
        ds = generate_synthetic(200, 4, 3, 1.0, seed=1)
        reports, agg = crossval(RunConfig(hidden=10, pattern="2+1", folds=4), ds)
        assert agg == aggregate(reports)


class TestTune:
    def test_single_candidate(self):
        ds = generate_synthetic(100, 3, 2, 1.0, seed=0)
        rows, best = tune_hidden(RunConfig(), ds, [7])
        assert len(rows) == 1 and best == 7

    def test_singular_row_is_isolated(self, capsys, tmp_path, synth_csv):
        code, _, _ = run(capsys, "tune", "--data", synth_csv, "--trailing-labels", 3,
                         "--candidates", "5,20,400", "--out", tmp_path)
        assert code == 0
        doc = json.loads((tmp_path / "tune.json").read_text())
        status = {r["hidden"]: r["status"] for r in doc["rows"]}
        assert status == {5: "ok", 20: "ok", 400: "singular-matrix"}
        assert doc["recommended_hidden"] in (5, 20)
        lines = [l for l in (tmp_path / "tune.csv").read_text().splitlines() if not l.startswith("#")]
        assert lines[0].split(",")[0] == "hidden" and len(lines) == 4

    @pytest.mark.parametrize("seed", range(5))
    def test_overfitting_shape_with_known_teacher(self, seed):
        ds = generate_synthetic(600, 5, 3, 1.2, seed=seed, teacher_hidden=10, noise=0.2)
        candidates = [2, 5, 10, 20, 40, 80, 160, 320, 470]
        rows, best = tune_hidden(RunConfig(seed=seed), ds, candidates)
        assert 10 / 4 <= best <= 10 * 4
        train = [r.train_hamming for r in rows]
        assert all(b <= a + 0.005 for a, b in zip(train, train[1:]))
        assert train[-1] < train[0]
        assert rows[-1].val_accuracy < max(r.val_accuracy for r in rows) - 0.2


class TestPredictInspect:
    def test_predict_with_saved_model(self, capsys, tmp_path, synth_csv):
        run(capsys, "stream", "--data", synth_csv, "--trailing-labels", 3, "--hidden", 10,
            "--pattern", "2+1", "--out", tmp_path / "m")
        code, stdout, _ = run(capsys, "predict", "--model", tmp_path / "m" / "model.npz", "--data", synth_csv,
                              "--trailing-labels", 3, "--out", tmp_path / "p")
        assert code == 0
        doc = json.loads(stdout)
        assert 0 <= doc["H"] <= 1
        lines = (tmp_path / "p" / "predictions.csv").read_text().splitlines()
        assert len(lines) == 1 + 1 + 200
        assert set(lines[2].split(",")) <= {"1", "-1"}

    def test_inspect_dataset_plan_and_model(self, capsys, tmp_path):
        ds = generate_synthetic(120, 4, 3, 1.0, seed=6)
        path = tmp_path / "d.arff"
        write_arff(ds, path)
        code, stdout, _ = run(capsys, "inspect", "--data", path, "--trailing-labels", 3,
                              "--pattern", "2+1", "--hidden", 10)
        assert code == 0
        doc = json.loads(stdout)
        assert doc["dataset"]["samples"] == 120 and doc["dataset"]["LC"] == pytest.approx(1.0)
        assert doc["plan"]["initial_block"] == 12
        run(capsys, "train", "--data", path, "--trailing-labels", 3, "--hidden", 8, "--out", tmp_path / "t")
        code, stdout, _ = run(capsys, "inspect", "--model", tmp_path / "t" / "model.npz")
        model = json.loads(stdout)["model"]
        assert model["hidden"] == 8 and model["layer"]["hidden_dim"] == 8
        assert model["m_inv_asymmetry"] == 0.0

    def test_inspect_needs_input(self, capsys, tmp_path):
        code, _, err = run(capsys, "inspect", "--out", tmp_path)
        assert code == 2
        assert json.loads((tmp_path / "error.json").read_text())["error"]["kind"] == "config"
