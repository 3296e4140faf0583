import json
import os

import numpy as np
import pytest

from molscreen import SynthSpec, generate_synthetic
from molscreen.cli import main

SMALL = dict(
    n_targets=2,
    n_compounds=30,
    actives_per_target=4,
    decoys_per_target=6,
    motif_length=2,
    n_motifs=2,
    compound_atoms=(6, 10),
    pocket_atoms=(8, 12),
)


@pytest.fixture
def small_dataset(tmp_path):
    out = tmp_path / "data"
    generate_synthetic(SynthSpec(seed=4, **SMALL), out)
    return out


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:  # argparse usage failures
        return exc.code


class TestFingerprintCommand:
    def test_ecfp_hex_lines(self, small_dataset, tmp_path, capsys):
        out = tmp_path / "fp.tsv"
        code = run([
            "fingerprint", "--input", str(small_dataset / "compounds.jsonl"),
            "--method", "ecfp", "--width", "128", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 30
        for line in lines:
            graph_id, hexes = line.split("\t")
            assert len(hexes) == 128 // 4
            int(hexes, 16)

    def test_counted_output(self, small_dataset, tmp_path):
        out = tmp_path / "fp.tsv"
        code = run([
            "fingerprint", "--input", str(small_dataset / "compounds.jsonl"),
            "--method", "ecfp", "--width", "32", "--counted", "--out", str(out),
        ])
        assert code == 0
        first = out.read_text().splitlines()[0].split("\t")
        assert len(first) == 1 + 32
        assert all(int(v) >= 0 for v in first[1:])

    def test_deterministic_output(self, small_dataset, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.tsv"
            assert run([
                "fingerprint", "--input", str(small_dataset / "compounds.jsonl"),
                "--method", "ecfp", "--out", str(out),
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_neural_requires_params(self, small_dataset, capsys):
        with pytest.raises(SystemExit) as info:
            main([
                "fingerprint", "--input", str(small_dataset / "compounds.jsonl"),
                "--method", "neural",
            ])
        assert info.value.code == 64

    def test_missing_input_is_input_error(self, tmp_path):
        assert run(["fingerprint", "--input", str(tmp_path / "nope.jsonl")]) == 2

    def test_parse_error_reports_location(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id":"x","kind":"compound","atoms":[{"el":"C"}],"bonds":[]}\n{oops\n')
        assert run(["fingerprint", "--input", str(bad)]) == 2
        err = capsys.readouterr().err
        assert f"{bad}:2" in err

    def test_sdf_input(self, tmp_path):
        sdf = os.path.join(os.path.dirname(__file__), "data", "golden.sdf")
        out = tmp_path / "fp.tsv"
        assert run(["fingerprint", "--input", sdf, "--format", "sdf", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 4


class TestTrainEvalCommands:
    def train_args(self, small_dataset, tmp_path, extra=()):
        return [
            "train",
            "--manifest", str(small_dataset / "manifest.json"),
            "--out", str(tmp_path / "params.json"),
            "--log", str(tmp_path / "log.csv"),
            "--conv-layers", "4,4", "--fingerprint-size", "6",
            "--mlp-hidden", "5", "--embedding-size", "3",
            "--epochs", "2", "--batch-size", "4", "--seed", "5",
            *extra,
        ]

    def test_train_writes_params_and_log(self, small_dataset, tmp_path):
        assert run(self.train_args(small_dataset, tmp_path)) == 0
        params = json.loads((tmp_path / "params.json").read_text())
        assert params["format_version"] == 1
        log_lines = (tmp_path / "log.csv").read_text().splitlines()
        assert log_lines[0] == "epoch,objective,heldout_objective,wall_ms"
        assert len(log_lines) == 3

    def test_train_rerun_identical_params(self, small_dataset, tmp_path):
        assert run(self.train_args(small_dataset, tmp_path)) == 0
        first = (tmp_path / "params.json").read_bytes()
        assert run(self.train_args(small_dataset, tmp_path)) == 0
        assert (tmp_path / "params.json").read_bytes() == first

    def test_zero_learning_rate_returns_init(self, small_dataset, tmp_path):
        args = self.train_args(small_dataset, tmp_path, extra=["--learning-rate", "0.0"])
        assert run(args) == 0
        from molscreen import init_model_params, read_model_params

        trained = read_model_params(tmp_path / "params.json")
        init = init_model_params(seed=5, conv_layers=(4, 4), fingerprint_size=6,
                                 mlp_hidden=(5,), embedding_size=3)
        for a, b in zip(trained.trainable_arrays(), init.trainable_arrays()):
            assert np.array_equal(a, b)

    def test_missing_manifest_is_input_error(self, tmp_path):
        assert run([
            "train", "--manifest", str(tmp_path / "none.json"),
            "--out", str(tmp_path / "p.json"),
        ]) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_loss_exits_3(self, small_dataset, tmp_path, capsys):
        args = self.train_args(
            small_dataset, tmp_path,
            extra=["--learning-rate", "1e200", "--holdout-fraction", "0.0",
                   "--epochs", "4", "--batch-size", "8"],
        )
        assert run(args) == 3
        assert "numeric failure" in capsys.readouterr().err

    def test_eval_report(self, small_dataset, tmp_path):
        assert run(self.train_args(small_dataset, tmp_path)) == 0
        code = run([
            "eval", "--manifest", str(small_dataset / "manifest.json"),
            "--params", str(tmp_path / "params.json"),
            "--report", str(tmp_path / "report.json"),
            "--table", str(tmp_path / "table.txt"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert set(report["per_target"]) == {"t000", "t001"}
        assert "Total AUC" in (tmp_path / "table.txt").read_text()

    def make_two_compound_fixture(self, tmp_path, eval_pairs):
        from molscreen import AtomRecord, MolGraph, write_graphs_jsonl
        import json as _json

        compounds = [
            MolGraph("hit", "compound", [AtomRecord("C")]),
            MolGraph("miss", "compound", [AtomRecord("O")]),
        ]
        pockets = [
            MolGraph("t0", "pocket", [AtomRecord("N")]),
            MolGraph("t1", "pocket", [AtomRecord("S")]),
        ]
        write_graphs_jsonl(compounds, tmp_path / "compounds.jsonl")
        write_graphs_jsonl(pockets, tmp_path / "pockets.jsonl")
        manifest = tmp_path / "manifest.json"
        manifest.write_text(_json.dumps({
            "compounds": "compounds.jsonl",
            "pockets": "pockets.jsonl",
            "positives": [["hit", "t0"]],
            "eval_pairs": eval_pairs,
        }))
        return manifest

    def write_perfect_params(self, tmp_path):
        """Handcrafted model scoring the carbon compound at +40, oxygen at -40."""
        from molscreen import (EcfpConfig, MlpLayer, MlpParams, ModelParams, MolGraph,
                               AtomRecord, ecfp, write_model_params)

        width = 64
        config = EcfpConfig(radius=0, width=width)
        bit_hit = int(np.flatnonzero(
            ecfp(MolGraph("h", "compound", [AtomRecord("C")]), config).values)[0])
        bit_miss = int(np.flatnonzero(
            ecfp(MolGraph("m", "compound", [AtomRecord("O")]), config).values)[0])
        W = np.zeros((1, width))
        W[0, bit_hit] = 40.0
        W[0, bit_miss] = -40.0
        model = ModelParams(
            ligand_fp=config,
            pocket_fp=config,
            ligand_mlp=MlpParams([MlpLayer(W, np.zeros(1), "identity")]),
            pocket_mlp=MlpParams([MlpLayer(np.zeros((1, width)), np.ones(1), "identity")]),
        )
        path = tmp_path / "perfect.json"
        write_model_params(path, model)
        return path

    def test_eval_perfect_model_fixture(self, tmp_path):
        manifest = self.make_two_compound_fixture(
            tmp_path, [["hit", "t0", 1], ["miss", "t0", 0], ["hit", "t1", 1], ["miss", "t1", 0]]
        )
        params = self.write_perfect_params(tmp_path)
        code = run([
            "eval", "--manifest", str(manifest), "--params", str(params),
            "--report", str(tmp_path / "report.json"),
        ])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["total_auc"] == 1.0
        assert report["mean_auc"] == 1.0
        assert all(entry["auc"] == 1.0 for entry in report["per_target"].values())
        assert report["threshold_counts"] == {"0.7": 2, "0.8": 2, "0.9": 2}

    def test_eval_single_class_target_warns_exit_0(self, tmp_path, capsys):
        manifest = self.make_two_compound_fixture(
            tmp_path, [["hit", "t0", 1], ["miss", "t0", 0], ["hit", "t1", 1]]
        )
        params = self.write_perfect_params(tmp_path)
        code = run([
            "eval", "--manifest", str(manifest), "--params", str(params),
            "--report", str(tmp_path / "report.json"),
        ])
        assert code == 0
        assert "skipped" in capsys.readouterr().err
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["skipped_targets"] == ["t1"]

    def test_config_file_with_flag_override(self, small_dataset, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epochs": 1, "batch_size": 4, "conv_layers": [4, 4],
                                      "fingerprint_size": 6, "mlp_hidden": [5],
                                      "embedding_size": 3}))
        code = run([
            "train", "--manifest", str(small_dataset / "manifest.json"),
            "--out", str(tmp_path / "params.json"),
            "--config", str(config), "--epochs", "2",
        ])
        assert code == 0
        echoed = json.loads(capsys.readouterr().err.splitlines()[0])
        assert echoed["epochs"] == 2  # flag wins over config file
        assert echoed["batch_size"] == 4

    def test_unknown_config_key_rejected(self, small_dataset, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"not_a_flag": 1}))
        assert run([
            "train", "--manifest", str(small_dataset / "manifest.json"),
            "--out", str(tmp_path / "params.json"), "--config", str(config),
        ]) == 2


class TestGradCheckCommand:
    def test_default_run_passes(self, capsys):
        assert run(["grad-check", "--instances", "2"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "max rel err" in out

    def test_relu_forces_smooth_activation(self, capsys):
        assert run(["grad-check", "--instances", "1", "--activation", "relu"]) == 0
        assert "forcing sigmoid" in capsys.readouterr().err

    def test_injected_sign_flip_fails(self, monkeypatch, capsys):
        import molscreen.gradcheck as gc

        original = gc.nce_loss

        def sabotaged(*args, **kwargs):
            loss, grads = original(*args, **kwargs)
            grads.ligand_mlp.layers[0].W *= -1.0
            return loss, grads

        monkeypatch.setattr(gc, "nce_loss", sabotaged)
        assert run(["grad-check", "--instances", "1"]) == 1
        assert "FAIL" in capsys.readouterr().out


class TestGenSyntheticCommand:
    def test_generates_files(self, tmp_path):
        out = tmp_path / "bench"
        code = run([
            "gen-synthetic", "--out", str(out), "--targets", "4", "--compounds", "200",
            "--actives", "5", "--decoys", "10", "--motif-length", "2",
            "--compound-atoms", "6,10", "--pocket-atoms", "8,12", "--seed", "3",
        ])
        assert code == 0
        from molscreen import load_manifest

        dataset = load_manifest(out / "manifest.json")
        assert len(dataset.pockets) == 4
        assert len(dataset.compounds) == 200

    def test_same_seed_same_files(self, tmp_path):
        args = lambda d: [
            "gen-synthetic", "--out", str(d), "--targets", "2", "--compounds", "40",
            "--actives", "3", "--decoys", "5", "--motif-length", "2",
            "--compound-atoms", "6,10", "--pocket-atoms", "8,12", "--seed", "9",
        ]
        assert run(args(tmp_path / "a")) == 0
        assert run(args(tmp_path / "b")) == 0
        for name in ("compounds.jsonl", "pockets.jsonl", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_infeasible_motif_is_input_error(self, tmp_path):
        assert run([
            "gen-synthetic", "--out", str(tmp_path / "x"), "--targets", "2",
            "--compounds", "20", "--actives", "2", "--decoys", "2",
            "--motif-length", "9", "--compound-atoms", "4,6", "--pocket-atoms", "10,12",
        ]) == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["fingerprint", "--input", "x", "--bogus"])
    assert info.value.code == 64


def test_resolved_config_echoed(small_dataset, tmp_path, capsys):
    run([
        "fingerprint", "--input", str(small_dataset / "compounds.jsonl"),
        "--out", str(tmp_path / "fp.tsv"),
    ])
    echoed = json.loads(capsys.readouterr().err.splitlines()[0])
    assert echoed["command"] == "fingerprint"
    assert echoed["method"] == "ecfp"
    assert echoed["width"] == 4096
