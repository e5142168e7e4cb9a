import json

import pytest

from batchsearch import load_env_json
from batchsearch.cli import main


def _gen_env(tmp_path, name="env.json", clusters=2, per_cluster=10, length=10):
    path = tmp_path / name
    code = main(
        [
            "generate-env",
            "--clusters", str(clusters),
            "--per-cluster", str(per_cluster),
            "--length", str(length),
            "--c", "1.0",
            "--seed", "3",
            "--batch-size", "4",
            "--out", str(path),
        ]
    )
    assert code == 0
    return path


def _run_config(tmp_path, **overrides):
    doc = {
        "environment": {
            "kind": "cluster",
            "clusters": 2,
            "per_cluster": 20,
            "length": 14,
            "c": 2.0,
            "batch_size": 5,
            "seed": 9,
        },
        "agents": [{"name": "greedy"}],
        "steps": 1,
        "rho": 0.4,
        "replicates": 2,
        "root_seed": 1,
        "surrogate": {
            "conv_layers": [[4, 3]],
            "dense_hidden": 8,
            "epochs": 1,
            "learning_rate": 0.05,
        },
    }
    doc.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


class TestGenerateEnv:
    def test_writes_loadable_env(self, tmp_path, capsys):
        path = _gen_env(tmp_path)
        out = capsys.readouterr().out
        assert "wrote" in out
        env, truth = load_env_json(path)
        assert env.size > 0
        assert truth is not None
        assert truth.cluster_of.shape == (env.size,)

    def test_bad_parameters_exit_3(self, tmp_path, capsys):
        code = main(
            [
                "generate-env",
                "--clusters", "0",
                "--per-cluster", "5",
                "--out", str(tmp_path / "x.json"),
            ]
        )
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_missing_required_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["generate-env", "--clusters", "2"])
        assert exc.value.code == 2


class TestRun:
    def test_happy_path(self, tmp_path, capsys):
        cfg = _run_config(tmp_path)
        out_dir = tmp_path / "out"
        code = main(["run", "--config", str(cfg), "--out", str(out_dir)])
        assert code == 0
        assert (out_dir / "results.csv").exists()
        assert (out_dir / "summary.csv").exists()
        printed = capsys.readouterr().out
        assert "mean_final_regret" in printed
        assert "greedy" in printed

    def test_missing_config_exits_3(self, tmp_path, capsys):
        code = main(
            ["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]
        )
        assert code == 3

    def test_bad_config_key_exits_3(self, tmp_path, capsys):
        cfg = _run_config(tmp_path, bogus=1)
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 3
        assert "bogus" in capsys.readouterr().err

    def test_pool_exhausted_exits_4(self, tmp_path, capsys):
        cfg = _run_config(
            tmp_path,
            environment={
                "kind": "cluster",
                "clusters": 1,
                "per_cluster": 8,
                "length": 12,
                "c": 2.0,
                "batch_size": 4,
                "seed": 0,
            },
            steps=3,
        )
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
        assert code == 4
        assert "error:" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestReport:
    def _results(self, tmp_path, capsys):
        cfg = _run_config(tmp_path)
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out_dir)]) == 0
        capsys.readouterr()
        return out_dir / "results.csv"

    def test_prints_table_and_writes_summary(self, tmp_path, capsys):
        results = self._results(tmp_path, capsys)
        summary = tmp_path / "summary2.csv"
        code = main(
            ["report", "--results", str(results), "--out", str(summary)]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "mean_final_regret" in out
        assert summary.exists()

    def test_missing_results_exits_3(self, tmp_path):
        assert main(["report", "--results", str(tmp_path / "no.csv")]) == 3

    def test_single_replicate_results_exit_4(self, tmp_path, capsys):
        cfg = _run_config(tmp_path, replicates=1)
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out_dir)]) == 0
        capsys.readouterr()
        code = main(["report", "--results", str(out_dir / "results.csv")])
        assert code == 4
        assert "need >= 2" in capsys.readouterr().err


class TestExportEmbedding:
    def test_writes_embedding_csv(self, tmp_path, capsys):
        env_path = _gen_env(tmp_path)
        out = tmp_path / "emb.csv"
        code = main(
            [
                "export-embedding",
                "--env", str(env_path),
                "--out", str(out),
                "--epochs", "1",
                "--embedding-dim", "3",
            ]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "index,e1,e2,e3,label"
        env, _ = load_env_json(env_path)
        assert len(lines) == 1 + env.size

    def test_bad_train_fraction_exits_3(self, tmp_path, capsys):
        env_path = _gen_env(tmp_path)
        code = main(
            [
                "export-embedding",
                "--env", str(env_path),
                "--out", str(tmp_path / "emb.csv"),
                "--train-fraction", "0",
            ]
        )
        assert code == 3
