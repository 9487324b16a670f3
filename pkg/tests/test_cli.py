import numpy as np
import pytest

from balancedtv import load_labels, save_edge_list, save_labels
from balancedtv.cli import main, parse_args
from conftest import two_cliques


def write_cliques(tmp_path):
    path = tmp_path / "cliques.txt"
    save_edge_list(path, two_cliques(5))
    return path


class TestParseArgs:
    def test_fixed_strategy_spec(self, tmp_path):
        edges = write_cliques(tmp_path)
        spec = parse_args([
            "partition", "--edges", str(edges), "--gamma", "0.5",
            "--nhat", "2", "--seed", "7", "--out", str(tmp_path / "run"),
        ])
        assert spec.command == "partition"
        assert spec.strategy.nhat == 2
        assert spec.mbo_config.gamma == 0.5
        assert spec.mbo_config.seed == 7

    def test_conflicting_sources_rejected(self, tmp_path, capsys):
        edges = write_cliques(tmp_path)
        with pytest.raises(SystemExit) as exc:
            parse_args([
                "partition", "--edges", str(edges), "--features", str(edges),
                "--nhat", "2", "--out", "x",
            ])
        assert exc.value.code == 2
        assert "--features" in capsys.readouterr().err

    def test_generator_spec(self, tmp_path):
        spec = parse_args([
            "generate", "two-moons", "--n", "2000", "--dim", "100",
            "--out", str(tmp_path / "pts.csv"),
        ])
        assert spec.command == "generate"
        assert spec.options.n == 2000

    def test_missing_input_file_named(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            parse_args(["partition", "--edges", "no_such.txt", "--nhat", "2", "--out", "x"])
        assert exc.value.code == 2
        assert "no_such.txt" in capsys.readouterr().err

    def test_sweep_parsing(self, tmp_path):
        edges = write_cliques(tmp_path)
        spec = parse_args([
            "partition", "--edges", str(edges), "--sweep", "2..4", "--out", "x",
        ])
        assert (spec.strategy.nhat_min, spec.strategy.nhat_max) == (2, 4)

    def test_bad_sweep_range(self, tmp_path, capsys):
        edges = write_cliques(tmp_path)
        with pytest.raises(SystemExit):
            parse_args([
                "partition", "--edges", str(edges), "--sweep", "4-2", "--out", "x",
            ])
        assert "--sweep" in capsys.readouterr().err

    def test_supervision_with_recursive_rejected(self, tmp_path, capsys):
        edges = write_cliques(tmp_path)
        sup = tmp_path / "sup.csv"
        sup.write_text("node,label\n0,0\n")
        with pytest.raises(SystemExit):
            parse_args([
                "partition", "--edges", str(edges), "--recursive",
                "--supervision", str(sup), "--out", "x",
            ])
        assert "--supervision" in capsys.readouterr().err


class TestEndToEnd:
    def test_partition_separates_cliques(self, tmp_path, capsys):
        edges = write_cliques(tmp_path)
        truth = tmp_path / "truth.csv"
        save_labels(truth, np.repeat([0, 1], 5))
        out = tmp_path / "run"
        code = main([
            "partition", "--edges", str(edges), "--gamma", "1.0", "--nhat", "2",
            "--seed", "0", "--repeat", "3", "--truth", str(truth),
            "--out", str(out), "--trace",
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "best modularity" in printed
        assert "best classification" in printed
        labels = load_labels(f"{out}_labels.csv")
        assert len(set(labels[:5])) == 1 and len(set(labels[5:])) == 1
        assert labels[0] != labels[5]
        batch_lines = open(f"{out}_batch.csv").read().splitlines()
        assert batch_lines[0] == "seed,modularity,classification,wall_time_ms"
        assert len(batch_lines) == 4
        trace_lines = open(f"{out}_trace.csv").read().splitlines()
        assert trace_lines[0] == "iteration,balanced_tv,modularity"
        assert len(trace_lines) >= 2

    def test_byte_identical_reruns(self, tmp_path):
        edges = write_cliques(tmp_path)
        outputs = []
        for run_dir in ("a", "b"):
            out = tmp_path / run_dir
            code = main([
                "partition", "--edges", str(edges), "--nhat", "2",
                "--seed", "5", "--repeat", "4", "--out", str(out), "--trace",
            ])
            assert code == 0
            labels_bytes = open(f"{out}_labels.csv", "rb").read()
            trace_bytes = open(f"{out}_trace.csv", "rb").read()
            batch = [
                line.split(",")[:3]  # all columns except wall_time_ms
                for line in open(f"{out}_batch.csv").read().splitlines()
            ]
            outputs.append((labels_bytes, trace_bytes, batch))
        assert outputs[0] == outputs[1]

    def test_generate_build_partition_pipeline(self, tmp_path):
        pts = tmp_path / "pts.csv"
        truth = tmp_path / "truth.csv"
        assert main([
            "generate", "two-moons", "--n", "120", "--dim", "4",
            "--noise", "0.05", "--seed", "1", "--out", str(pts),
            "--labels-out", str(truth),
        ]) == 0
        graph_file = tmp_path / "g.txt"
        assert main([
            "build-graph", "--features", str(pts), "--knn", "6",
            "--out", str(graph_file),
        ]) == 0
        out = tmp_path / "moons"
        assert main([
            "partition", "--edges", str(graph_file), "--gamma", "0.5",
            "--nhat", "2", "--repeat", "2", "--truth", str(truth),
            "--out", str(out),
        ]) == 0
        labels = load_labels(f"{out}_labels.csv")
        assert labels.size == 120

    def test_features_input_direct(self, tmp_path):
        pts = tmp_path / "pts.csv"
        main([
            "generate", "two-moons", "--n", "80", "--dim", "3",
            "--noise", "0.05", "--seed", "3", "--out", str(pts),
        ])
        out = tmp_path / "direct"
        assert main([
            "partition", "--features", str(pts), "--knn", "5",
            "--nhat", "2", "--out", str(out),
        ]) == 0

    def test_recursive_and_sweep_commands(self, tmp_path):
        edges = tmp_path / "planted.txt"
        truth = tmp_path / "truth.csv"
        assert main([
            "generate", "planted", "--n", "90", "--communities", "3",
            "--degree-in", "8", "--degree-out", "0.5", "--seed", "2",
            "--out", str(edges), "--labels-out", str(truth),
        ]) == 0
        assert main([
            "partition", "--edges", str(edges), "--recursive",
            "--truth", str(truth), "--out", str(tmp_path / "rec"),
        ]) == 0
        assert main([
            "partition", "--edges", str(edges), "--sweep", "2..4",
            "--truth", str(truth), "--out", str(tmp_path / "swp"),
        ]) == 0

    def test_supervision_flag(self, tmp_path):
        edges = write_cliques(tmp_path)
        sup = tmp_path / "sup.csv"
        sup.write_text("node,label\n0,0\n5,1\n")
        out = tmp_path / "sup_run"
        assert main([
            "partition", "--edges", str(edges), "--nhat", "2",
            "--supervision", str(sup), "--supervision-weight", "100",
            "--out", str(out),
        ]) == 0
        labels = load_labels(f"{out}_labels.csv")
        assert labels[0] == 0 and labels[5] == 1

    def test_metrics_command(self, tmp_path, capsys):
        pred = tmp_path / "pred.csv"
        truth = tmp_path / "truth.csv"
        save_labels(pred, [0, 0, 1, 1])
        save_labels(truth, [1, 1, 0, 0])
        assert main(["metrics", "--pred", str(pred), "--truth", str(truth)]) == 0
        printed = capsys.readouterr().out
        assert "purity: 1.0" in printed
        assert "classification: 1.0" in printed

    def test_metrics_batch_consistency(self, tmp_path, capsys):
        pred = tmp_path / "pred.csv"
        save_labels(pred, [0, 1])
        batch = tmp_path / "batch.csv"
        batch.write_text(
            "seed,modularity,classification,wall_time_ms\n"
            "0,1.0,1.0,3.0\n1,0.97,0.99,3.0\n2,0.5,0.4,3.0\n"
        )
        assert main([
            "metrics", "--pred", str(pred), "--truth", str(pred),
            "--batch", str(batch), "--tol", "0.02",
        ]) == 0
        printed = capsys.readouterr().out
        assert "modularity consistency" in printed

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("0 1 -5\n")
        code = main(["partition", "--edges", str(bad), "--nhat", "2", "--out", "x"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_thread_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BALANCED_TV_THREADS", "2")
        edges = write_cliques(tmp_path)
        out = tmp_path / "threaded"
        assert main([
            "partition", "--edges", str(edges), "--nhat", "2",
            "--repeat", "4", "--out", str(out),
        ]) == 0
        batch_lines = open(f"{out}_batch.csv").read().splitlines()
        assert len(batch_lines) == 5
