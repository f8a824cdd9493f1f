import json

import numpy as np
import pytest

from pqprune import cli
from pqprune.config import (
    ExperimentConfig,
    IdxPaths,
    load_config,
    parse_config,
    serialize_config,
)
from pqprune.data_io import SyntheticSpec
from pqprune.experiment import trajectory_stats
from pqprune.pruning import Scope
from pqprune.records import IterationMetrics, RunRecord

TINY_CONFIG = """
# desk config for fast tests
model = Linear
scope = global
dataset.kind = synthetic
dataset.n_samples = 200
dataset.n_features = 8
dataset.n_classes = 2
dataset.class_separation = 5.0
dataset.seed = 0
algorithm.kinds = sap,lottery_ticket
algorithm.iterations = 3
train.epochs = 2
train.batch_size = 32
seeds = 0,1
output_dir = runs
"""


class TestConfig:
    def test_defaults_match_desk_analog(self):
        cfg = ExperimentConfig()
        assert cfg.model == "MLP"
        assert cfg.scope == Scope.GLOBAL
        assert cfg.algorithm_kinds == ["sap"]
        assert (cfg.sap.norms.p, cfg.sap.norms.q) == (0.5, 1.0)
        assert (cfg.sap.eta, cfg.sap.gamma, cfg.sap.beta) == (0.0, 1.0, 0.9)
        assert cfg.ratio == 0.2
        assert cfg.seeds == [0, 1, 2, 3]

    def test_round_trip_identity(self):
        cfg = parse_config(TINY_CONFIG)
        assert parse_config(serialize_config(cfg)) == cfg

    def test_idx_dataset_round_trip(self):
        text = TINY_CONFIG.replace(
            "dataset.kind = synthetic",
            "dataset.kind = idx\n"
            "dataset.train_images = a\ndataset.train_labels = b\n"
            "dataset.test_images = c\ndataset.test_labels = d",
        )
        for key in ("n_samples", "n_features", "n_classes", "class_separation", "seed"):
            text = "\n".join(
                l for l in text.splitlines() if not l.startswith(f"dataset.{key}")
            )
        cfg = parse_config(text)
        assert cfg.dataset == IdxPaths("a", "b", "c", "d")
        assert parse_config(serialize_config(cfg)) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            parse_config("model = MLP\nbogus.key = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_config("model = MLP\nmodel = Linear\n")


def run_cli(argv):
    return cli.main(argv)


class TestMeasureCommand:
    def test_known_vector(self, tmp_path, capsys):
        path = tmp_path / "w.txt"
        path.write_text("1\n2\n3\n4\n")
        assert run_cli(["measure", str(path), "--p", "0.5", "--q", "1.0"]) == 0
        out = capsys.readouterr().out
        assert "pq_index = 0.0555858574" in out
        assert "gini_index = 0.25" in out
        assert out.count("true") == 4  # the bound holds at every r

    def test_uniform_vector(self, tmp_path, capsys):
        path = tmp_path / "w.txt"
        path.write_text("2\n2\n2\n")
        assert run_cli(["measure", str(path)]) == 0
        out = capsys.readouterr().out
        values = {
            line.split(" = ")[0]: float(line.split(" = ")[1])
            for line in out.splitlines()
            if " = " in line
        }
        assert abs(values["pq_index"]) < 1e-12
        assert abs(values["gini_index"]) < 1e-12

    def test_one_hot(self, tmp_path, capsys):
        path = tmp_path / "w.txt"
        path.write_text("0\n0\n0\n1\n")
        assert run_cli(["measure", str(path)]) == 0
        assert "pq_index = 0.75" in capsys.readouterr().out

    def test_all_zero_exit_2(self, tmp_path, capsys):
        path = tmp_path / "w.txt"
        path.write_text("0\n0\n")
        assert run_cli(["measure", str(path)]) == 2
        assert "index undefined" in capsys.readouterr().err


class TestAuditCommand:
    def test_pq_clean_exit_0(self, capsys):
        assert run_cli(["audit", "--measure", "pq", "--trials", "100"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert all(r["violations"] == 0 for r in data["results"])

    def test_gini_clean_exit_0(self, capsys):
        assert run_cli(["audit", "--measure", "gini", "--trials", "100"]) == 0

    def test_negative_search_reports_without_failing(self, capsys):
        rc = run_cli(
            ["audit", "--measure", "pq", "--p", "0.3", "--q", "0.7",
             "--trials", "20", "--negative"]
        )
        assert rc == 0
        assert "negative robin_hood search: found" in capsys.readouterr().out


@pytest.fixture(scope="module")
def run_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("cells")
    cfg_path = root / "exp.cfg"
    cfg_path.write_text(TINY_CONFIG)
    rc = cli.main(["run", "--config", str(cfg_path), "--out", str(root / "out")])
    assert rc == 0
    return root


class TestRunAndReport:

    def test_cell_directories_and_summary(self, run_root):
        out = run_root / "out"
        dirs = sorted(p.name for p in out.iterdir() if p.is_dir())
        assert dirs == [
            "lottery_ticket_seed0",
            "lottery_ticket_seed1",
            "sap_seed0",
            "sap_seed1",
        ]
        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("algorithm,t,n_seeds")
        # 2 algorithms x (T+1) iterations
        assert len(summary) == 1 + 2 * 4

    def test_rerun_identical_bytes(self, run_root, tmp_path):
        cfg_path = run_root / "exp.cfg"
        assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
        for cell in ("sap_seed0", "lottery_ticket_seed1"):
            a = (run_root / "out" / cell / "iterations.csv").read_bytes()
            b = (tmp_path / cell / "iterations.csv").read_bytes()
            assert a == b

    def test_report_panels(self, run_root, tmp_path):
        dirs = [str(run_root / "out" / f"sap_seed{s}") for s in (0, 1)]
        assert cli.main(["report", *dirs, "--out", str(tmp_path)]) == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == [
            "panel_gini.csv",
            "panel_performance.csv",
            "panel_pqi.csv",
            "panel_remaining.csv",
            "trajectory_stats.json",
        ]
        stats = json.loads((tmp_path / "trajectory_stats.json").read_text())
        assert set(stats) == {"pqi_argmin", "pqi_argmax", "spearman_pqi_gini"}

    def test_report_mixed_configs_rejected(self, run_root, tmp_path):
        dirs = [
            str(run_root / "out" / "sap_seed0"),
            str(run_root / "out" / "lottery_ticket_seed0"),
        ]
        assert cli.main(["report", *dirs, "--out", str(tmp_path)]) == 2

    def test_env_var_output_root(self, run_root, tmp_path, monkeypatch):
        monkeypatch.setenv("PQI_PRUNE_OUT", str(tmp_path / "envout"))
        cfg_path = run_root / "exp.cfg"
        assert cli.main(["run", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "envout" / "summary.csv").exists()


def synthetic_record(pqi_traj, gini_traj):
    rec = RunRecord(config={"algorithm": "sap"})
    for t, (a, b) in enumerate(zip(pqi_traj, gini_traj)):
        rec.iterations.append(
            IterationMetrics(
                t=t, d_t=100, percent_remaining=1.0,
                acc_retrained=0.9, loss_retrained=0.1,
                acc_pruned=0.9, loss_pruned=0.1,
                pqi_retrained=a, pqi_pruned=a,
                gini_retrained=b, delta_acc=0.0, delta_pqi=0.0,
            )
        )
    return rec


class TestTrajectoryStats:
    def test_identical_trajectories_spearman_one(self):
        traj = [0.5, 0.3, 0.4, 0.6]
        stats = trajectory_stats([synthetic_record(traj, traj)])
        assert stats["spearman_pqi_gini"] == pytest.approx(1.0)
        assert stats["pqi_argmin"] == 1
        assert stats["pqi_argmax"] == 3

    def test_monotone_trajectory_boundary_argmin(self):
        traj = [0.5, 0.4, 0.3, 0.2]
        stats = trajectory_stats([synthetic_record(traj, traj)])
        assert stats["pqi_argmin"] == 3
        assert stats["pqi_argmax"] == 0
