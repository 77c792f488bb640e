"""End-to-end command-line driver tests on desk-sized problems."""

import json
import os

import numpy as np
import pytest

from fungraph.cli import main


def run_cli(args):
    return main(args)


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    code = run_cli([
        "simulate", "--scenario", "ar1", "--dynamic", "1", "--n", "6", "--p", "3",
        "--T", "16", "--seed", "1", "--out-dir", str(out), "--ar-coeff", "0.4",
    ])
    assert code == 0
    return out


class TestSimulate:
    def test_outputs_exist_with_exact_headers(self, sim_dir):
        data_lines = (sim_dir / "data.csv").read_text().splitlines()
        assert data_lines[0] == "subject,variable,t,value"
        assert len(data_lines) == 1 + 6 * 3 * 16
        truth_lines = (sim_dir / "truth.csv").read_text().splitlines()
        assert truth_lines[0] == "t,j,l"
        assert (sim_dir / "scenario.json").exists()
        assert (sim_dir / "manifest.json").exists()

    def test_same_seed_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_cli([
                "simulate", "--scenario", "changepoint", "--n", "4", "--p", "3",
                "--T", "8", "--seed", "7", "--out-dir", str(out),
            ])
            outs.append((out / "data.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_t0_recorded_in_manifests(self, tmp_path):
        out = tmp_path / "cp"
        run_cli([
            "simulate", "--scenario", "changepoint", "--t0", "6", "--n", "3",
            "--p", "3", "--T", "12", "--seed", "2", "--out-dir", str(out),
        ])
        scenario = json.loads((out / "scenario.json").read_text())
        assert scenario["t0"] == 6
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["resolved_config"]["t0"] == 6

    def test_small_p_uses_scaled_default_edges(self, tmp_path):
        code = run_cli(["simulate", "--p", "2", "--n", "2", "--T", "8",
                        "--out-dir", str(tmp_path / "x")])
        assert code == 0


class TestFit:
    def test_identity_fit_runs(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = run_cli([
            "fit", "--data", str(sim_dir / "data.csv"), "--basis", "identity",
            "--iters", "60", "--burnin", "20", "--thin", "4", "--seed", "3",
            "--out-dir", str(out), "--dump-chains", "--lag-pair", "1,2", "--lag-t", "1",
        ])
        assert code == 0
        lines = (out / "edges.csv").read_text().splitlines()
        assert lines[0] == "t,j,l,mean,lb,ub,selected"
        assert len(lines) == 1 + 16 * 3
        assert (out / "chains" / "chain_k1.csv").exists()
        assert (out / "lagprofile.csv").read_text().splitlines()[0] == "t,tprime,j,l,mean"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["resolved_config"]["iters"] == 60
        assert "sample" in manifest["timings_sec"]

    def test_wavelet_fit_retained_draw_count(self, tmp_path):
        sim = tmp_path / "sim16"
        run_cli(["simulate", "--n", "5", "--p", "3", "--T", "16", "--seed", "4",
                 "--out-dir", str(sim)])
        out = tmp_path / "fit16"
        code = run_cli([
            "fit", "--data", str(sim / "data.csv"), "--basis", "wavelet-db2",
            "--levels", "2", "--iters", "45", "--burnin", "15", "--thin", "10",
            "--seed", "5", "--out-dir", str(out),
        ])
        assert code == 0  # (45 - 15) / 10 = 3 retained draws per slab

    def test_missing_data_flag_exits_2(self, tmp_path):
        assert run_cli(["fit", "--out-dir", str(tmp_path)]) == 2

    def test_nonexistent_data_exits_3(self, tmp_path):
        assert run_cli(["fit", "--data", str(tmp_path / "nope.csv")]) == 3

    def test_incompatible_wavelet_grid_exits_2(self, sim_dir, tmp_path):
        code = run_cli([
            "fit", "--data", str(sim_dir / "data.csv"), "--basis", "wavelet-db2",
            "--levels", "5", "--iters", "30", "--burnin", "10",
            "--out-dir", str(tmp_path / "w"),
        ])
        assert code == 2  # T=16 not divisible by 2^5

    def test_replay_reproduces_outputs(self, sim_dir, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        args = [
            "fit", "--data", str(sim_dir / "data.csv"), "--basis", "identity",
            "--iters", "40", "--burnin", "10", "--thin", "3", "--seed", "11",
            "--out-dir", str(out1),
        ]
        assert run_cli(args) == 0
        assert run_cli(["fit", "--replay", str(out1 / "manifest.json"),
                        "--out-dir", str(out2)]) == 0
        assert (out1 / "edges.csv").read_bytes() == (out2 / "edges.csv").read_bytes()

    def test_config_file_layer(self, sim_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("basis=identity\niters=40\nburnin=10\nthin=3\nseed=2\n")
        out = tmp_path / "cfgfit"
        code = run_cli([
            "fit", "--data", str(sim_dir / "data.csv"), "--config", str(cfg),
            "--iters", "50",  # flag overrides file
            "--out-dir", str(out),
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["resolved_config"]["iters"] == 50
        assert manifest["resolved_config"]["basis"] == "identity"

    def test_workers_env_fallback(self, sim_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("FUNGRAPH_THREADS", "2")
        out = tmp_path / "envfit"
        code = run_cli([
            "fit", "--data", str(sim_dir / "data.csv"), "--basis", "identity",
            "--iters", "30", "--burnin", "10", "--thin", "2", "--seed", "1",
            "--out-dir", str(out),
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["resolved_config"]["workers"] == 2


class TestEvaluate:
    def test_perfect_edges(self, sim_dir, tmp_path):
        # build an edges.csv that reproduces the truth exactly
        truth_lines = (sim_dir / "truth.csv").read_text().splitlines()[1:]
        present = {tuple(int(v) for v in line.split(",")) for line in truth_lines}
        edges_path = tmp_path / "edges.csv"
        with open(edges_path, "w") as fh:
            fh.write("t,j,l,mean,lb,ub,selected\n")
            for t in range(1, 17):
                for j, l in ((1, 2), (1, 3), (2, 3)):
                    sel = (t, j, l) in present
                    mean = 0.5 if sel else 0.001
                    lb, ub = (0.3, 0.7) if sel else (-0.1, 0.1)
                    fh.write(f"{t},{j},{l},{mean},{lb},{ub},{int(sel)}\n")
        out = tmp_path / "eval"
        code = run_cli([
            "evaluate", "--truth", str(sim_dir / "truth.csv"),
            "--edges", str(edges_path), "--out-dir", str(out),
        ])
        assert code == 0
        roc = (out / "roc.csv").read_text().splitlines()
        assert roc[0] == "fpr,tpr"
        cols = np.array([[float(v) for v in line.split(",")] for line in roc[1:]])
        assert np.all(np.diff(cols[:, 0]) >= 0) and np.all(np.diff(cols[:, 1]) >= 0)

    def test_scores_path(self, sim_dir, tmp_path):
        scores_path = tmp_path / "scores.csv"
        rng = np.random.default_rng(0)
        with open(scores_path, "w") as fh:
            fh.write("t,j,l,score\n")
            for t in range(1, 17):
                for j, l in ((1, 2), (1, 3), (2, 3)):
                    fh.write(f"{t},{j},{l},{rng.uniform():.6f}\n")
        out = tmp_path / "eval2"
        code = run_cli([
            "evaluate", "--truth", str(sim_dir / "truth.csv"),
            "--scores", str(scores_path), "--out-dir", str(out),
        ])
        assert code == 0
        assert (out / "roc.csv").exists()

    def test_missing_inputs_exit_codes(self, tmp_path):
        assert run_cli(["evaluate", "--edges", "x"]) == 2
        assert run_cli(["evaluate", "--truth", str(tmp_path / "no.csv"), "--edges",
                        str(tmp_path / "no2.csv")]) == 3


class TestShrinkage:
    def test_single_rate_pdf_is_exponential(self, tmp_path):
        out = tmp_path / "sh"
        code = run_cli([
            "shrinkage", "--rates", "1", "--n", "1", "--x-grid", "0:5:51",
            "--grid=-50:50:41", "--out-dir", str(out),
        ])
        assert code == 0
        rows = [line.split(",") for line in (out / "hypopdf.csv").read_text().splitlines()[1:]]
        xs = np.array([float(r[0]) for r in rows])
        pdf = np.array([float(r[1]) for r in rows])
        assert np.max(np.abs(pdf - np.exp(-xs))) < 1e-10

    def test_s_table_odd_and_tail(self, tmp_path):
        out = tmp_path / "sh2"
        code = run_cli([
            "shrinkage", "--rates", "4,16", "--n", "1", "--grid=-25:25:101",
            "--out-dir", str(out),
        ])
        assert code == 0
        rows = [line.split(",") for line in (out / "shrinkage.csv").read_text().splitlines()[1:]]
        ybar = np.array([float(r[0]) for r in rows])
        s = np.array([float(r[1]) for r in rows])
        m = np.array([float(r[2]) for r in rows])
        assert np.allclose(s + s[::-1], 0.0, atol=1e-9)  # odd symmetry
        assert np.all(m > 0)
        tail = s[np.argmin(np.abs(ybar - 25.0))]
        assert abs(tail) == pytest.approx(2.0, rel=0.02)  # sqrt(min rate)

    def test_degenerate_rates_exit_2(self, tmp_path):
        assert run_cli(["shrinkage", "--rates", "2,2", "--out-dir", str(tmp_path)]) == 2
        assert run_cli(["shrinkage", "--rates", "1,-3", "--out-dir", str(tmp_path)]) == 2
