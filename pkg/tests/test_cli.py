import json

import numpy as np
import pytest

from lsbounds import ModelKind, NetworkModel, TANH, model_to_dict
from lsbounds.cli import main

from conftest import cycle_adjacency, k4_adjacency


def write_k4_edgelist(path):
    lines = [f"{i} {j}" for i in range(4) for j in range(i + 1, 4)]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return path


class TestSpectrumCommand:
    @staticmethod
    def parse(out):
        return dict(part.split("=") for part in out.split())

    def test_k4(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        assert main(["spectrum", str(edges)]) == 0
        fields = self.parse(capsys.readouterr().out)
        assert fields["n"] == "4" and fields["k"] == "3"
        assert float(fields["lambda2"]) == pytest.approx(-1.0, abs=1e-9)
        assert float(fields["lambda_prime"]) == pytest.approx(1.0, abs=1e-9)

    def test_c6(self, tmp_path, capsys):
        path = tmp_path / "c6.txt"
        path.write_text("\n".join(f"{i} {(i + 1) % 6}" for i in range(6)) + "\n")
        assert main(["spectrum", str(path)]) == 0
        fields = self.parse(capsys.readouterr().out)
        assert fields["k"] == "2"
        assert float(fields["lambda2"]) == pytest.approx(1.0, abs=1e-9)
        assert float(fields["lambda_prime"]) == pytest.approx(2.0, abs=1e-9)

    def test_malformed_line_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("0 1\n1 x\n")
        assert main(["spectrum", str(path)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_csv_output(self, tmp_path):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        out = tmp_path / "spec.csv"
        assert main(["spectrum", str(edges), "--csv", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,k,lambda1,lambda2,lambda_min,lambda_prime"
        assert lines[1].startswith("4,3,")


class TestBoundCommand:
    def test_k4_analytic(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "cfg.json",
            {"graph": str(edges), "d": 1.0, "kind": "hopfield", "seed": 1},
        )
        assert main(["bound", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "analytic"
        assert payload["feasible"] is True
        assert payload["r_par"] == pytest.approx(4.0 / 3, rel=0.02)

    def test_k4_forced_generic(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "cfg.json",
            {
                "graph": str(edges), "d": 1.0, "kind": "hopfield",
                "force_generic": True, "budget": 1024, "seed": 2,
                "r_perp": 0.02, "tol": 0.005,
            },
        )
        assert main(["bound", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "sampled"
        assert payload["r_par"] == pytest.approx(4.0 / 3, rel=0.02)

    def test_fixed_radii_certificate(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "cfg.json",
            {
                "graph": str(edges), "d": 1.0, "kind": "hopfield",
                "radii": {"r_par": 0.5, "r_perp": 1.0},
            },
        )
        assert main(["bound", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["margin"] == pytest.approx(4.0 / 3 - 0.5, abs=1e-12)

    def test_biased_model_uses_sampled_path(self, tmp_path, capsys):
        model = NetworkModel(
            ModelKind.HOPFIELD,
            A=cycle_adjacency(4),
            C=np.ones(4),
            b=0.3 * np.array([1.0, -1.0, 1.0, -1.0]),
            activation=TANH,
        )
        cfg = write_config(
            tmp_path / "cfg.json",
            {
                "model": model_to_dict(model), "p_range": [0.1, 1.0],
                "budget": 512, "seed": 3, "r_perp": 0.5,
            },
        )
        assert main(["bound", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["method"] == "sampled"
        assert payload["feasible"] is True
        assert np.isfinite(payload["margin"])
        assert payload["m_par"] > 0

    def test_missing_config_is_input_error(self, tmp_path, capsys):
        assert main(["bound", str(tmp_path / "absent.json")]) == 1

    def test_invalid_json_is_input_error(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert main(["bound", str(cfg)]) == 1


class TestSweepCommand:
    def sweep_config(self, tmp_path, **overrides):
        payload = {
            "n_values": [8, 6], "k_values": [3, 6], "d": 1.0,
            "graphs_per_cell": 4, "seed": 5,
        }
        payload.update(overrides)
        return write_config(tmp_path / "sweep.json", payload)

    def test_rows_sorted_and_consistent(self, tmp_path):
        cfg = self.sweep_config(tmp_path)
        rows_path = tmp_path / "rows.csv"
        agg_path = tmp_path / "agg.csv"
        assert main(["sweep", str(cfg), "--rows", str(rows_path),
                     "--aggregate", str(agg_path)]) == 0
        rows = rows_path.read_text().splitlines()
        assert rows[0] == "n,k,d,seed,lambda2,lambda_min,lambda_prime,r_par_bound"
        # feasible cells: (8,3), (8,6), (6,3); (6,6) has k >= n
        assert len(rows) == 1 + 3 * 4
        keys = [tuple(map(int, r.split(",")[:2])) for r in rows[1:]]
        assert keys == sorted(keys)
        # every row reproduces its own bound from its spectral columns
        for row in rows[1:]:
            f = row.split(",")
            n, k, d = int(f[0]), int(f[1]), float(f[2])
            lambda2, lambda_prime = float(f[4]), float(f[6])
            assert float(f[7]) == pytest.approx(
                d * (k - lambda2) / (k * lambda_prime), abs=1e-12
            )
        agg = agg_path.read_text().splitlines()
        assert agg[0] == "n,k,mean_r_par,std_r_par"
        assert len(agg) == 4

    def test_byte_identical_reruns_and_thread_independence(self, tmp_path, monkeypatch):
        cfg = self.sweep_config(tmp_path)
        outputs = []
        for threads in ("1", "4"):
            monkeypatch.setenv("LSB_THREADS", threads)
            path = tmp_path / f"rows_{threads}.csv"
            assert main(["sweep", str(cfg), "--rows", str(path)]) == 0
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]
        monkeypatch.delenv("LSB_THREADS")
        path = tmp_path / "rows_again.csv"
        assert main(["sweep", str(cfg), "--rows", str(path)]) == 0
        assert path.read_bytes() == outputs[0]

    def test_complete_graph_cell_has_zero_std(self, tmp_path):
        cfg = write_config(
            tmp_path / "complete.json",
            {"n_values": [5], "k_values": [4], "d": 1.0, "graphs_per_cell": 6,
             "seed": 9},
        )
        agg_path = tmp_path / "agg.csv"
        assert main(["sweep", str(cfg), "--rows", str(tmp_path / "r.csv"),
                     "--aggregate", str(agg_path)]) == 0
        n, k, mean, std = agg_path.read_text().splitlines()[1].split(",")
        assert float(std) == 0.0
        assert float(mean) == pytest.approx(1.0 * 5 / 4, abs=1e-12)

    def test_svg_written(self, tmp_path):
        cfg = self.sweep_config(tmp_path)
        svg = tmp_path / "fig.svg"
        assert main(["sweep", str(cfg), "--rows", str(tmp_path / "r.csv"),
                     "--svg", str(svg)]) == 0
        text = svg.read_text()
        assert text.startswith("<svg") and "polyline" in text

    def test_invalid_threads_value(self, tmp_path, monkeypatch):
        cfg = self.sweep_config(tmp_path)
        monkeypatch.setenv("LSB_THREADS", "zero")
        assert main(["sweep", str(cfg), "--rows", str(tmp_path / "x.csv")]) == 1


class TestVerifyCommand:
    def test_k4_half_ball(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "verify.json",
            {"graph": str(edges), "d": 1.0, "kind": "hopfield",
             "ball_fraction": 0.5, "grid": 5, "starts": 2},
        )
        assert main(["verify", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["success_fraction"] == 1.0
        assert payload["uniqueness_violations"] == 0

    def test_zero_fraction_rejected(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "verify.json",
            {"graph": str(edges), "d": 1.0, "kind": "hopfield",
             "ball_fraction": 0.0},
        )
        assert main(["verify", str(cfg)]) == 1

    def test_exploration_fraction_exits_zero(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "verify.json",
            {"graph": str(edges), "d": 1.0, "kind": "hopfield",
             "ball_fraction": 3.0, "grid": 3, "starts": 1},
        )
        assert main(["verify", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert 0.0 <= payload["success_fraction"] <= 1.0


class TestFrontierCommand:
    def test_grid_scan(self, tmp_path, capsys):
        edges = write_k4_edgelist(tmp_path / "k4.txt")
        cfg = write_config(
            tmp_path / "frontier.json",
            {
                "graph": str(edges), "d": 1.0, "kind": "hopfield",
                "r_par_values": [0.5, 2.0],
                "r_perp_values": {"min": 0.5, "max": 1.0, "count": 2},
            },
        )
        out = tmp_path / "front.csv"
        assert main(["frontier", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "r_par,r_perp,margin,feasible,method"
        assert len(lines) == 5
        table = {
            (float(f[0]), float(f[1])): f[3]
            for f in (line.split(",") for line in lines[1:])
        }
        assert table[(0.5, 1.0)] == "true"
        assert table[(2.0, 1.0)] == "false"

    def test_generated_graph_instance(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path / "frontier.json",
            {
                "graph": {"n": 10, "k": 3, "seed": 4}, "d": 1.0,
                "kind": "firing_rate",
                "r_par_values": [0.05], "r_perp_values": [0.5],
            },
        )
        assert main(["frontier", str(cfg)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2 and lines[1].endswith("analytic")
