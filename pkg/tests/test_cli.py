"""End-to-end CLI runs: outputs, formats, determinism, exit codes."""

import json
import math

import pytest

from extsteklov.cli import main

TWO_PI_3 = 2.0 * math.pi / 3.0


def run(args):
    return main([str(a) for a in args])


def read_csv(path):
    comments, rows = [], []
    for line in path.read_text().splitlines():
        (comments if line.startswith("#") else rows).append(line)
    return comments, rows


class TestSpectrum:
    def test_csv_contents(self, tmp_path):
        assert run(["spectrum", "--out", tmp_path, "--set", "lmax=3"]) == 0
        comments, rows = read_csv(tmp_path / "spectrum.csv")
        assert "# lmax = 3" in comments
        assert rows[0] == "l,multiplicity,delta_exact,delta_truncated"
        assert len(rows) == 5
        first = rows[1].split(",")
        assert first[:3] == ["0", "1", "1.0"]
        assert float(first[3]) == pytest.approx(1.1, rel=1e-4)
        # eigenvalues are exact integers rendered as floats
        assert rows[2].split(",")[2] == "2.0"

    def test_higher_dim_leaves_truncated_empty(self, tmp_path):
        assert run(["spectrum", "--out", tmp_path, "--set", "dim=4",
                    "--set", "lmax=2"]) == 0
        _, rows = read_csv(tmp_path / "spectrum.csv")
        assert rows[1] == "0,,2.0,"
        assert rows[2] == "1,,3.0,"

    def test_plot_written(self, tmp_path):
        assert run(["spectrum", "--out", tmp_path, "--set", "lmax=2",
                    "--plot"]) == 0
        svg = (tmp_path / "spectrum.svg").read_text()
        assert svg.lstrip().startswith("<?xml")


class TestSolve:
    def test_manufactured_concave(self, tmp_path):
        assert run(["solve", "--out", tmp_path, "--seed", 3,
                    "--set", "lam=1", "--set", "mu=0",
                    "--set", "kmax=9", "--set", "starts_per_rung=2"]) == 0
        doc = json.loads((tmp_path / "solve.json").read_text())
        assert doc["command"] == "solve"
        assert doc["config"]["kmax"] == 9
        assert doc["config"]["seed"] == 3
        energies = [s["energy"] for s in doc["solutions"]]
        assert any(abs(e + TWO_PI_3) < 1e-8 for e in energies)
        assert doc["prop31_all_ok"] is True
        assert doc["distinct_positive_energies"] == []
        assert any("mu <= 0" in n for n in doc["notes"])
        ks = [r["k"] for r in doc["constants"]["rungs"]]
        assert ks == list(range(1, 10))
        for row in doc["constants"]["rungs"]:
            assert row["rho"] is None  # convex branch disabled at mu = 0
            assert row["dual_varrho"] > 0.0

    def test_determinism_modulo_timestamp(self, tmp_path):
        args = ["solve", "--out", None, "--seed", 11, "--set", "kmax=9",
                "--set", "starts_per_rung=2"]
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            args[2] = d
            assert run(args) == 0
            # both runs embed their own out_dir in the config; normalize it
            text = (d / "solve.json").read_text().replace(str(d), "OUT")
            lines = [ln for ln in text.splitlines()
                     if '"generated"' not in ln]
            outs.append(lines)
        assert outs[0] == outs[1]

    def test_solution_entries_are_complete(self, tmp_path):
        assert run(["solve", "--out", tmp_path, "--seed", 0,
                    "--set", "kmax=9", "--set", "starts_per_rung=2"]) == 0
        doc = json.loads((tmp_path / "solve.json").read_text())
        for sol in doc["solutions"]:
            assert sol["sign_class"] in ("positive", "negative", "zero")
            assert len(sol["coefficients"]) == 9
            assert sol["bvp_residual"] >= 0.0
            if sol["sign_class"] != "zero":
                assert sol["prop31_ok"] is True


class TestPsteklov:
    def test_eigenvalue_and_extrapolation(self, tmp_path):
        assert run(["psteklov", "--out", tmp_path, "--set", "p=1.5",
                    "--set", "radius=5,11", "--set", "mesh_nodes=200"]) == 0
        doc = json.loads((tmp_path / "psteklov.json").read_text())
        assert doc["command"] == "psteklov"
        assert len(doc["runs"]) == 2
        for entry, R in zip(doc["runs"], (5.0, 11.0)):
            assert entry["radius"] == R
            assert entry["converged"] is True
            assert entry["delta"] > 0.0
            nodes = entry["eigenfunction"]["nodes"]
            values = entry["eigenfunction"]["values"]
            assert len(nodes) == len(values)
            assert values[-1] == 0.0
        assert doc["extrapolated_delta"] == pytest.approx(
            math.sqrt(3.0), rel=5e-3)
        assert doc["exterior_closed_form"] == pytest.approx(
            math.sqrt(3.0), rel=1e-12)

    def test_single_radius_skips_extrapolation(self, tmp_path):
        assert run(["psteklov", "--out", tmp_path, "--set", "p=2.0",
                    "--set", "radius=11", "--set", "mesh_nodes=100"]) == 0
        doc = json.loads((tmp_path / "psteklov.json").read_text())
        assert doc["extrapolated_delta"] is None


class TestConstants:
    def test_csv_columns(self, tmp_path):
        assert run(["constants", "--out", tmp_path, "--set", "kmax=4",
                    "--set", "include_s2=true"]) == 0
        comments, rows = read_csv(tmp_path / "constants.csv")
        header = rows[0].split(",")
        assert header == ["k", "alpha_k", "beta_k", "rho_k", "varrho_k",
                          "dual_rho_k", "dual_varrho_k", "s2_k"]
        assert len(rows) == 5
        body = [r.split(",") for r in rows[1:]]
        alphas = [float(r[1]) for r in body]
        assert alphas == sorted(alphas, reverse=True)
        # s2 column equals delta_k^(-1/2)
        deltas = [1.0, 2.0, 2.0, 2.0]
        for row, d in zip(body, deltas):
            assert float(row[7]) == pytest.approx(d ** -0.5, abs=1e-9)

    def test_disabled_branch_leaves_columns_empty(self, tmp_path):
        assert run(["constants", "--out", tmp_path, "--set", "mu=0",
                    "--set", "kmax=4"]) == 0
        comments, rows = read_csv(tmp_path / "constants.csv")
        assert any("mu <= 0" in c for c in comments)
        body = rows[1].split(",")
        assert body[3] == "" and body[4] == ""
        assert float(body[5]) > 0.0


class TestConfigPlumbing:
    def test_config_file_with_override(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("lmax = 2\ndim = 4\n")
        out = tmp_path / "out"
        assert run(["spectrum", "--config", cfgfile, "--out", out,
                    "--set", "dim=5"]) == 0
        _, rows = read_csv(out / "spectrum.csv")
        assert rows[1].split(",")[2] == "3.0"  # delta_0 = N - 2 = 3

    def test_missing_config_file(self, tmp_path, capsys):
        assert run(["spectrum", "--config", tmp_path / "nope.cfg",
                    "--out", tmp_path]) == 2
        assert "error" in capsys.readouterr().err.lower()


class TestExitCodes:
    def test_invalid_dim(self, tmp_path, capsys):
        assert run(["spectrum", "--out", tmp_path, "--set", "dim=2"]) == 2
        assert "dim" in capsys.readouterr().err

    def test_psteklov_p_window(self, tmp_path, capsys):
        assert run(["psteklov", "--out", tmp_path, "--set", "p=3.0"]) == 2
        assert "1 < p < N" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        assert run(["spectrum", "--out", tmp_path, "--set", "nope=1"]) == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_bad_set_syntax(self, tmp_path, capsys):
        assert run(["spectrum", "--out", tmp_path, "--set", "lmax"]) == 2

    def test_nonconverged_flow_returns_one(self, tmp_path, capsys):
        # A hopeless step budget cannot converge; the report must still be
        # written and the exit code must signal the numerical failure.
        assert run(["psteklov", "--out", tmp_path, "--set", "p=1.5",
                    "--set", "radius=21", "--set", "mesh_nodes=400",
                    "--set", "flow_max_steps=3"]) == 1
        doc = json.loads((tmp_path / "psteklov.json").read_text())
        assert doc["runs"][0]["converged"] is False
        assert "tolerance" in capsys.readouterr().err
